import os
from unittest import TestCase, skipUnless

import numpy as np

from ..models.config import ExperimentConfig, ModelConfig, PlanConfig

SLOW_TESTS = os.environ.get("BEE_SLOW_TESTS", "") == "1"


def slow(test):
    """
    Skip long behavioural runs unless ``BEE_SLOW_TESTS=1``
    """
    return skipUnless(SLOW_TESTS, "set BEE_SLOW_TESTS=1 to run")(test)


SMALL_MODEL = ModelConfig(latent_dim=4, encoder_hidden=(16,), decoder_hidden=(16,),
                          dynamics_hidden=8, dynamics_head_hidden=(8,),
                          discriminator_hidden=(8,), ensemble_size=2, disagreement_heads=2,
                          smm_hidden=(8,), smm_latent_dim=2, discriminator_batch=4)

SMALL_CONFIG = ExperimentConfig(
    name="test", layout="blocks", episodes=3, warmup_episodes=1, num_examples=8,
    updates_per_episode=2, batch_size=4, metrics_window=2, model=SMALL_MODEL,
    plan=PlanConfig(num_samples=16, horizon=10, elite_count=4, top_k_choice=2),
    goal_plan=PlanConfig(num_samples=16, horizon=10, cem_iterations=2, elite_count=4,
                         top_k_choice=1, epsilon_random=0.0),
    downstream_updates=3, downstream_trials=2,
)


class LinearFixtureModel:
    """
    Stand-in world model with dynamics ``z' = z + W a``

    Frames are encoded to their mean intensity (repeated over the latent dimensions) and latents
    decode to ``1 x latent_dim`` images of their own values.
    """
    def __init__(self, weight):
        self.weight = np.atleast_2d(np.asarray(weight, dtype=np.float64))
        self.latent_dim, self.action_dim = self.weight.shape
        self.rollout_calls = 0

    def rollout(self, z0, actions):
        self.rollout_calls += 1
        actions = np.asarray(actions, dtype=np.float64)
        return np.asarray(z0, dtype=np.float64) + np.cumsum(actions @ self.weight.T, axis=-2)

    def decode(self, z):
        z = np.asarray(z, dtype=np.float64)
        return z.reshape(z.shape[:-1] + (1, self.latent_dim))

    def encode_mean(self, images):
        images = np.asarray(images, dtype=np.float64)
        value = images.mean(axis=(-2, -1))
        return np.repeat(value[..., None], self.latent_dim, axis=-1)


class BeeTest(TestCase):
    config = SMALL_CONFIG

    def assertAllClose(self, expected, actual, atol=1e-8, rtol=0.0, msg=None):
        np.testing.assert_allclose(actual, expected, atol=atol, rtol=rtol, err_msg=msg or "")

    def assertAllEqual(self, expected, actual):
        np.testing.assert_array_equal(actual, expected)
