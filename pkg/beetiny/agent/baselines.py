"""
Baseline rewards
^^^^^^^^^^^^^^^^

Comparison exploration methods that share the planner and world model:

* model disagreement: variance of the predictions of independently initialized dynamics heads
* state marginal matching: ``log p*(z) - log p(z)``, with both densities approximated by the ELBO
  of small VAEs over latent states, one fit to the relevant examples and one to visited states
* random: uniform actions
"""
import typing

import numpy as np

from ..models import ACTION_DIM
from ..models.config import ModelConfig
from ..nn.layers import Activation
from ..nn.params import ParamTensor
from ..nn.rng import Rng
from ..utils.buffer import DEFAULT_WINDOW, ReplayBuffer
from .vae import VaeLoss, VariationalAutoencoder
from .world_model import LatentDynamics


def random_policy(rng: Rng, action_dim: int = ACTION_DIM) -> np.ndarray:
    """
    Uniform action in ``[-1, 1]`` per dimension
    """
    return rng.uniform(-1.0, 1.0, size=action_dim)


class DisagreementEnsemble:
    """
    :param config: Model settings; ``disagreement_heads`` heads of the world model's dynamics
                   architecture are built
    :param rng: Initialization and training streams
    :param action_dim: Action size
    """
    def __init__(self, config: ModelConfig, rng: Rng, action_dim: int = ACTION_DIM):
        self.config = config
        self.heads = [
            LatentDynamics(config.latent_dim, action_dim, config.dynamics_hidden,
                           config.dynamics_head_hidden, rng.child("head", index), lr=config.lr,
                           name=f"disagreement.{index}")
            for index in range(config.disagreement_heads)
        ]
        self.streams = [rng.child("head", index, "train") for index in range(len(self.heads))]

    def predictions(self, z0: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """
        :return: Shape ``(K,) + rollout shape`` for ``K`` heads
        """
        return np.stack([head.predict(z0, actions) for head in self.heads])

    @staticmethod
    def variance_reward(predictions: np.ndarray) -> np.ndarray:
        """
        Population variance across heads (axis 0), averaged over latent dimensions and summed
        over steps
        """
        return predictions.var(axis=0).mean(axis=-1).sum(axis=-1)

    def disagreement_reward(self, z0: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """
        Reward of one action sequence ``(H, A)`` (scalar) or a batch ``(M, H, A)``
        """
        return self.variance_reward(self.predictions(z0, actions))

    def __call__(self, z0: np.ndarray, actions: np.ndarray, latents: np.ndarray) -> np.ndarray:
        return self.disagreement_reward(z0, actions)

    # pylint: disable=too-many-arguments
    def train(self, buffer: ReplayBuffer, world_model, horizon: int, batch_size: int = 32,
              window: int = DEFAULT_WINDOW) -> typing.List[float]:
        """
        One update per head on its own segment batch, encoded with the world model's encoder
        """
        losses = []
        for head, stream in zip(self.heads, self.streams):
            frames, actions = buffer.sample_segments(batch_size, horizon, stream, window)
            latents = world_model.encode(frames, rng=stream).sample
            losses.append(head.update(latents[:, 0], actions, latents[:, 1:]))
        return losses

    def parameters(self) -> typing.List[ParamTensor]:
        return [param for head in self.heads for param in head.parameters()]

    def named_arrays(self) -> typing.Dict[str, np.ndarray]:
        return {param.name: param.values for param in self.parameters()}


class SmmDensityPair:
    """
    :param p_star: Density model of the relevant states
    :param p_policy: Density model of the visited states
    """
    def __init__(self, p_star: VariationalAutoencoder, p_policy: VariationalAutoencoder):
        self.p_star = p_star
        self.p_policy = p_policy

    @classmethod
    def build(cls, config: ModelConfig, rng: Rng) -> "SmmDensityPair":
        def _vae(name: str) -> VariationalAutoencoder:
            return VariationalAutoencoder(config.latent_dim, config.smm_latent_dim,
                                          config.smm_hidden, config.smm_hidden, config.smm_beta,
                                          rng.child(name), lr=config.lr,
                                          output_activation=Activation.IDENTITY,
                                          name=f"smm.{name}")
        return cls(_vae("star"), _vae("policy"))

    def swapped(self) -> "SmmDensityPair":
        return SmmDensityPair(self.p_policy, self.p_star)

    def smm_reward(self, z: np.ndarray) -> np.ndarray:
        """
        ``ELBO_star(z) - ELBO_policy(z)`` for latents of any leading shape
        """
        z = np.asarray(z, dtype=np.float64)
        flat = z.reshape((-1, z.shape[-1]))
        reward = self.p_star.elbo(flat) - self.p_policy.elbo(flat)
        return reward.reshape(z.shape[:-1])

    def __call__(self, z0: np.ndarray, actions: np.ndarray, latents: np.ndarray) -> np.ndarray:
        return self.smm_reward(latents).sum(axis=-1)

    def train(self, relevant_latents: np.ndarray, visited_latents: np.ndarray, rng: Rng) \
            -> typing.Tuple[VaeLoss, VaeLoss]:
        return (self.p_star.update(relevant_latents, rng.child("star")),
                self.p_policy.update(visited_latents, rng.child("policy")))

    def parameters(self) -> typing.List[ParamTensor]:
        return self.p_star.parameters() + self.p_policy.parameters()

    def named_arrays(self) -> typing.Dict[str, np.ndarray]:
        return {param.name: param.values for param in self.parameters()}
