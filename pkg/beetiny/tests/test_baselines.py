import numpy as np

from ..agent.baselines import DisagreementEnsemble, SmmDensityPair, random_policy
from ..agent.methods import BeeMethod, DisagreementMethod, RandomMethod, SmmMethod, build_method
from ..agent.world_model import WorldModel
from ..nn.gradcheck import gradient_check
from ..nn.params import parameter_digest
from ..nn.rng import Rng
from .base import BeeTest, SMALL_CONFIG, SMALL_MODEL
from .test_world_model import random_buffer


def copy_parameters(source, target):
    for src, dst in zip(source.parameters(), target.parameters()):
        dst.values[:] = src.values


class DisagreementTest(BeeTest):
    def test_variance_reward(self):
        predictions = np.zeros((2, 1, 1))
        predictions[1] = 1.0
        self.assertAlmostEqual(0.25, float(DisagreementEnsemble.variance_reward(predictions)))

        # five heads with offsets 0..4 on both dimensions at each of three steps
        offsets = np.arange(5.0)[:, None, None] * np.ones((5, 3, 2))
        self.assertAlmostEqual(3 * 2.0, float(DisagreementEnsemble.variance_reward(offsets)))

    def test_identical_heads(self):
        ensemble = DisagreementEnsemble(SMALL_MODEL, Rng(0))
        copy_parameters(ensemble.heads[0], ensemble.heads[1])
        actions = Rng(1).uniform(-1.0, 1.0, size=(6, 5, 2))
        self.assertAllEqual(np.zeros(6), ensemble.disagreement_reward(np.ones(4), actions))

    def test_reward(self):
        ensemble = DisagreementEnsemble(SMALL_MODEL._replace(disagreement_heads=3), Rng(0))
        z0 = Rng(1).normal(size=4)
        actions = Rng(2).uniform(-1.0, 1.0, size=(6, 5, 2))
        rewards = ensemble(z0, actions, None)
        self.assertEqual((6,), rewards.shape)
        self.assertTrue(np.all(rewards > 0.0))
        self.assertEqual((), np.shape(ensemble.disagreement_reward(z0, actions[0])))
        self.assertAllClose(rewards[0], ensemble.disagreement_reward(z0, actions[0]))

        ensemble.heads.reverse()
        self.assertAllClose(rewards, ensemble(z0, actions, None), atol=1e-12)

    def test_train(self):
        ensemble = DisagreementEnsemble(SMALL_MODEL, Rng(0))
        world_model = WorldModel(SMALL_MODEL, 8, Rng(1))
        before = parameter_digest(world_model.named_arrays())
        losses = ensemble.train(random_buffer(), world_model, 2, batch_size=4)
        self.assertEqual(2, len(losses))
        self.assertTrue(np.all(np.isfinite(losses)))
        self.assertEqual(before, parameter_digest(world_model.named_arrays()))


class SmmTest(BeeTest):
    def setUp(self):
        self.pair = SmmDensityPair.build(SMALL_MODEL, Rng(0))

    def test_antisymmetric(self):
        z = Rng(1).normal(size=(3, 5, 4))
        reward = self.pair.smm_reward(z)
        self.assertEqual((3, 5), reward.shape)
        self.assertAllClose(-reward, self.pair.swapped().smm_reward(z), atol=1e-12)
        self.assertAllEqual(reward, self.pair.smm_reward(z))
        self.assertAllClose(reward.sum(axis=-1), self.pair(None, None, z))

    def test_identical_densities(self):
        copy_parameters(self.pair.p_star, self.pair.p_policy)
        self.assertAllEqual(np.zeros(7), self.pair.smm_reward(Rng(1).normal(size=(7, 4))))

    def test_two_clusters(self):
        pair = SmmDensityPair.build(SMALL_MODEL._replace(lr=1e-2), Rng(0))
        rng = Rng(1)
        center = np.array([3.0, 0.0, 0.0, 0.0])
        for step in range(300):
            relevant = center + 0.1 * rng.normal(size=(16, 4))
            visited = -center + 0.1 * rng.normal(size=(16, 4))
            pair.train(relevant, visited, Rng(2, (step,)))
        self.assertGreater(float(pair.smm_reward(center)), 0.0)
        self.assertLess(float(pair.smm_reward(-center)), 0.0)

    def test_gradient_check(self):
        x = Rng(1).normal(size=(4, 4))
        noise = Rng(2).normal(size=(4, 2))
        vae = SmmDensityPair.build(SMALL_MODEL._replace(smm_hidden=()), Rng(0)).p_star
        result = gradient_check(lambda backward: vae.loss(x, noise=noise).total,
                                vae.parameters(), Rng(3))
        self.assertLess(result.max_relative_error, 1e-3, result)


class RandomPolicyTest(BeeTest):
    def test_uniform(self):
        rng = Rng(0)
        actions = np.stack([random_policy(rng) for _ in range(10000)])
        self.assertTrue(np.all(np.abs(actions) <= 1.0))
        self.assertAllClose([0.0, 0.0], actions.mean(axis=0), atol=0.05)
        self.assertAllEqual(random_policy(Rng(5)), random_policy(Rng(5)))


class MethodsTest(BeeTest):
    def test_build(self):
        world_model = WorldModel(SMALL_MODEL, 8, Rng(0))
        z0 = np.zeros(4)
        actions = Rng(1).uniform(-1.0, 1.0, size=(6, 5, 2))
        latents = world_model.rollout(z0, actions)
        for name, cls in (("bee", BeeMethod), ("disagreement", DisagreementMethod),
                          ("smm", SmmMethod), ("random", RandomMethod)):
            with self.subTest(name):
                method = build_method(SMALL_CONFIG._replace(method=name), Rng(2))
                self.assertIsInstance(method, cls)
                self.assertEqual(name != "random", method.uses_planner)
                rewards = method.reward(z0, actions, latents)
                self.assertEqual((6,), np.shape(rewards))
                self.assertTrue(np.all(np.isfinite(rewards)))
                self.assertEqual(name == "random", not method.named_arrays())

    def test_state_reward(self):
        latents = Rng(0).normal(size=(11, 4))
        self.assertEqual((11,), build_method(SMALL_CONFIG, Rng(1)).state_reward(latents).shape)
        self.assertIsNone(build_method(SMALL_CONFIG._replace(method="disagreement"),
                                       Rng(1)).state_reward(latents))
