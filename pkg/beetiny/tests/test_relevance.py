import numpy as np

from ..agent.relevance import RelevanceEnsemble, aggregate
from ..agent.world_model import WorldModel
from ..models.config import RewardMode
from ..nn.params import parameter_digest
from ..nn.rng import Rng
from ..utils.errors import UsageError
from .base import BeeTest, SMALL_MODEL
from .test_world_model import random_buffer

TOY_MODEL = SMALL_MODEL._replace(ensemble_size=3, discriminator_hidden=(8,), lr=1e-2,
                                 discriminator_batch=16)


def toy_clusters(rng, count):
    """
    Linearly separable latents: positives around ``+8 e1``, negatives around ``-8 e1``
    """
    center = np.zeros(4)
    center[0] = 8.0
    positives = center + 0.5 * rng.normal(size=(count, 4))
    negatives = -center + 0.5 * rng.normal(size=(count, 4))
    return positives, negatives


class AggregateTest(BeeTest):
    def test_modes(self):
        scores = np.array([0.2, 0.7, 0.4])
        for mode, expected in ((RewardMode.MAX, 0.7),
                               (RewardMode.MEAN_PLUS_VARIANCE, 0.4333333 + 0.0422222),
                               (RewardMode.SINGLE, 0.2)):
            with self.subTest(mode=mode):
                self.assertAlmostEqual(expected, float(aggregate(scores, mode)), places=6)

    def test_equal_scores(self):
        scores = np.full(3, 0.35)
        for mode in RewardMode:
            with self.subTest(mode=mode):
                self.assertAlmostEqual(0.35, float(aggregate(scores, mode)))

    def test_permutation_invariance(self):
        scores = Rng(0).uniform(size=(6, 3))
        for mode in (RewardMode.MAX, RewardMode.MEAN_PLUS_VARIANCE):
            with self.subTest(mode=mode):
                self.assertAllClose(aggregate(scores, mode), aggregate(scores[:, ::-1], mode),
                                    atol=1e-15)

    def test_max_is_monotone(self):
        scores = np.array([0.2, 0.7, 0.4])
        raised = scores.copy()
        raised[2] = 0.5
        self.assertGreaterEqual(aggregate(raised, RewardMode.MAX),
                                aggregate(scores, RewardMode.MAX))


class RelevanceEnsembleTest(BeeTest):
    def setUp(self):
        self.ensemble = RelevanceEnsemble(SMALL_MODEL, Rng(0))

    def test_scores(self):
        z = Rng(1).normal(size=(3, 5, 4))
        scores = self.ensemble.score(z)
        self.assertEqual((3, 5, 2), scores.shape)
        self.assertTrue(np.all((scores > 0.0) & (scores < 1.0)))
        self.assertAllEqual(scores, self.ensemble.score(z))
        self.assertEqual((3, 5), self.ensemble.r_exp(z).shape)

    def test_zero_weights(self):
        for member in self.ensemble.members:
            for param in member.parameters():
                param.values[:] = 0.0
        self.assertAllClose(np.full((2, 2), 0.5), self.ensemble.score(np.ones((2, 4))))

    def test_trajectory_reward(self):
        latents = Rng(1).normal(size=(7, 10, 4))
        rewards = self.ensemble.trajectory_reward(latents)
        self.assertEqual((7,), rewards.shape)
        self.assertAllClose(self.ensemble.r_exp(latents).sum(axis=-1), rewards)
        self.assertTrue(np.all((rewards > 0.0) & (rewards < 10.0)))
        self.assertAllClose(self.ensemble.r_exp(latents[:, 0]),
                            self.ensemble.trajectory_reward(latents[:, :1]))
        self.assertAllClose(rewards, self.ensemble(np.zeros(4), np.zeros((7, 10, 2)), latents))

        with self.assertRaises(UsageError):
            self.ensemble.trajectory_reward(np.zeros((0, 4)))

    def test_member_order(self):
        latents = Rng(1).normal(size=(10, 4))
        reward = self.ensemble.trajectory_reward(latents)
        self.ensemble.members.reverse()
        self.assertAlmostEqual(float(reward), float(self.ensemble.trajectory_reward(latents)))

    def test_independent_members(self):
        first, second = self.ensemble.members
        self.assertNotEqual(parameter_digest({"w": first.layers[0].weight.values}),
                            parameter_digest({"w": second.layers[0].weight.values}))
        again = RelevanceEnsemble(SMALL_MODEL, Rng(0))
        self.assertEqual(parameter_digest(self.ensemble.named_arrays()),
                         parameter_digest(again.named_arrays()))
        self.assertIn("relevance.0.0.sn_u", self.ensemble.named_arrays())

    def test_toy_fixture(self):
        ensemble = RelevanceEnsemble(TOY_MODEL, Rng(0))
        positives, negatives = toy_clusters(Rng(1), 200)
        for _ in range(200):
            ensemble.update_on_latents(positives, negatives)

        held_pos, held_neg = toy_clusters(Rng(2), 500)
        pos_scores = ensemble.score(held_pos)
        neg_scores = ensemble.score(held_neg)
        for index in range(len(ensemble)):
            with self.subTest(member=index):
                accuracy = (np.mean(pos_scores[:, index] > 0.5)
                            + np.mean(neg_scores[:, index] < 0.5)) / 2
                self.assertGreaterEqual(accuracy, 0.99)
        self.assertGreater(ensemble.r_exp(held_pos).mean(), ensemble.r_exp(held_neg).mean())

        digests = {parameter_digest({param.name.split(".", 2)[-1]: param.values
                                     for param in member.parameters()})
                   for member in ensemble.members}
        self.assertEqual(len(ensemble), len(digests))

    def test_confident_loss(self):
        ensemble = RelevanceEnsemble(SMALL_MODEL._replace(discriminator_hidden=()), Rng(0))
        member = ensemble.members[0]
        member.layers[0].weight.values[:] = [[1.0, 0.0, 0.0, 0.0]]
        member.layers[0].bias.values[:] = 0.0
        member.refresh_spectral_norm(5)
        latents = np.zeros((4, 4))
        latents[:2, 0] = 8.0
        latents[2:, 0] = -8.0
        loss = ensemble.update_member(0, latents, np.array([1.0, 1.0, 0.0, 0.0]), mixup=False)
        self.assertLess(loss, 1e-2)

    def test_lipschitz(self):
        ensemble = RelevanceEnsemble(SMALL_MODEL, Rng(3))
        for member in ensemble.members:
            member.refresh_spectral_norm(50)
        rng = Rng(4)
        first, second = rng.normal(size=(200, 4)), rng.normal(size=(200, 4))
        gap = np.abs(ensemble.score(first) - ensemble.score(second)).max(axis=-1)
        bound = 0.25 * 1.01 ** 2 * np.linalg.norm(first - second, axis=-1)
        self.assertTrue(np.all(gap <= bound))

    def test_train_members(self):
        buffer = random_buffer()
        world_model = WorldModel(SMALL_MODEL, 8, Rng(1))
        relevant = Rng(2).integers(0, 256, size=(6, 8, 8)).astype(np.uint8)
        world_before = parameter_digest(world_model.named_arrays())
        before = parameter_digest(self.ensemble.named_arrays())

        losses = self.ensemble.train_members(buffer, relevant, world_model)
        self.assertEqual(2, len(losses))
        self.assertTrue(np.all(np.isfinite(losses)))
        self.assertNotEqual(before, parameter_digest(self.ensemble.named_arrays()))
        self.assertEqual(world_before, parameter_digest(world_model.named_arrays()))

        with self.assertRaises(UsageError):
            self.ensemble.train_members(buffer, relevant[:0], world_model)
