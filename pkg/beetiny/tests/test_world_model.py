import numpy as np

from ..agent import planner
from ..agent.vae import VariationalAutoencoder
from ..agent.world_model import HorizonSchedule, LatentDynamics, WorldModel
from ..nn.gradcheck import gradient_check
from ..nn.params import parameter_digest
from ..nn.rng import Rng
from ..sim.layouts import get_layout
from ..sim.tabletop import TabletopEnv
from ..utils.buffer import ReplayBuffer
from ..utils.errors import ConfigError, UsageError
from .base import BeeTest, SMALL_MODEL


def linear_dynamics(weight, hidden_dim=3):
    """
    Dynamics with a frozen zero hidden state and a linear head implementing ``z' = z + W a``
    """
    weight = np.asarray(weight, dtype=np.float64)
    latent_dim, action_dim = weight.shape
    dynamics = LatentDynamics(latent_dim, action_dim, hidden_dim, (), Rng(0))
    for param in dynamics.cell.parameters():
        param.values[:] = 0.0
    head = dynamics.head.layers[0]
    head.weight.values[:] = 0.0
    head.weight.values[:, hidden_dim + latent_dim:] = weight
    head.bias.values[:] = 0.0
    return dynamics


def random_buffer(episodes=3, horizon=10, image_size=8, seed=0):
    env = TabletopEnv(get_layout("blocks", {"horizon": horizon, "image_size": image_size}))
    return ReplayBuffer(planner.random_episode(env, Rng(seed, ("episode", index)))
                        for index in range(episodes))


class HorizonScheduleTest(BeeTest):
    def test_defaults(self):
        schedule = HorizonSchedule()
        for episode, horizon in ((0, 2), (40, 2), (49, 2), (50, 4), (149, 4), (200, 8),
                                 (300, 10), (2000, 10)):
            with self.subTest(episode=episode):
                self.assertEqual(horizon, schedule(episode))
        self.assertEqual(10, schedule.max_horizon)

    def test_invalid(self):
        for breakpoints in ((), ((1, 2),), ((0, 4), (10, 2)), ((0, 2), (0, 4)), ((0, 0),)):
            with self.subTest(breakpoints=breakpoints):
                with self.assertRaises(ConfigError):
                    HorizonSchedule(breakpoints)


class VariationalAutoencoderTest(BeeTest):
    def test_gradient_check(self):
        x = Rng(1).uniform(size=(5, 6))
        noise = Rng(2).normal(size=(5, 2))
        for beta in (0.0, 0.5):
            with self.subTest(beta=beta):
                vae = VariationalAutoencoder(6, 2, (), (), beta, Rng(0))
                result = gradient_check(lambda backward: vae.loss(x, noise=noise).total,
                                        vae.parameters(), Rng(3))
                self.assertLess(result.max_relative_error, 1e-3, result)

    def test_beta_zero(self):
        vae = VariationalAutoencoder(6, 2, (4,), (4,), 0.0, Rng(0))
        x = Rng(1).uniform(size=(3, 6))
        result = vae.loss(x, noise=np.zeros((3, 2)))
        self.assertEqual(result.reconstruction, result.total)
        self.assertGreater(result.kl, 0.0)

    def test_kl_of_standard_posterior(self):
        vae = VariationalAutoencoder(3, 2, (), (), 1.0, Rng(0))
        for param in vae.encoder.parameters():
            param.values[:] = 0.0
        self.assertEqual(0.0, vae.loss(np.ones((2, 3)), noise=np.zeros((2, 2))).kl)

    def test_invalid_batches(self):
        vae = VariationalAutoencoder(3, 2, (), (), 1.0, Rng(0))
        with self.assertRaises(UsageError):
            vae.loss(np.zeros((0, 3)), rng=Rng(0))
        with self.assertRaises(ConfigError):
            vae.loss(np.zeros((2, 4)), rng=Rng(0))

    def test_training_reduces_loss(self):
        vae = VariationalAutoencoder(16, 2, (16,), (16,), 1e-3, Rng(0), lr=1e-2)
        data = (Rng(1).uniform(size=(8, 16)) > 0.5).astype(np.float64)
        first = vae.elbo(data).mean()
        for step in range(300):
            vae.update(data, Rng(2, (step,)))
        self.assertGreater(vae.elbo(data).mean(), first)

    def test_elbo_is_pure(self):
        vae = VariationalAutoencoder(4, 2, (3,), (3,), 0.1, Rng(0))
        x = Rng(1).uniform(size=(3, 4))
        self.assertAllEqual(vae.elbo(x), vae.elbo(x))
        self.assertEqual((3,), vae.elbo(x).shape)


class LatentDynamicsTest(BeeTest):
    def test_linear_fixture(self):
        weight = np.array([[1.0, 0.0], [0.5, -1.0], [0.0, 2.0]])
        dynamics = linear_dynamics(weight)
        z0 = np.array([0.1, -0.2, 0.3])
        actions = Rng(0).uniform(-1.0, 1.0, size=(4, 2))
        expected = z0 + np.cumsum(actions @ weight.T, axis=0)
        self.assertAllClose(expected, dynamics.predict(z0, actions), atol=1e-12)
        self.assertAlmostEqual(0.0, dynamics.loss(z0[None], actions[None], expected[None]))

    def test_single_step_loss(self):
        dynamics = linear_dynamics(np.array([[0.5]]))
        loss = dynamics.loss(np.zeros((1, 1)), np.ones((1, 1, 1)), np.ones((1, 1, 1)))
        self.assertAlmostEqual(0.25, loss)

    def test_compositional_and_empty(self):
        dynamics = LatentDynamics(3, 2, 5, (4,), Rng(0))
        z0 = np.array([0.2, 0.1, -0.3])
        actions = Rng(1).uniform(-1.0, 1.0, size=(3, 2))
        full = dynamics.predict(z0, actions)
        self.assertEqual((3, 3), full.shape)
        self.assertAllEqual(full, dynamics.predict(z0, actions))
        self.assertAllClose(full[:2], dynamics.predict(z0, actions[:2]))
        self.assertEqual((0, 3), dynamics.predict(z0, np.zeros((0, 2))).shape)
        batch = dynamics.predict(np.tile(z0, (2, 1)), np.stack([actions, actions]))
        self.assertAllClose(np.stack([full, full]), batch)

    def test_gradient_check(self):
        dynamics = LatentDynamics(3, 2, 4, (), Rng(0))
        z0 = Rng(1).normal(size=(2, 3))
        actions = Rng(2).uniform(-1.0, 1.0, size=(2, 4, 2))
        targets = Rng(3).normal(size=(2, 4, 3))
        result = gradient_check(lambda backward: dynamics.loss(z0, actions, targets),
                                dynamics.parameters(), Rng(4))
        self.assertLess(result.max_relative_error, 1e-3, result)

    def test_learns_linear_system(self):
        weight = np.array([[0.3, 0.0], [0.0, -0.2]])
        rng = Rng(0)
        dynamics = LatentDynamics(2, 2, 8, (), Rng(1), lr=1e-2)
        losses = []
        for _ in range(300):
            z0 = rng.normal(size=(16, 2))
            actions = rng.uniform(-1.0, 1.0, size=(16, 3, 2))
            targets = z0[:, None] + np.cumsum(actions @ weight.T, axis=1)
            losses.append(dynamics.update(z0, actions, targets))
        self.assertLess(np.mean(losses[-10:]), 0.25 * np.mean(losses[:10]))

    def test_invalid_actions(self):
        dynamics = LatentDynamics(3, 2, 4, (), Rng(0))
        with self.assertRaises(ConfigError):
            dynamics.predict(np.zeros(3), np.zeros((4, 3)))
        with self.assertRaises(ConfigError):
            dynamics.predict(np.zeros(2), np.zeros((4, 2)))


class WorldModelTest(BeeTest):
    def setUp(self):
        self.model = WorldModel(SMALL_MODEL, 8, Rng(0))

    def test_shapes(self):
        encoding = self.model.encode(np.zeros((8, 8), dtype=np.uint8), rng=Rng(1))
        self.assertEqual((4,), encoding.mean.shape)
        self.assertTrue(np.all(np.isfinite(encoding.sample)))
        self.assertEqual((2, 3, 4), self.model.encode_mean(np.zeros((2, 3, 8, 8))).shape)
        self.assertEqual((5, 8, 8), self.model.decode(np.zeros((5, 4))).shape)
        self.assertEqual((7, 10, 4), self.model.rollout(np.zeros(4), np.zeros((7, 10, 2))).shape)
        with self.assertRaises(ConfigError):
            self.model.encode(np.zeros((16, 16)))

    def test_deterministic_encoding(self):
        frame = Rng(1).integers(0, 256, size=(8, 8)).astype(np.uint8)
        first = self.model.encode(frame, rng=Rng(2), deterministic=True)
        self.assertAllEqual(first.mean, first.sample)
        self.assertAllEqual(first.mean, self.model.encode_mean(frame))

    def test_dynamics_loss_keeps_vae(self):
        buffer = random_buffer()
        frames, actions = buffer.sample_segments(4, 3, Rng(1))
        before = parameter_digest(self.model.vae.named_arrays())
        self.model.dynamics_loss(frames, actions, Rng(2))
        for param in self.model.vae.parameters():
            self.assertFalse(np.any(param.grad))
        self.model.dynamics.optimizer.step()
        self.assertEqual(before, parameter_digest(self.model.vae.named_arrays()))

    def test_segment_too_short(self):
        with self.assertRaises(UsageError):
            self.model.dynamics_loss_from_latents(np.zeros((2, 1, 4)), np.zeros((2, 0, 2)))

    def test_train_step(self):
        buffer = random_buffer()
        examples = Rng(3).integers(0, 256, size=(5, 8, 8)).astype(np.uint8)
        before = parameter_digest(self.model.named_arrays())
        for index, expected in ((0, 2), (60, 4), (200, 8), (400, 10)):
            with self.subTest(episode_index=index):
                stats = self.model.train_step(buffer, examples, index, Rng(4, (index,)),
                                              batch_size=4)
                self.assertEqual(expected, stats.horizon)
                self.assertTrue(np.isfinite(stats.vae_loss))
                self.assertTrue(np.isfinite(stats.dyn_loss))
        self.assertNotEqual(before, parameter_digest(self.model.named_arrays()))

        stats = self.model.train_step(buffer, None, 0, Rng(5), batch_size=4)
        self.assertEqual(2, stats.horizon)

    def test_separates_two_images(self):
        model = WorldModel(SMALL_MODEL._replace(lr=1e-2), 8, Rng(0))
        images = np.zeros((2, 8, 8))
        images[0, :4] = 1.0
        images[1, 4:] = 1.0
        for step in range(200):
            model.vae.update(images.reshape(2, -1), Rng(1, (step,)))
        means = model.encode_mean(images)
        self.assertGreaterEqual(np.linalg.norm(means[0] - means[1]), 1e-2)
