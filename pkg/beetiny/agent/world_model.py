"""
World model
^^^^^^^^^^^

Image VAE plus a deterministic recurrent latent dynamics model.

The dynamics model predicts residuals: starting from ``h = 0`` it computes, per action ``a``::

    h = gru([z, a], h)
    z = z + head([h, z, a])

It is trained on open-loop predictions of segments whose targets are posterior samples of the
encoded frames, with gradients stopped at the encoder.
"""
import logging
import typing

import numpy as np

from ..models import ACTION_DIM
from ..models.config import HORIZON_SCHEDULE_DEFAULTS, ModelConfig
from ..nn.functional import gaussian_sample, random_crop
from ..nn.layers import DenseNet
from ..nn.optim import Adam
from ..nn.params import ParamTensor
from ..nn.recurrent import GRUCell
from ..nn.rng import Rng
from ..utils.buffer import DEFAULT_WINDOW, ReplayBuffer
from ..utils.errors import ConfigError, UsageError, ensure_finite
from .vae import VaeLoss, VariationalAutoencoder


class Encoding(typing.NamedTuple):
    mean: np.ndarray
    logvar: np.ndarray
    sample: np.ndarray


class TrainStats(typing.NamedTuple):
    vae_loss: float
    kl: float
    dyn_loss: float
    horizon: int


class HorizonSchedule:
    """
    Dynamics training horizon as a function of the number of collected episodes

    :param breakpoints: ``(first episode, horizon)`` pairs; starts strictly increasing from 0 and
                        horizons non-decreasing
    """
    def __init__(self, breakpoints: typing.Sequence[typing.Tuple[int, int]] =
                 HORIZON_SCHEDULE_DEFAULTS):
        breakpoints = tuple((int(start), int(horizon)) for start, horizon in breakpoints)
        starts = [start for start, _ in breakpoints]
        horizons = [horizon for _, horizon in breakpoints]
        if not breakpoints or starts[0] != 0 or starts != sorted(set(starts)):
            raise ConfigError("Horizon breakpoints must start at 0 and increase strictly")
        if horizons != sorted(horizons) or horizons[0] < 1:
            raise ConfigError("Horizons must be positive and non-decreasing")
        self.breakpoints = breakpoints

    def __call__(self, episode_index: int) -> int:
        horizon = self.breakpoints[0][1]
        for start, value in self.breakpoints:
            if episode_index >= start:
                horizon = value
        return horizon

    @property
    def max_horizon(self) -> int:
        return self.breakpoints[-1][1]


class LatentDynamics:
    """
    Recurrent residual predictor of the next latent state

    :param latent_dim: Latent size
    :param action_dim: Action size
    :param hidden_dim: GRU hidden size
    :param head_hidden: Hidden widths of the output head; empty for a single linear layer
    :param rng: Initialization stream
    :param lr: Learning rate of the own Adam optimizer
    :param name: Prefix of the parameter names
    """
    # pylint: disable=too-many-arguments
    def __init__(self, latent_dim: int, action_dim: int, hidden_dim: int,
                 head_hidden: typing.Sequence[int], rng: Rng, lr: float = 1e-3,
                 name: str = "dynamics"):
        self.latent_dim = latent_dim
        self.action_dim = action_dim
        self.name = name
        self.cell = GRUCell(latent_dim + action_dim, hidden_dim, rng.child("cell"),
                            name=f"{name}.cell")
        self.head = DenseNet.build([hidden_dim + latent_dim + action_dim, *head_hidden,
                                    latent_dim], rng.child("head"), name=f"{name}.head")
        self.optimizer = Adam(self.parameters(), lr=lr)

    def parameters(self) -> typing.List[ParamTensor]:
        return self.cell.parameters() + self.head.parameters()

    def named_arrays(self) -> typing.Dict[str, np.ndarray]:
        return {param.name: param.values for param in self.parameters()}

    def _check(self, z0: np.ndarray, actions: np.ndarray) \
            -> typing.Tuple[np.ndarray, np.ndarray, bool]:
        z0 = np.asarray(z0, dtype=np.float64)
        actions = np.asarray(actions, dtype=np.float64)
        single = actions.ndim == 2
        if single:
            actions = actions[None]
        if actions.ndim != 3 or actions.shape[-1] != self.action_dim:
            raise ConfigError(f"{self.name}: actions must have shape (H, {self.action_dim}) or "
                              f"(B, H, {self.action_dim}). Got: {actions.shape}")
        if z0.shape[-1] != self.latent_dim:
            raise ConfigError(f"{self.name}: expected latent size {self.latent_dim}, "
                              f"got {z0.shape}")
        z0 = np.broadcast_to(z0, (len(actions), self.latent_dim))
        return z0, actions, single

    def predict(self, z0: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """
        Open-loop rollout (pure)

        :param z0: Start latent, shape ``(L,)`` or ``(B, L)``
        :param actions: Shape ``(H, A)`` or ``(B, H, A)``
        :return: Predicted latents, shape ``(H, L)`` or ``(B, H, L)``
        """
        z, actions, single = self._check(z0, actions)
        hidden = self.cell.initial_state(len(actions))
        predictions = np.empty(actions.shape[:2] + (self.latent_dim,))
        for step in range(actions.shape[1]):
            action = actions[:, step]
            hidden = self.cell.predict_step(np.concatenate([z, action], axis=-1), hidden)
            z = z + self.head.predict(np.concatenate([hidden, z, action], axis=-1))
            predictions[:, step] = z
        return predictions[0] if single else predictions

    def loss(self, z0: np.ndarray, actions: np.ndarray, targets: np.ndarray) -> float:
        """
        Mean over steps and batch of the squared prediction error; accumulates gradients

        :param z0: Start latents, shape ``(B, L)``
        :param actions: Shape ``(B, H, A)`` with ``H >= 1``
        :param targets: Latents to predict, shape ``(B, H, L)``
        :raises NonFiniteError: if the loss is not finite
        """
        z, actions, _ = self._check(z0, actions)
        targets = np.asarray(targets, dtype=np.float64).reshape(actions.shape[:2]
                                                                + (self.latent_dim,))
        batch, horizon = actions.shape[:2]
        if horizon < 1:
            raise UsageError("Dynamics loss needs at least one transition")

        hidden = self.cell.initial_state(batch)
        cell_caches, head_caches, predictions = [], [], []
        for step in range(horizon):
            action = actions[:, step]
            hidden, cell_cache = self.cell.step(np.concatenate([z, action], axis=-1), hidden)
            z = z + self.head.forward(np.concatenate([hidden, z, action], axis=-1))
            cell_caches.append(cell_cache)
            head_caches.append(self.head.cache)
            predictions.append(z)

        errors = np.stack(predictions, axis=1) - targets
        loss = ensure_finite(float(np.sum(np.square(errors))) / (batch * horizon),
                             f"{self.name} loss")

        hidden_dim = self.cell.hidden_dim
        grad_z = np.zeros((batch, self.latent_dim))
        grad_hidden = np.zeros((batch, hidden_dim))
        for step in reversed(range(horizon)):
            grad_z = grad_z + 2.0 * errors[:, step] / (batch * horizon)
            grad_concat = self.head.backward(grad_z, head_caches[step])
            grad_hidden = grad_hidden + grad_concat[:, :hidden_dim]
            grad_z = grad_z + grad_concat[:, hidden_dim:hidden_dim + self.latent_dim]
            grad_input, grad_hidden = self.cell.backward(cell_caches[step], grad_hidden)
            grad_z = grad_z + grad_input[:, :self.latent_dim]
        return loss

    def update(self, z0: np.ndarray, actions: np.ndarray, targets: np.ndarray) -> float:
        self.optimizer.zero_grad()
        loss = self.loss(z0, actions, targets)
        self.optimizer.step()
        return loss


def as_images(frames: np.ndarray) -> np.ndarray:
    """
    Convert ``uint8`` frames to reals in ``[0, 1]``; real inputs pass unchanged
    """
    frames = np.asarray(frames)
    if frames.dtype == np.uint8:
        return frames.astype(np.float64) / 255.0
    return frames.astype(np.float64)


class WorldModel:
    """
    Encoder, decoder and latent dynamics over square grayscale images

    :param config: Model sizes and optimizer settings
    :param image_size: Side length of the images
    :param rng: Initialization stream
    :param schedule: Dynamics training horizon schedule
    :param action_dim: Action size
    """
    def __init__(self, config: ModelConfig, image_size: int, rng: Rng,
                 schedule: typing.Optional[HorizonSchedule] = None,
                 action_dim: int = ACTION_DIM):
        self.config = config.validate()
        self.image_size = image_size
        self.pixels = image_size * image_size
        self.latent_dim = config.latent_dim
        self.action_dim = action_dim
        self.schedule = schedule or HorizonSchedule()
        self.vae = VariationalAutoencoder(self.pixels, config.latent_dim, config.encoder_hidden,
                                          config.decoder_hidden, config.beta, rng.child("vae"),
                                          lr=config.lr, name="world.vae")
        self.dynamics = LatentDynamics(config.latent_dim, action_dim, config.dynamics_hidden,
                                       config.dynamics_head_hidden, rng.child("dynamics"),
                                       lr=config.lr, name="world.dynamics")

    def _flatten(self, images: np.ndarray) -> typing.Tuple[np.ndarray, typing.Tuple[int, ...]]:
        images = as_images(images)
        if images.shape[-2:] != (self.image_size, self.image_size):
            raise ConfigError(f"Expected {self.image_size}x{self.image_size} images, got "
                              f"{images.shape}")
        leading = images.shape[:-2]
        return images.reshape((-1, self.pixels)), leading

    def encode(self, images: np.ndarray, rng: typing.Optional[Rng] = None,
               deterministic: bool = False) -> Encoding:
        """
        Posterior of one image ``(H, W)`` or a batch ``(..., H, W)``

        In deterministic mode (or without ``rng``) the sample equals the mean.
        """
        flat, leading = self._flatten(images)
        mean, logvar = self.vae.posterior(flat)
        if deterministic or rng is None:
            sample = mean
        else:
            sample, _ = gaussian_sample(mean, logvar, rng=rng)
        shape = leading + (self.latent_dim,)
        return Encoding(mean.reshape(shape), logvar.reshape(shape), sample.reshape(shape))

    def encode_mean(self, images: np.ndarray) -> np.ndarray:
        return self.encode(images, deterministic=True).mean

    def decode(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        flat = self.vae.decode(z.reshape((-1, self.latent_dim)))
        return flat.reshape(z.shape[:-1] + (self.image_size, self.image_size))

    def vae_loss(self, images: np.ndarray, rng: typing.Optional[Rng] = None,
                 noise: typing.Optional[np.ndarray] = None) -> VaeLoss:
        """
        VAE loss of a batch of images; accumulates encoder and decoder gradients
        """
        flat, _ = self._flatten(images)
        return self.vae.loss(flat, rng=rng, noise=noise)

    def rollout(self, z0: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """
        Predicted latents for an action sequence (or a batch of them); pure
        """
        return self.dynamics.predict(z0, actions)

    def dynamics_loss_from_latents(self, latents: np.ndarray, actions: np.ndarray) -> float:
        """
        :param latents: Shape ``(B, H + 1, L)``; the first column is the start state
        :param actions: Shape ``(B, H, A)``
        """
        latents = np.asarray(latents, dtype=np.float64)
        if latents.shape[1] < 2:
            raise UsageError("A dynamics segment needs at least two observations")
        return self.dynamics.loss(latents[:, 0], actions, latents[:, 1:])

    def dynamics_loss(self, frames: np.ndarray, actions: np.ndarray, rng: Rng) -> float:
        """
        Dynamics loss of segments; gradients reach the dynamics parameters only

        :param frames: Shape ``(H + 1, height, width)`` or ``(B, H + 1, height, width)``
        :param actions: Shape ``(H, A)`` or ``(B, H, A)``
        """
        frames = np.asarray(frames)
        actions = np.asarray(actions, dtype=np.float64)
        if frames.ndim == 3:
            frames, actions = frames[None], actions[None]
        latents = self.encode(frames, rng=rng).sample
        return self.dynamics_loss_from_latents(latents, actions)

    def train_step(self, buffer: ReplayBuffer, examples: typing.Optional[np.ndarray],
                   episode_index: int, rng: Rng, batch_size: int = 32,
                   window: int = DEFAULT_WINDOW, crop_pad: int = 2) -> TrainStats:
        """
        One VAE update on buffer frames, one on cropped example frames (if any) and one dynamics
        update at the scheduled horizon
        """
        # pylint: disable=too-many-arguments
        frames = buffer.sample_frames(batch_size, rng.child("vae-frames"), window)
        vae = self.vae.update(self._flatten(frames)[0], rng.child("vae-noise"))

        if examples is not None and len(examples):
            pick = rng.child("example-pick").integers(0, len(examples), size=batch_size)
            batch = random_crop(as_images(examples[pick]), crop_pad, rng.child("example-crop"))
            self.vae.update(self._flatten(batch)[0], rng.child("example-noise"))

        horizon = min(self.schedule(episode_index), buffer[-1].length)
        segment_frames, segment_actions = buffer.sample_segments(
            batch_size, horizon, rng.child("segments"), window)
        self.dynamics.optimizer.zero_grad()
        dyn_loss = self.dynamics_loss(segment_frames, segment_actions, rng.child("targets"))
        self.dynamics.optimizer.step()

        logger = logging.getLogger("beetiny.train")
        if logger.isEnabledFor(logging.DEBUG):
            logger.debug("World model: vae %.6f kl %.6f dynamics %.6f (horizon %d)", vae.total,
                         vae.kl, dyn_loss, horizon)
        return TrainStats(vae.total, vae.kl, dyn_loss, horizon)

    def parameters(self) -> typing.List[ParamTensor]:
        return self.vae.parameters() + self.dynamics.parameters()

    def named_arrays(self) -> typing.Dict[str, np.ndarray]:
        return {param.name: param.values for param in self.parameters()}
