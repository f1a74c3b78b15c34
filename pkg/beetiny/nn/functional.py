"""
Stateless functions
^^^^^^^^^^^^^^^^^^^

Sampling, divergences, losses and data augmentation shared by the models.
"""
import typing

import numpy as np

from ..utils.errors import UsageError
from .rng import Rng

#: Range to which log-variances are clamped before exponentiation
LOGVAR_MIN, LOGVAR_MAX = -20.0, 5.0

#: Probabilities are kept this far away from 0 and 1 inside the log-loss
PROB_EPS = 1e-12


def sigmoid(x: np.ndarray) -> np.ndarray:
    # Split by sign so that exp never overflows
    out = np.empty_like(x, dtype=np.float64)
    positive = x >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-x[positive]))
    exp_x = np.exp(x[~positive])
    out[~positive] = exp_x / (1.0 + exp_x)
    return out


def clamp_logvar(logvar: np.ndarray) -> typing.Tuple[np.ndarray, np.ndarray]:
    """
    Clamp log-variances

    :return: (clamped values, mask of entries that were inside the range and pass gradients)
    """
    clamped = np.clip(logvar, LOGVAR_MIN, LOGVAR_MAX)
    return clamped, (logvar >= LOGVAR_MIN) & (logvar <= LOGVAR_MAX)


def gaussian_sample(mean: np.ndarray, logvar: np.ndarray, rng: typing.Optional[Rng] = None,
                    noise: typing.Optional[np.ndarray] = None) \
        -> typing.Tuple[np.ndarray, np.ndarray]:
    """
    Reparameterized sample ``mean + exp(0.5 * logvar) * noise`` with ``noise ~ N(0, I)``

    Since the noise is returned, callers can backpropagate: the sample's derivative w.r.t.
    ``mean`` is the identity, w.r.t. ``logvar`` it is ``0.5 * exp(0.5 * logvar) * noise`` (zero
    where ``logvar`` was clamped).

    :param mean: Mean
    :param logvar: Log-variance, clamped to [-20, 5]
    :param rng: Source of the noise; ignored if ``noise`` is given
    :param noise: Frozen noise
    :return: (sample, noise)
    """
    mean = np.asarray(mean, dtype=np.float64)
    logvar = np.asarray(logvar, dtype=np.float64)
    if mean.shape != logvar.shape:
        raise UsageError(f"mean and logvar shapes differ: {mean.shape} vs {logvar.shape}")
    if noise is None:
        if rng is None:
            raise UsageError("gaussian_sample needs either an rng or frozen noise")
        noise = rng.normal(size=mean.shape)
    clamped, _ = clamp_logvar(logvar)
    return mean + np.exp(0.5 * clamped) * noise, noise


def kl_standard_normal(mean: np.ndarray, logvar: np.ndarray) -> np.ndarray:
    """
    Closed form ``KL(N(mean, exp(logvar)) || N(0, I))``, summed over the last axis
    """
    clamped, _ = clamp_logvar(np.asarray(logvar, dtype=np.float64))
    return 0.5 * np.sum(np.square(mean) + np.exp(clamped) - 1.0 - clamped, axis=-1)


def mixup_pair(x1: np.ndarray, y1: float, x2: np.ndarray, y2: float, alpha: float,
               rng: typing.Optional[Rng] = None, lam: typing.Optional[float] = None) \
        -> typing.Tuple[np.ndarray, float]:
    """
    Convex combination of two labelled samples with ``lam ~ Beta(alpha, alpha)``

    :param lam: Forced mixing weight; drawn from ``rng`` if omitted
    :return: (mixed input, mixed label)
    """
    x1, x2 = np.asarray(x1, dtype=np.float64), np.asarray(x2, dtype=np.float64)
    if x1.shape != x2.shape:
        raise UsageError(f"mixup inputs differ in shape: {x1.shape} vs {x2.shape}")
    if alpha <= 0:
        raise UsageError("mixup alpha must be positive")
    if lam is None:
        lam = float(rng.beta(alpha, alpha))
    return lam * x1 + (1.0 - lam) * x2, lam * y1 + (1.0 - lam) * y2


def mixup_batch(x: np.ndarray, y: np.ndarray, alpha: float, rng: Rng) \
        -> typing.Tuple[np.ndarray, np.ndarray]:
    """
    Mix every sample of a batch with a randomly chosen partner of the same batch

    Each pair gets its own weight drawn from ``Beta(alpha, alpha)``.
    """
    if len(x) != len(y):
        raise UsageError("mixup batch inputs and labels differ in length")
    if alpha <= 0:
        raise UsageError("mixup alpha must be positive")
    partner = rng.permutation(len(x))
    lam = rng.beta(alpha, alpha, size=len(x))
    mixed_x = lam[:, None] * x + (1.0 - lam[:, None]) * x[partner]
    mixed_y = lam * y + (1.0 - lam) * y[partner]
    return mixed_x, mixed_y


def random_crop(images: np.ndarray, pad: int, rng: Rng) -> np.ndarray:
    """
    Zero-pad each image by ``pad`` pixels per side and cut a random window of the original size

    :param images: Batch of images, shape ``(B, H, W)``
    :return: Batch of the same shape and dtype
    """
    if pad == 0:
        return images.copy()
    batch, height, width = images.shape
    padded = np.pad(images, ((0, 0), (pad, pad), (pad, pad)))
    offsets = rng.integers(0, 2 * pad + 1, size=(batch, 2))
    out = np.empty_like(images)
    for index, (row, col) in enumerate(offsets):
        out[index] = padded[index, row:row + height, col:col + width]
    return out


def binary_cross_entropy(prob: np.ndarray, target: np.ndarray) \
        -> typing.Tuple[float, np.ndarray]:
    """
    Mean binary cross-entropy and its gradient w.r.t. ``prob``

    Soft targets (e.g. from mixup) are allowed.
    """
    prob = np.clip(prob, PROB_EPS, 1.0 - PROB_EPS)
    count = prob.size
    loss = -np.mean(target * np.log(prob) + (1.0 - target) * np.log(1.0 - prob))
    grad = (-target / prob + (1.0 - target) / (1.0 - prob)) / count
    return float(loss), grad
