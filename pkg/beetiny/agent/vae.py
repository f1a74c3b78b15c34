"""
Variational autoencoder
^^^^^^^^^^^^^^^^^^^^^^^

Dense VAE with a diagonal Gaussian posterior and a standard normal prior. The same class encodes
flattened images for the world model and latent vectors for the density models of
:py:class:`~beetiny.agent.baselines.SmmDensityPair`.

The training loss of a batch is the batch mean of::

    sum((decoder(z) - x) ** 2) + beta * KL(q(z | x) || N(0, I))

with ``z`` drawn from the posterior by reparameterization.
"""
import logging
import typing

import numpy as np

from ..nn.functional import clamp_logvar, gaussian_sample, kl_standard_normal
from ..nn.layers import Activation, DenseNet
from ..nn.optim import Adam
from ..nn.params import ParamTensor
from ..nn.rng import Rng
from ..utils.errors import ConfigError, UsageError, ensure_finite


class VaeLoss(typing.NamedTuple):
    total: float
    reconstruction: float
    kl: float


class VariationalAutoencoder:
    """
    :param input_dim: Size of the flattened input
    :param latent_dim: Size of the latent space
    :param encoder_hidden: Hidden layer widths of the encoder
    :param decoder_hidden: Hidden layer widths of the decoder
    :param beta: Weight of the KL term
    :param rng: Stream for the initialization
    :param lr: Learning rate of the VAE's own Adam optimizer
    :param output_activation: Activation of the decoder output
    :param name: Prefix of the parameter names
    """
    # pylint: disable=too-many-arguments
    def __init__(self, input_dim: int, latent_dim: int, encoder_hidden: typing.Sequence[int],
                 decoder_hidden: typing.Sequence[int], beta: float, rng: Rng, lr: float = 1e-3,
                 output_activation: Activation = Activation.SIGMOID, name: str = "vae"):
        if input_dim < 1 or latent_dim < 1:
            raise ConfigError("VAE dimensions must be positive")
        self.input_dim = input_dim
        self.latent_dim = latent_dim
        self.beta = beta
        self.name = name
        self.encoder = DenseNet.build([input_dim, *encoder_hidden, 2 * latent_dim],
                                      rng.child("encoder"), name=f"{name}.encoder")
        self.decoder = DenseNet.build([latent_dim, *decoder_hidden, input_dim],
                                      rng.child("decoder"), output_activation=output_activation,
                                      name=f"{name}.decoder")
        self.optimizer = Adam(self.parameters(), lr=lr)

    def parameters(self) -> typing.List[ParamTensor]:
        return self.encoder.parameters() + self.decoder.parameters()

    def _split(self, out: np.ndarray) -> typing.Tuple[np.ndarray, np.ndarray]:
        return out[..., :self.latent_dim], out[..., self.latent_dim:]

    def _inputs(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise ConfigError(f"{self.name}: expected inputs of size {self.input_dim}, "
                              f"got shape {x.shape}")
        if len(x) == 0:
            raise UsageError(f"{self.name}: empty batch")
        return x

    def posterior(self, x: np.ndarray) -> typing.Tuple[np.ndarray, np.ndarray]:
        """
        Posterior mean and log-variance (pure)
        """
        return self._split(self.encoder.predict(x))

    def decode(self, z: np.ndarray) -> np.ndarray:
        return self.decoder.predict(z)

    def reconstruct(self, x: np.ndarray) -> np.ndarray:
        mean, _ = self.posterior(x)
        return self.decode(mean)

    def elbo(self, x: np.ndarray) -> np.ndarray:
        """
        Deterministic evidence lower bound surrogate per input row

        The reconstruction uses the posterior mean instead of a sample, so the value is a pure
        function of the input and the parameters.
        """
        x = np.asarray(x, dtype=np.float64)
        mean, logvar = self.posterior(x)
        error = np.sum(np.square(self.decode(mean) - x), axis=-1)
        return -(error + self.beta * kl_standard_normal(mean, logvar))

    def loss(self, x: np.ndarray, rng: typing.Optional[Rng] = None,
             noise: typing.Optional[np.ndarray] = None) -> VaeLoss:
        """
        Evaluate the loss of a batch and accumulate its gradients

        :param x: Batch of flattened inputs, shape ``(B, input_dim)``
        :param rng: Source of the posterior noise
        :param noise: Frozen posterior noise, shape ``(B, latent_dim)``
        :raises NonFiniteError: if the loss is not finite
        """
        x = self._inputs(x)
        batch = len(x)
        mean, logvar = self._split(self.encoder.forward(x))
        sample, noise = gaussian_sample(mean, logvar, rng=rng, noise=noise)
        recon = self.decoder.forward(sample)

        diff = recon - x
        reconstruction = float(np.sum(np.square(diff))) / batch
        kl = float(np.sum(kl_standard_normal(mean, logvar))) / batch
        total = ensure_finite(reconstruction + self.beta * kl, f"{self.name} loss",
                              reconstruction=reconstruction, kl=kl)

        grad_sample = self.decoder.backward(2.0 * diff / batch)
        clamped, passes = clamp_logvar(logvar)
        grad_mean = grad_sample + self.beta * mean / batch
        grad_logvar = (grad_sample * 0.5 * np.exp(0.5 * clamped) * noise
                       + self.beta * 0.5 * (np.exp(clamped) - 1.0) / batch) * passes
        self.encoder.backward(np.concatenate([grad_mean, grad_logvar], axis=-1))

        logger = logging.getLogger("beetiny.train")
        if logger.isEnabledFor(logging.DEBUG):
            logger.debug("%s loss %.6f (reconstruction %.6f, kl %.6f)", self.name, total,
                         reconstruction, kl)
        return VaeLoss(total, reconstruction, kl)

    def update(self, x: np.ndarray, rng: Rng) -> VaeLoss:
        """
        One optimizer step on a batch
        """
        self.optimizer.zero_grad()
        result = self.loss(x, rng=rng)
        self.optimizer.step()
        return result

    def named_arrays(self) -> typing.Dict[str, np.ndarray]:
        return {param.name: param.values for param in self.parameters()}
