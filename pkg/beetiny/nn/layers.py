"""
Dense networks
^^^^^^^^^^^^^^

Fully connected networks with hand-written reverse mode gradients and optional spectral
normalization of every weight matrix.

A layer computes ``act(x @ W.T + b)`` with ``W`` of shape ``(out, in)``. Inputs may be a single
vector or a batch of row vectors.
"""
import enum
import typing

import numpy as np

from ..utils.errors import ConfigError, UsageError
from .functional import sigmoid
from .params import ParamTensor
from .rng import Rng

#: Lower bound for singular value estimates
SIGMA_MIN = 1e-12


class Activation(enum.Enum):
    RELU = "relu"
    SIGMOID = "sigmoid"
    TANH = "tanh"
    IDENTITY = "identity"

    def apply(self, pre: np.ndarray) -> np.ndarray:
        if self is Activation.RELU:
            return np.maximum(pre, 0.0)
        if self is Activation.SIGMOID:
            return sigmoid(pre)
        if self is Activation.TANH:
            return np.tanh(pre)
        return pre

    def derivative(self, pre: np.ndarray, out: np.ndarray) -> np.ndarray:
        """
        Derivative of the activation, from the pre-activation and/or the output
        """
        if self is Activation.RELU:
            return (pre > 0.0).astype(np.float64)
        if self is Activation.SIGMOID:
            return out * (1.0 - out)
        if self is Activation.TANH:
            return 1.0 - np.square(out)
        return np.ones_like(pre)


def _normalize(vector: np.ndarray, fallback: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(vector)
    if norm < SIGMA_MIN:
        return fallback
    return vector / norm


class SpectralNormState:
    """
    Persistent singular vector estimates of one weight matrix

    :param u: Left singular vector estimate, length ``out``
    :param v: Right singular vector estimate, length ``in``
    """
    def __init__(self, u: np.ndarray, v: np.ndarray):
        self.u = np.asarray(u, dtype=np.float64)
        self.v = np.asarray(v, dtype=np.float64)

    @classmethod
    def create(cls, shape: typing.Tuple[int, int], rng: Rng) -> "SpectralNormState":
        out_dim, in_dim = shape
        u = rng.normal(size=out_dim)
        v = rng.normal(size=in_dim)
        return cls(u / np.linalg.norm(u), v / np.linalg.norm(v))

    def power_iteration(self, weight: np.ndarray, iterations: int = 1) -> None:
        for _ in range(iterations):
            self.v = _normalize(weight.T @ self.u, self.v)
            self.u = _normalize(weight @ self.v, self.u)

    def sigma(self, weight: np.ndarray) -> float:
        """
        Largest singular value estimate ``u^T W v``, clamped to at least ``1e-12``
        """
        return max(float(self.u @ weight @ self.v), SIGMA_MIN)


def spectral_normalize(weight: np.ndarray, power_iters: int,
                       state: typing.Optional[SpectralNormState] = None,
                       rng: typing.Optional[Rng] = None) \
        -> typing.Tuple[np.ndarray, SpectralNormState]:
    """
    Divide ``weight`` by a power iteration estimate of its largest singular value

    :param weight: Matrix of shape ``(out, in)``
    :param power_iters: Number of power iterations, at least 1
    :param state: Persistent singular vector estimates; created from ``rng`` if omitted
    :param rng: Random stream to initialize a new state
    :return: (normalized matrix, updated state)
    """
    if power_iters < 1:
        raise ConfigError("power_iters must be at least 1")
    weight = np.asarray(weight, dtype=np.float64)
    if state is None:
        state = SpectralNormState.create(weight.shape, rng if rng is not None else Rng(0))
    state.power_iteration(weight, power_iters)
    return weight / state.sigma(weight), state


class DenseLayer:
    """
    One fully connected layer

    :param weight: Weight of shape ``(out, in)``
    :param bias: Bias of shape ``(out,)``
    :param activation: Activation applied to the affine output
    :param spectral: Singular vector estimates; if given, the weight is spectrally normalized
    """
    def __init__(self, weight: ParamTensor, bias: ParamTensor, activation: Activation,
                 spectral: typing.Optional[SpectralNormState] = None):
        if len(weight.shape) != 2 or bias.shape != (weight.shape[0],):
            raise ConfigError(f"Incompatible layer shapes: weight {weight.shape}, "
                              f"bias {bias.shape}")
        self.weight = weight
        self.bias = bias
        self.activation = activation
        self.spectral = spectral

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]

    def effective_weight(self) -> typing.Tuple[np.ndarray, float]:
        if self.spectral is None:
            return self.weight.values, 1.0
        sigma = self.spectral.sigma(self.weight.values)
        return self.weight.values / sigma, sigma


class LayerCache(typing.NamedTuple):
    inputs: np.ndarray
    pre: np.ndarray
    out: np.ndarray
    weight: np.ndarray
    sigma: float


class DenseCache(typing.NamedTuple):
    layers: typing.Tuple[LayerCache, ...]
    squeeze: bool


class DenseNet:
    """
    Chain of :py:class:`DenseLayer` objects

    :py:meth:`forward` keeps the intermediates needed by :py:meth:`backward` in
    :py:attr:`cache`; :py:meth:`predict` evaluates the same function without touching any state
    and is safe to call concurrently with frozen parameters.

    :param layers: Layers in evaluation order
    :param name: Prefix of the parameter names
    :raises ConfigError: if consecutive layer dimensions do not chain
    """
    def __init__(self, layers: typing.Sequence[DenseLayer], name: str = "net"):
        if not layers:
            raise ConfigError("A network needs at least one layer")
        for first, second in zip(layers, layers[1:]):
            if first.out_dim != second.in_dim:
                raise ConfigError(f"Layer dimensions do not chain: {first.out_dim} -> "
                                  f"{second.in_dim}")
        self.layers = list(layers)
        self.name = name
        self.cache: typing.Optional[DenseCache] = None

    # pylint: disable=too-many-arguments
    @classmethod
    def build(cls, sizes: typing.Sequence[int], rng: Rng,
              hidden_activation: Activation = Activation.RELU,
              output_activation: Activation = Activation.IDENTITY,
              spectral_norm: bool = False, name: str = "net") -> "DenseNet":
        """
        Create a randomly initialized network

        ReLU layers use He initialization, all others Glorot initialization; biases start at zero.

        :param sizes: Layer widths including input and output, e.g. ``[32, 64, 1]``
        """
        if len(sizes) < 2:
            raise ConfigError("sizes must name at least the input and output dimension")
        layers = []
        for index, (fan_in, fan_out) in enumerate(zip(sizes, sizes[1:])):
            last = index == len(sizes) - 2
            activation = output_activation if last else hidden_activation
            if activation is Activation.RELU:
                scale = np.sqrt(2.0 / fan_in)
            else:
                scale = np.sqrt(2.0 / (fan_in + fan_out))
            weight = ParamTensor(f"{name}.{index}.weight",
                                 rng.normal(scale=scale, size=(fan_out, fan_in)))
            bias = ParamTensor(f"{name}.{index}.bias", np.zeros(fan_out))
            spectral = SpectralNormState.create((fan_out, fan_in), rng) if spectral_norm \
                else None
            layers.append(DenseLayer(weight, bias, activation, spectral))
        return cls(layers, name=name)

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    def parameters(self) -> typing.List[ParamTensor]:
        params = []
        for layer in self.layers:
            params += [layer.weight, layer.bias]
        return params

    def buffers(self) -> typing.Dict[str, np.ndarray]:
        """
        Non-trainable state (singular vector estimates) by name
        """
        data = {}
        for index, layer in enumerate(self.layers):
            if layer.spectral is not None:
                data[f"{self.name}.{index}.sn_u"] = layer.spectral.u
                data[f"{self.name}.{index}.sn_v"] = layer.spectral.v
        return data

    def refresh_spectral_norm(self, iterations: int = 1) -> None:
        """
        Advance the power iteration of every spectrally normalized layer
        """
        for layer in self.layers:
            if layer.spectral is not None:
                layer.spectral.power_iteration(layer.weight.values, iterations)

    def _check_input(self, x: np.ndarray) -> typing.Tuple[np.ndarray, bool]:
        x = np.asarray(x, dtype=np.float64)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ConfigError(f"{self.name}: expected input dimension {self.in_dim}, "
                              f"got shape {x.shape}")
        return x, squeeze

    def predict(self, x: np.ndarray) -> np.ndarray:
        """
        Evaluate the network without caching anything
        """
        x, squeeze = self._check_input(x)
        for layer in self.layers:
            weight, _ = layer.effective_weight()
            x = layer.activation.apply(x @ weight.T + layer.bias.values)
        return x[0] if squeeze else x

    def forward(self, x: np.ndarray) -> np.ndarray:
        """
        Evaluate the network and keep the intermediates for :py:meth:`backward`
        """
        x, squeeze = self._check_input(x)
        caches = []
        for layer in self.layers:
            weight, sigma = layer.effective_weight()
            pre = x @ weight.T + layer.bias.values
            out = layer.activation.apply(pre)
            caches.append(LayerCache(x, pre, out, weight, sigma))
            x = out
        self.cache = DenseCache(tuple(caches), squeeze)
        return x[0] if squeeze else x

    def backward(self, upstream_grad: np.ndarray, cache: typing.Optional[DenseCache] = None) \
            -> np.ndarray:
        """
        Accumulate parameter gradients and return the gradient w.r.t. the input

        :param upstream_grad: Gradient of the loss w.r.t. the network output
        :param cache: Intermediates of a :py:meth:`forward` call; defaults to the latest one
        :raises UsageError: if no forward pass was cached
        """
        cache = cache if cache is not None else self.cache
        if cache is None:
            raise UsageError(f"{self.name}: backward called without a cached forward pass")
        grad = np.asarray(upstream_grad, dtype=np.float64)
        if cache.squeeze:
            grad = grad[None, :]

        for layer, layer_cache in zip(reversed(self.layers), reversed(cache.layers)):
            grad_pre = grad * layer.activation.derivative(layer_cache.pre, layer_cache.out)
            grad_weight = grad_pre.T @ layer_cache.inputs
            if layer.spectral is None:
                layer.weight.grad += grad_weight
            else:
                # W_eff = W / sigma with sigma = u^T W v and (u, v) held fixed
                sigma = layer_cache.sigma
                coupling = np.sum(grad_weight * layer_cache.weight)
                layer.weight.grad += (grad_weight - coupling * np.outer(layer.spectral.u,
                                                                        layer.spectral.v)) / sigma
            layer.bias.grad += grad_pre.sum(axis=0)
            grad = grad_pre @ layer_cache.weight

        return grad[0] if cache.squeeze else grad
