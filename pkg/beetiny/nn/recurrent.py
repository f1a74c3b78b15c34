"""
Recurrent cell
^^^^^^^^^^^^^^

Gated recurrent unit with explicit per-step caches, so callers can run backpropagation through
time over rollouts of any length.

Gate order in the stacked weights is (reset, update, candidate)::

    r = sigmoid(Wx_r x + bx_r + Wh_r h + bh_r)
    z = sigmoid(Wx_z x + bx_z + Wh_z h + bh_z)
    n = tanh(Wx_n x + bx_n + r * (Wh_n h + bh_n))
    h' = (1 - z) * n + z * h
"""
import typing

import numpy as np

from ..utils.errors import ConfigError
from .functional import sigmoid
from .params import ParamTensor
from .rng import Rng


class GruCache(typing.NamedTuple):
    inputs: np.ndarray
    hidden: np.ndarray
    reset: np.ndarray
    update: np.ndarray
    candidate: np.ndarray
    hidden_candidate: np.ndarray


class GRUCell:
    """
    :param input_dim: Size of the per-step input
    :param hidden_dim: Size of the hidden state
    :param rng: Stream for the weight initialization
    :param name: Prefix of the parameter names
    """
    def __init__(self, input_dim: int, hidden_dim: int, rng: Rng, name: str = "gru"):
        if input_dim < 1 or hidden_dim < 1:
            raise ConfigError("GRU dimensions must be positive")
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        self.name = name
        scale_x = np.sqrt(1.0 / input_dim)
        scale_h = np.sqrt(1.0 / hidden_dim)
        self.weight_x = ParamTensor(f"{name}.weight_x",
                                    rng.uniform(-scale_x, scale_x,
                                                size=(3 * hidden_dim, input_dim)))
        self.weight_h = ParamTensor(f"{name}.weight_h",
                                    rng.uniform(-scale_h, scale_h,
                                                size=(3 * hidden_dim, hidden_dim)))
        self.bias_x = ParamTensor(f"{name}.bias_x", np.zeros(3 * hidden_dim))
        self.bias_h = ParamTensor(f"{name}.bias_h", np.zeros(3 * hidden_dim))

    def parameters(self) -> typing.List[ParamTensor]:
        return [self.weight_x, self.weight_h, self.bias_x, self.bias_h]

    def initial_state(self, batch: typing.Optional[int] = None) -> np.ndarray:
        shape = (self.hidden_dim,) if batch is None else (batch, self.hidden_dim)
        return np.zeros(shape)

    def _gates(self, x: np.ndarray, h: np.ndarray) -> GruCache:
        if x.shape[-1] != self.input_dim or h.shape[-1] != self.hidden_dim:
            raise ConfigError(f"{self.name}: expected input/hidden dims "
                              f"{self.input_dim}/{self.hidden_dim}, got {x.shape}/{h.shape}")
        size = self.hidden_dim
        gates_x = x @ self.weight_x.values.T + self.bias_x.values
        gates_h = h @ self.weight_h.values.T + self.bias_h.values
        reset = sigmoid(gates_x[..., :size] + gates_h[..., :size])
        update = sigmoid(gates_x[..., size:2 * size] + gates_h[..., size:2 * size])
        hidden_candidate = gates_h[..., 2 * size:]
        candidate = np.tanh(gates_x[..., 2 * size:] + reset * hidden_candidate)
        return GruCache(x, h, reset, update, candidate, hidden_candidate)

    @staticmethod
    def _combine(cache: GruCache) -> np.ndarray:
        return (1.0 - cache.update) * cache.candidate + cache.update * cache.hidden

    def step(self, x: np.ndarray, h: np.ndarray) -> typing.Tuple[np.ndarray, GruCache]:
        """
        Advance one step

        :param x: Input of shape ``(input_dim,)`` or ``(B, input_dim)``
        :param h: Hidden state of matching leading shape
        :return: (next hidden state, cache for :py:meth:`backward`)
        """
        cache = self._gates(np.asarray(x, dtype=np.float64), np.asarray(h, dtype=np.float64))
        return self._combine(cache), cache

    def predict_step(self, x: np.ndarray, h: np.ndarray) -> np.ndarray:
        return self.step(x, h)[0]

    def backward(self, cache: GruCache, grad_next: np.ndarray) \
            -> typing.Tuple[np.ndarray, np.ndarray]:
        """
        Accumulate parameter gradients of one step

        :param cache: Cache returned by :py:meth:`step`
        :param grad_next: Gradient w.r.t. the step's output hidden state
        :return: (gradient w.r.t. the input, gradient w.r.t. the previous hidden state)
        """
        squeeze = cache.inputs.ndim == 1
        x, h = np.atleast_2d(cache.inputs), np.atleast_2d(cache.hidden)
        reset, update = np.atleast_2d(cache.reset), np.atleast_2d(cache.update)
        candidate = np.atleast_2d(cache.candidate)
        hidden_candidate = np.atleast_2d(cache.hidden_candidate)
        grad_next = np.atleast_2d(grad_next)

        grad_candidate = grad_next * (1.0 - update) * (1.0 - np.square(candidate))
        grad_update = grad_next * (h - candidate) * update * (1.0 - update)
        grad_reset = grad_candidate * hidden_candidate * reset * (1.0 - reset)

        grad_gates_x = np.concatenate([grad_reset, grad_update, grad_candidate], axis=-1)
        grad_gates_h = np.concatenate([grad_reset, grad_update, grad_candidate * reset], axis=-1)

        self.weight_x.grad += grad_gates_x.T @ x
        self.bias_x.grad += grad_gates_x.sum(axis=0)
        self.weight_h.grad += grad_gates_h.T @ h
        self.bias_h.grad += grad_gates_h.sum(axis=0)

        grad_x = grad_gates_x @ self.weight_x.values
        grad_h = grad_next * update + grad_gates_h @ self.weight_h.values
        if squeeze:
            return grad_x[0], grad_h[0]
        return grad_x, grad_h
