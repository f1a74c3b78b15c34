"""
Optimizer
^^^^^^^^^
"""
import typing

import numpy as np

from ..utils.errors import NonFiniteError, non_finite_counts
from .params import ParamTensor


class AdamState:
    """
    Moment accumulators and hyper-parameters of one Adam optimizer

    :param params: Parameters updated by this optimizer
    """
    # pylint: disable=too-many-arguments
    def __init__(self, params: typing.Sequence[ParamTensor], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.first_moment = {param.name: np.zeros_like(param.values) for param in params}
        self.second_moment = {param.name: np.zeros_like(param.values) for param in params}
        self.step_count = 0
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps


def adam_step(params: typing.Sequence[ParamTensor], state: AdamState) -> None:
    """
    Apply one bias-corrected Adam update and zero the gradients afterwards

    All gradients are checked before any parameter changes, so a failing step leaves the
    parameters untouched.

    :raises NonFiniteError: if any gradient has ``nan`` or ``inf`` entries
    """
    bad = non_finite_counts({param.name: param.grad for param in params})
    if bad:
        raise NonFiniteError("Non-finite gradients",
                             diagnostics={"step": state.step_count, "tensors": bad})

    state.step_count += 1
    correction1 = 1.0 - state.beta1 ** state.step_count
    correction2 = 1.0 - state.beta2 ** state.step_count
    for param in params:
        first = state.first_moment[param.name]
        second = state.second_moment[param.name]
        first *= state.beta1
        first += (1.0 - state.beta1) * param.grad
        second *= state.beta2
        second += (1.0 - state.beta2) * np.square(param.grad)
        param.values -= state.lr * (first / correction1) \
            / (np.sqrt(second / correction2) + state.eps)
        param.zero_grad()


class Adam:
    """
    Convenience wrapper binding a parameter list to its :py:class:`AdamState`
    """
    def __init__(self, params: typing.Sequence[ParamTensor], lr: float = 1e-3, **kwargs):
        self.params = list(params)
        self.state = AdamState(self.params, lr=lr, **kwargs)

    def zero_grad(self) -> None:
        for param in self.params:
            param.zero_grad()

    def step(self) -> None:
        adam_step(self.params, self.state)
