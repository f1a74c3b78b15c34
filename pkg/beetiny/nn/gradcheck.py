"""
Finite-difference gradient check
^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^

Compares the analytic gradients written by a model's backward pass against central differences.
"""
import typing

import numpy as np

from .params import ParamTensor
from .rng import Rng


class GradCheckResult(typing.NamedTuple):
    max_relative_error: float
    worst_param: str
    worst_index: typing.Tuple[int, ...]
    checked: int


#: Denominator floor, so gradients near zero are compared in absolute terms
TINY = 1e-5


def relative_error(analytic: float, numeric: float, tiny: float = TINY) -> float:
    return abs(analytic - numeric) / max(abs(analytic) + abs(numeric), tiny)


def gradient_check(loss_fn: typing.Callable[[bool], float],
                   params: typing.Sequence[ParamTensor], rng: Rng,
                   coords_per_param: int = 5, h: float = 1e-5) -> GradCheckResult:
    """
    Check random coordinates of every parameter

    ``loss_fn(backward)`` must evaluate the loss with frozen randomness; when ``backward`` is
    ``True`` it must also accumulate the analytic gradients into ``params``.

    :param loss_fn: Loss closure
    :param params: Parameters to perturb
    :param rng: Chooses the coordinates
    :param coords_per_param: Coordinates per parameter (all, if the parameter is smaller)
    :param h: Perturbation step
    """
    for param in params:
        param.zero_grad()
    loss_fn(True)
    analytic = {param.name: param.grad.copy() for param in params}

    worst = GradCheckResult(0.0, "", (), 0)
    checked = 0
    for param in params:
        size = param.values.size
        flat_indices = rng.permutation(size)[:min(coords_per_param, size)]
        for flat_index in flat_indices:
            index = np.unravel_index(int(flat_index), param.shape)
            original = param.values[index]
            param.values[index] = original + h
            loss_plus = loss_fn(False)
            param.values[index] = original - h
            loss_minus = loss_fn(False)
            param.values[index] = original
            numeric = (loss_plus - loss_minus) / (2.0 * h)
            error = relative_error(float(analytic[param.name][index]), numeric)
            checked += 1
            if error >= worst.max_relative_error:
                worst = GradCheckResult(error, param.name, tuple(int(i) for i in index), 0)

    for param in params:
        param.zero_grad()
    return worst._replace(checked=checked)
