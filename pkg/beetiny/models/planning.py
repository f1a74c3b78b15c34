"""
Models for planning results
^^^^^^^^^^^^^^^^^^^^^^^^^^^
"""
# pylint: disable=missing-class-docstring
import typing

import numpy as np


class CandidatePlan(typing.NamedTuple):
    """
    :param actions: Action sequence, shape ``(H, 2)``, within ``[-1, 1]``
    :param predicted_latents: Latents predicted by the world model, shape ``(H, L)``
    :param score: Trajectory reward (exploration) or negated cost (goal reaching)
    """
    actions: np.ndarray
    predicted_latents: np.ndarray
    score: float


class Refit(typing.NamedTuple):
    mean: np.ndarray
    std: np.ndarray


class GoalPlan(typing.NamedTuple):
    """
    Result of goal-image planning

    :param plan: Lowest cost candidate over all iterations
    :param refits: Sampling distribution fitted to the elites after each iteration but the last
    :param best_costs: Lowest cost found in each iteration
    """
    plan: CandidatePlan
    refits: typing.Tuple[Refit, ...]
    best_costs: typing.Tuple[float, ...]

    @property
    def actions(self) -> np.ndarray:
        return self.plan.actions
