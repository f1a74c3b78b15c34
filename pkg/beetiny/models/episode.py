"""
Models for collected experience
^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^
"""
# pylint: disable=missing-class-docstring
import typing

import numpy as np

from .sim import SimState


class Episode(typing.NamedTuple):
    """
    One fixed-horizon episode

    :param frames: ``uint8`` observations, shape ``(T + 1, H, W)``, starting with the reset frame
    :param actions: Executed (clipped) actions, shape ``(T, 2)``
    :param states: Ground truth states aligned with ``frames``; empty for episodes loaded from a
                   dataset file
    :param plan_scores: Score of the selected candidate of each planning call
    """
    frames: np.ndarray
    actions: np.ndarray
    states: typing.Tuple[SimState, ...] = ()
    plan_scores: typing.Tuple[float, ...] = ()

    @property
    def length(self) -> int:
        return len(self.actions)

    def images(self) -> np.ndarray:
        return self.frames.astype(np.float64) / 255.0

    def without_truth(self) -> "Episode":
        return self._replace(states=())


class Dataset(typing.NamedTuple):
    """
    Everything collected by an exploration run

    :param episodes: Episodes in collection order
    :param config_hash: Hash of the config that produced the data
    """
    episodes: typing.Tuple[Episode, ...]
    config_hash: str = ""

    @property
    def transitions(self) -> int:
        return sum(episode.length for episode in self.episodes)
