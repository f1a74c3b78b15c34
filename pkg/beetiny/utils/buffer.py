"""
Replay buffer
^^^^^^^^^^^^^

Append-only episode storage. Training batches are drawn from the most recent ``window`` episodes
only; nothing is ever removed.
"""
import typing

import numpy as np

from ..models.episode import Dataset, Episode
from ..nn.rng import Rng
from .errors import UsageError

DEFAULT_WINDOW = 500


class ReplayBuffer:
    """
    :param episodes: Initial content, e.g. a loaded dataset
    """
    def __init__(self, episodes: typing.Iterable[Episode] = ()):
        self._episodes: typing.List[Episode] = []
        for episode in episodes:
            self.append(episode)

    @classmethod
    def from_dataset(cls, dataset: Dataset) -> "ReplayBuffer":
        return cls(dataset.episodes)

    def __len__(self) -> int:
        return len(self._episodes)

    def __getitem__(self, index: int) -> Episode:
        return self._episodes[index]

    @property
    def episodes(self) -> typing.Tuple[Episode, ...]:
        return tuple(self._episodes)

    @property
    def transitions(self) -> int:
        return sum(episode.length for episode in self._episodes)

    def append(self, episode: Episode) -> None:
        if self._episodes:
            first = self._episodes[0]
            if episode.frames.shape[1:] != first.frames.shape[1:]:
                raise UsageError("All episodes in a buffer must have the same image size")
        self._episodes.append(episode)

    def episode_indices(self, count: int, rng: Rng, window: int = DEFAULT_WINDOW) -> np.ndarray:
        """
        Draw episode indices uniformly from the most recent ``window`` episodes
        """
        if not self._episodes:
            raise UsageError("Cannot sample from an empty replay buffer")
        size = len(self._episodes)
        return rng.integers(max(0, size - window), size, size=count)

    def sample_frames(self, count: int, rng: Rng, window: int = DEFAULT_WINDOW) -> np.ndarray:
        """
        :return: ``uint8`` frames, shape ``(count, H, W)``
        """
        indices = self.episode_indices(count, rng, window)
        frames = []
        for index in indices:
            episode = self._episodes[index]
            frames.append(episode.frames[rng.integers(0, len(episode.frames))])
        return np.stack(frames)

    def sample_segments(self, count: int, horizon: int, rng: Rng,
                        window: int = DEFAULT_WINDOW) -> typing.Tuple[np.ndarray, np.ndarray]:
        """
        Draw contiguous segments of ``horizon`` transitions

        :return: (``uint8`` frames of shape ``(count, horizon + 1, H, W)``, actions of shape
                 ``(count, horizon, 2)``)
        :raises UsageError: if an episode is shorter than ``horizon``
        """
        indices = self.episode_indices(count, rng, window)
        frames, actions = [], []
        for index in indices:
            episode = self._episodes[index]
            if episode.length < horizon:
                raise UsageError(f"Segment horizon {horizon} exceeds episode length "
                                 f"{episode.length}")
            start = rng.integers(0, episode.length - horizon + 1)
            frames.append(episode.frames[start:start + horizon + 1])
            actions.append(episode.actions[start:start + horizon])
        return np.stack(frames), np.stack(actions)
