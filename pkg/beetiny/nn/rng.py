"""
Random streams
^^^^^^^^^^^^^^

Every random draw in ``beetiny`` goes through an :py:class:`Rng`. Streams are derived from a seed
and a key path, so independent consumers (environment, planner, each ensemble member, ...) get
their own reproducible stream regardless of the order in which they draw.
"""
import typing
from zlib import crc32

import numpy as np

Key = typing.Union[int, str]

_SEED_MASK = (1 << 64) - 1


def _key_to_int(key: Key) -> int:
    if isinstance(key, str):
        return crc32(key.encode("utf-8"))
    if key < 0:
        raise ValueError(f"Stream keys must not be negative. Got: {key}")
    return int(key)


class Rng:
    """
    Seeded random stream

    Identical ``seed`` and ``key`` always produce the identical sequence of draws.

    :param seed: 64 bit seed
    :param key: Path of sub-stream keys
    """
    def __init__(self, seed: int, key: typing.Sequence[Key] = ()):
        self.seed = int(seed) & _SEED_MASK
        self.key = tuple(_key_to_int(item) for item in key)
        sequence = np.random.SeedSequence(entropy=[self.seed, *self.key])
        self.generator = np.random.Generator(np.random.PCG64(sequence))

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, key={self.key})"

    def child(self, *key: Key) -> "Rng":
        """
        Derive an independent sub-stream

        The child only depends on this stream's seed and key, not on draws made so far.
        """
        return Rng(self.seed, self.key + tuple(_key_to_int(item) for item in key))

    def normal(self, loc=0.0, scale=1.0, size=None) -> np.ndarray:
        return self.generator.normal(loc, scale, size)

    def uniform(self, low=0.0, high=1.0, size=None) -> np.ndarray:
        return self.generator.uniform(low, high, size)

    def random(self, size=None) -> np.ndarray:
        return self.generator.random(size)

    def integers(self, low, high=None, size=None) -> np.ndarray:
        return self.generator.integers(low, high, size)

    def beta(self, a: float, b: float, size=None) -> np.ndarray:
        return self.generator.beta(a, b, size)

    def permutation(self, n: int) -> np.ndarray:
        return self.generator.permutation(n)
