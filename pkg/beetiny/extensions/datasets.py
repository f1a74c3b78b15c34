"""
Datasets
^^^^^^^^

Binary dataset files. Layout (all little-endian):

* header ``<8sHH64sIIIII``: magic ``BEEDATA\\0``, format version, reserved, config hash (ASCII,
  zero padded), episode count ``E``, episode horizon ``T``, image height ``H``, image width ``W``,
  action size ``A``
* per episode: ``(T + 1) * H * W`` bytes of frames, then ``T * A`` 64 bit float actions

Ground truth states are not stored; episodes loaded from a file carry frames and actions only.
"""
from pathlib import Path
import struct
import typing

import numpy as np

from ..models.episode import Dataset, Episode
from ..utils.base import ExtensionBase
from ..utils.errors import ConfigError, DatasetError

MAGIC = b"BEEDATA\0"
VERSION = 1
HEADER = struct.Struct("<8sHH64sIIIII")

PathLike = typing.Union[str, Path]


class DatasetHeader(typing.NamedTuple):
    config_hash: str
    episodes: int
    horizon: int
    height: int
    width: int
    action_dim: int


def encode_dataset(dataset: Dataset) -> bytes:
    """
    Serialize a dataset

    :raises ConfigError: if episodes differ in horizon, image or action size
    """
    episodes = dataset.episodes
    if episodes:
        first = episodes[0]
        horizon, action_dim = first.actions.shape
        height, width = first.frames.shape[1:]
    else:
        horizon = action_dim = height = width = 0
    for episode in episodes:
        if episode.actions.shape != (horizon, action_dim) \
                or episode.frames.shape != (horizon + 1, height, width):
            raise ConfigError("All episodes of a dataset must have identical shapes")

    config_hash = dataset.config_hash.encode("ascii")
    if len(config_hash) > 64:
        raise ConfigError("Config hash must fit into 64 bytes")
    chunks = [HEADER.pack(MAGIC, VERSION, 0, config_hash, len(episodes), horizon, height, width,
                          action_dim)]
    for episode in episodes:
        chunks.append(np.ascontiguousarray(episode.frames, dtype=np.uint8).tobytes())
        chunks.append(np.ascontiguousarray(episode.actions, dtype="<f8").tobytes())
    return b"".join(chunks)


def decode_dataset(data: bytes) -> Dataset:
    """
    Parse serialized dataset bytes

    :raises DatasetError: on a bad header, truncated data or trailing bytes
    """
    if len(data) < HEADER.size:
        raise DatasetError("Dataset header truncated", offset=len(data))
    magic, version, _, raw_hash, count, horizon, height, width, action_dim = \
        HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise DatasetError("Not a dataset file (bad magic)", offset=0)
    if version != VERSION:
        raise DatasetError(f"Unsupported dataset version {version}", offset=8)
    try:
        config_hash = raw_hash.rstrip(b"\0").decode("ascii")
    except UnicodeDecodeError as error:
        raise DatasetError("Corrupt config hash", offset=12) from error

    frame_bytes = (horizon + 1) * height * width
    action_bytes = horizon * action_dim * 8
    offset = HEADER.size
    episodes = []
    for index in range(count):
        if offset + frame_bytes + action_bytes > len(data):
            raise DatasetError(f"Dataset truncated inside episode {index}", offset=len(data))
        frames = np.frombuffer(data, dtype=np.uint8, count=frame_bytes, offset=offset)
        offset += frame_bytes
        actions = np.frombuffer(data, dtype="<f8", count=horizon * action_dim, offset=offset)
        offset += action_bytes
        episodes.append(Episode(frames=frames.reshape(horizon + 1, height, width).copy(),
                                actions=actions.reshape(horizon, action_dim).astype(np.float64)))
    if offset != len(data):
        raise DatasetError("Trailing bytes after last episode", offset=offset)
    return Dataset(tuple(episodes), config_hash)


def save_dataset(dataset: Dataset, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_dataset(dataset))
    return path


def load_dataset(path: PathLike) -> Dataset:
    return decode_dataset(Path(path).read_bytes())


def read_header(path: PathLike) -> DatasetHeader:
    with Path(path).open("rb") as handle:
        data = handle.read(HEADER.size)
    if len(data) < HEADER.size:
        raise DatasetError("Dataset header truncated", offset=len(data))
    magic, _, _, raw_hash, *sizes = HEADER.unpack(data)
    if magic != MAGIC:
        raise DatasetError("Not a dataset file (bad magic)", offset=0)
    return DatasetHeader(raw_hash.rstrip(b"\0").decode("ascii", "replace"), *sizes)


class Datasets(ExtensionBase):
    """
    Dataset access for a :py:class:`~beetiny.bee.Bee` instance
    """
    def save(self, episodes: typing.Iterable[Episode], path: PathLike) -> Path:
        """
        Save episodes tagged with the hash of the instance's config
        """
        return save_dataset(Dataset(tuple(episodes), self.bee.config_hash), path)

    @staticmethod
    def load(path: PathLike) -> Dataset:
        return load_dataset(path)

    @staticmethod
    def header(path: PathLike) -> DatasetHeader:
        return read_header(path)
