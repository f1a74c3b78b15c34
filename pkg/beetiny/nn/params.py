"""
Parameters and checkpoints
^^^^^^^^^^^^^^^^^^^^^^^^^^

Checkpoint file layout:

* 8 bytes: little-endian unsigned length ``N`` of the JSON header
* ``N`` bytes: UTF-8 JSON ``{"version": 1, "tensors": [{"name": ..., "shape": [...]}, ...]}``
* the tensors' values as little-endian 64 bit floats, in header order
"""
from hashlib import sha256
import json
from pathlib import Path
import struct
import typing

import numpy as np

from ..utils.errors import ConfigError, DatasetError

CHECKPOINT_VERSION = 1
_LENGTH = struct.Struct("<Q")


class ParamTensor:
    """
    Trainable array with its gradient accumulator

    :param name: Unique name within the owning model, used in checkpoints and diagnostics
    :param values: Initial values; copied and converted to 64 bit floats
    """
    def __init__(self, name: str, values: typing.Any):
        self.name = name
        self.values = np.array(values, dtype=np.float64)
        self.grad = np.zeros_like(self.values)

    def __repr__(self) -> str:
        return f"ParamTensor({self.name!r}, shape={self.shape})"

    @property
    def shape(self) -> typing.Tuple[int, ...]:
        return self.values.shape

    def zero_grad(self) -> None:
        self.grad.fill(0.0)


def named_arrays(params: typing.Iterable[ParamTensor]) -> typing.Dict[str, np.ndarray]:
    """
    Map parameter names to their value arrays (no copies)

    :raises ConfigError: on duplicate names
    """
    arrays = {}
    for param in params:
        if param.name in arrays:
            raise ConfigError(f"Duplicate parameter name: {param.name}")
        arrays[param.name] = param.values
    return arrays


def parameter_digest(arrays: typing.Mapping[str, np.ndarray]) -> str:
    """
    Hash of names and exact values, to detect whether anything changed
    """
    digest = sha256()
    for name in sorted(arrays):
        digest.update(name.encode("utf-8"))
        digest.update(np.ascontiguousarray(arrays[name], dtype="<f8").tobytes())
    return digest.hexdigest()


def save_checkpoint(path: typing.Union[str, Path], arrays: typing.Mapping[str, np.ndarray]) \
        -> Path:
    """
    Write arrays to a checkpoint file in the order of ``arrays``
    """
    path = Path(path)
    header = json.dumps({
        "version": CHECKPOINT_VERSION,
        "tensors": [{"name": name, "shape": list(np.shape(array))}
                    for name, array in arrays.items()]
    }).encode("utf-8")
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as handle:
        handle.write(_LENGTH.pack(len(header)))
        handle.write(header)
        for array in arrays.values():
            handle.write(np.ascontiguousarray(array, dtype="<f8").tobytes())
    return path


def load_checkpoint(path: typing.Union[str, Path], arrays: typing.Mapping[str, np.ndarray]) \
        -> None:
    """
    Read a checkpoint into existing arrays (in place)

    :param path: Checkpoint file
    :param arrays: Target arrays by name; every tensor of the file must have a target of equal shape
    :raises DatasetError: if the file is truncated or corrupt
    :raises ConfigError: if the file does not match the targets
    """
    data = Path(path).read_bytes()
    if len(data) < _LENGTH.size:
        raise DatasetError("Checkpoint header missing", offset=len(data))
    (length,) = _LENGTH.unpack_from(data, 0)
    offset = _LENGTH.size
    try:
        header = json.loads(data[offset:offset + length].decode("utf-8"))
        tensors = header["tensors"]
    except (UnicodeDecodeError, ValueError, KeyError) as error:
        raise DatasetError(f"Corrupt checkpoint header: {error}", offset=offset) from error
    if header.get("version") != CHECKPOINT_VERSION:
        raise DatasetError(f"Unsupported checkpoint version {header.get('version')}",
                           offset=offset)
    offset += length

    for tensor in tensors:
        name, shape = tensor["name"], tuple(tensor["shape"])
        if name not in arrays:
            raise ConfigError(f"Checkpoint tensor {name} has no counterpart in the model")
        if tuple(np.shape(arrays[name])) != shape:
            raise ConfigError(f"Shape mismatch for {name}: file {shape}, "
                              f"model {np.shape(arrays[name])}")
        size = int(np.prod(shape, dtype=np.int64)) * 8
        if offset + size > len(data):
            raise DatasetError(f"Checkpoint truncated inside tensor {name}", offset=len(data))
        values = np.frombuffer(data, dtype="<f8", count=size // 8, offset=offset)
        np.copyto(arrays[name], values.reshape(shape))
        offset += size

    if offset != len(data):
        raise DatasetError("Trailing bytes after last tensor", offset=offset)
