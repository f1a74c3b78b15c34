"""
Rendering
^^^^^^^^^

Grayscale top-down renderer and PGM file helpers.

Pixel ``(row, col)`` of an ``N x N`` image shows the table point ``((col + 0.5) / N,
(row + 0.5) / N)``. Shapes are drawn with a one pixel wide linear edge ramp, composed by taking
the brightest value per pixel, and quantized to 8 bits.
"""
from pathlib import Path
import re
import typing

import numpy as np

from ..models.sim import ObjectKind, ObjectState, SimState
from ..utils.errors import DatasetError
from .layouts import GRIPPER_INTENSITY, GRIPPER_RADIUS

DOOR_HALF_WIDTH = 0.025
DRAWER_DEPTH = 0.25

_DRAW_ORDER = (ObjectKind.DRAWER, ObjectKind.DOOR, ObjectKind.BLOCK, ObjectKind.DISTRACTOR_BLOCK)


def pixel_centers(size: int) -> typing.Tuple[np.ndarray, np.ndarray]:
    coords = (np.arange(size) + 0.5) / size
    xs, ys = np.meshgrid(coords, coords)
    return xs, ys


def coverage(distance: np.ndarray, radius: float, size: int) -> np.ndarray:
    return np.clip((radius - distance) * size + 0.5, 0.0, 1.0)


def segment_distance(xs: np.ndarray, ys: np.ndarray, start: np.ndarray, end: np.ndarray) \
        -> np.ndarray:
    delta = end - start
    length_sq = float(delta @ delta)
    if length_sq == 0.0:
        return np.hypot(xs - start[0], ys - start[1])
    proj = np.clip(((xs - start[0]) * delta[0] + (ys - start[1]) * delta[1]) / length_sq,
                   0.0, 1.0)
    return np.hypot(xs - start[0] - proj * delta[0], ys - start[1] - proj * delta[1])


def _object_layer(obj: ObjectState, xs: np.ndarray, ys: np.ndarray, size: int) -> np.ndarray:
    if obj.kind is ObjectKind.DOOR:
        pivot = np.array([obj.x, obj.y])
        distance = segment_distance(xs, ys, pivot, obj.handle())
        return coverage(distance, DOOR_HALF_WIDTH, size) * obj.intensity
    if obj.kind is ObjectKind.DRAWER:
        handle = obj.handle()
        distance = segment_distance(xs, ys, handle, handle - DRAWER_DEPTH * obj.axis)
        return coverage(distance, obj.size, size) * obj.intensity
    distance = np.hypot(xs - obj.x, ys - obj.y)
    return coverage(distance, obj.size, size) * obj.intensity


def render(state: SimState, image_size: int = 16) -> np.ndarray:
    """
    Render a state

    :return: ``uint8`` array of shape ``(image_size, image_size)``
    """
    xs, ys = pixel_centers(image_size)
    canvas = np.zeros((image_size, image_size))
    for kind in _DRAW_ORDER:
        for obj in state.objects:
            if obj.kind is kind:
                np.maximum(canvas, _object_layer(obj, xs, ys, image_size), out=canvas)
    gripper = coverage(np.hypot(xs - state.gripper[0], ys - state.gripper[1]), GRIPPER_RADIUS,
                       image_size) * GRIPPER_INTENSITY
    np.maximum(canvas, gripper, out=canvas)
    return np.rint(np.clip(canvas, 0.0, 1.0) * 255.0).astype(np.uint8)


def write_pgm(path: typing.Union[str, Path], frame: np.ndarray, plain: bool = True) -> Path:
    """
    Write an 8 bit frame as PGM (``P2`` if ``plain``, else binary ``P5``)
    """
    path = Path(path)
    height, width = frame.shape
    header = f"{'P2' if plain else 'P5'}\n{width} {height}\n255\n"
    if plain:
        rows = "\n".join(" ".join(str(int(value)) for value in row) for row in frame)
        path.write_text(header + rows + "\n", encoding="ascii")
    else:
        path.write_bytes(header.encode("ascii") + np.ascontiguousarray(frame, np.uint8).tobytes())
    return path


_TOKEN = re.compile(rb"(#[^\n]*\n?)|(\S+)")


def read_pgm(path: typing.Union[str, Path]) -> np.ndarray:
    """
    Read a ``P2`` or ``P5`` PGM file with a maximum value of 255

    :raises DatasetError: if the file is not a supported PGM image
    """
    data = Path(path).read_bytes()
    tokens = []
    position = 0
    while len(tokens) < 4:
        match = _TOKEN.search(data, position)
        if match is None:
            raise DatasetError("Incomplete PGM header", offset=len(data))
        position = match.end()
        if match.group(2):
            tokens.append(match.group(2))

    magic = tokens[0]
    try:
        width, height, max_value = (int(token) for token in tokens[1:])
    except ValueError as error:
        raise DatasetError(f"Invalid PGM header: {error}", offset=position) from error
    if magic not in (b"P2", b"P5") or max_value != 255:
        raise DatasetError(f"Unsupported PGM variant {magic!r} / {max_value}", offset=0)

    count = width * height
    if magic == b"P5":
        # Exactly one whitespace byte separates header and raster
        start = position + 1
        if len(data) < start + count:
            raise DatasetError("PGM raster truncated", offset=len(data))
        values = np.frombuffer(data, dtype=np.uint8, count=count, offset=start)
    else:
        try:
            values = np.array([int(token) for token in data[position:].split()][:count])
        except ValueError as error:
            raise DatasetError(f"Invalid PGM value: {error}", offset=position) from error
        if values.size != count or values.min(initial=0) < 0 or values.max(initial=0) > 255:
            raise DatasetError("PGM raster truncated or out of range", offset=len(data))
    return values.astype(np.uint8).reshape(height, width)
