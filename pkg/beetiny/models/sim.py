"""
Models for the tabletop simulator
^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^
"""
# pylint: disable=missing-class-docstring
import enum
import typing

import numpy as np

from ..utils.errors import ConfigError
from . import Point


class ObjectKind(enum.Enum):
    BLOCK = "block"
    DOOR = "door"
    DRAWER = "drawer"
    DISTRACTOR_BLOCK = "distractor_block"

    @property
    def is_block(self) -> bool:
        return self in (ObjectKind.BLOCK, ObjectKind.DISTRACTOR_BLOCK)


class ObjectState(typing.NamedTuple):
    """
    One object on the table

    Blocks use ``x``/``y`` as their center and ``size`` as radius. Doors use ``x``/``y`` as hinge
    pivot, ``angle`` as pose, ``size`` as panel length and ``lower``/``upper`` as hinge limits.
    Drawers use ``x``/``y`` as the handle position when closed, ``direction`` as the pull-out
    axis angle, ``extension`` as pose within ``[lower, upper]`` and ``size`` as half width.
    """
    name: str
    kind: ObjectKind
    x: float
    y: float
    angle: float = 0.0
    extension: float = 0.0
    size: float = 0.06
    intensity: float = 0.5
    lower: float = 0.0
    upper: float = 0.0
    direction: float = 0.0

    @property
    def position(self) -> Point:
        return self.x, self.y

    @property
    def axis(self) -> np.ndarray:
        return np.array([np.cos(self.direction), np.sin(self.direction)])

    def handle(self) -> np.ndarray:
        """
        Point at which the gripper manipulates the object
        """
        if self.kind is ObjectKind.DOOR:
            return np.array([self.x + self.size * np.cos(self.angle),
                             self.y + self.size * np.sin(self.angle)])
        if self.kind is ObjectKind.DRAWER:
            return np.array([self.x, self.y]) + self.extension * self.axis
        return np.array([self.x, self.y])

    def pose(self) -> np.ndarray:
        """
        Degrees of freedom of the object: ``(x, y)`` for blocks, ``(angle,)`` for doors and
        ``(extension,)`` for drawers
        """
        if self.kind is ObjectKind.DOOR:
            return np.array([self.angle])
        if self.kind is ObjectKind.DRAWER:
            return np.array([self.extension])
        return np.array([self.x, self.y])


class SimState(typing.NamedTuple):
    gripper: Point
    objects: typing.Tuple[ObjectState, ...]
    time: int = 0

    def find(self, name: str) -> ObjectState:
        for obj in self.objects:
            if obj.name == name:
                return obj
        raise KeyError(name)


class LayoutSpec(typing.NamedTuple):
    """
    Initial scene of an environment

    :param objects: Objects with their initial poses
    :param target_ids: Names of the objects exploration should be guided to
    :param gripper: Initial gripper position
    :param horizon: Steps per episode
    :param image_size: Side length of the rendered square image in pixels
    :param max_step: Gripper displacement for a unit action component
    """
    objects: typing.Tuple[ObjectState, ...]
    target_ids: typing.Tuple[str, ...]
    gripper: Point = (0.5, 0.5)
    horizon: int = 50
    image_size: int = 16
    max_step: float = 0.05

    @property
    def distractor_ids(self) -> typing.Tuple[str, ...]:
        return tuple(obj.name for obj in self.objects if obj.name not in self.target_ids)

    def initial_state(self) -> SimState:
        return SimState(gripper=(float(self.gripper[0]), float(self.gripper[1])),
                        objects=tuple(self.objects), time=0)

    def validate(self) -> "LayoutSpec":
        """
        :raises ConfigError: if the layout is malformed
        """
        names = [obj.name for obj in self.objects]
        if len(set(names)) != len(names):
            raise ConfigError("Object names in a layout must be unique")
        if not self.target_ids:
            raise ConfigError("A layout needs at least one target object")
        for target in self.target_ids:
            if target not in names:
                raise ConfigError(f"Target object '{target}' is not part of the layout")
        if self.horizon < 1 or self.image_size < 2 or self.max_step <= 0:
            raise ConfigError("horizon, image_size and max_step must be positive")
        if not all(0.0 <= value <= 1.0 for value in self.gripper):
            raise ConfigError("Gripper must start on the table")
        for obj in self.objects:
            if not 0.0 < obj.intensity <= 1.0 or obj.size <= 0:
                raise ConfigError(f"Object '{obj.name}': intensity must be in (0, 1] and size "
                                  f"positive")
            if obj.kind.is_block and not (0.0 <= obj.x <= 1.0 and 0.0 <= obj.y <= 1.0):
                raise ConfigError(f"Block '{obj.name}' must start on the table")
            if obj.kind is ObjectKind.DOOR and not obj.lower <= obj.angle <= obj.upper:
                raise ConfigError(f"Door '{obj.name}' starts outside its hinge limits")
            if obj.kind is ObjectKind.DRAWER and not obj.lower <= obj.extension <= obj.upper:
                raise ConfigError(f"Drawer '{obj.name}' starts outside its extension range")
        return self


class Observation(typing.NamedTuple):
    """
    What the environment emits after reset and every step

    ``frame`` is the rendered image quantized to 8 bits; agent-facing code only ever receives
    frames. ``truth`` is kept for metrics and example generation.
    """
    frame: np.ndarray
    truth: SimState

    @property
    def image(self) -> np.ndarray:
        return self.frame.astype(np.float64) / 255.0
