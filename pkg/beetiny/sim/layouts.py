"""
Built-in layouts
^^^^^^^^^^^^^^^^

Scenes are described by :py:class:`beetiny.models.sim.LayoutSpec` objects. The named layouts of
:py:data:`LAYOUTS` cover the three exploration scenes: a target block between distractor blocks,
a hinged door and a drawer.
"""
import typing

import numpy as np

from ..models.sim import LayoutSpec, ObjectKind, ObjectState
from ..utils.errors import ConfigError

GRIPPER_RADIUS = 0.03
GRIPPER_INTENSITY = 1.0
BLOCK_RADIUS = 0.06
DOOR_LENGTH = 0.25
DOOR_RANGE = np.pi / 3
DRAWER_MAX_EXTENSION = 0.30
DRAWER_INITIAL_EXTENSION = 0.04
DRAWER_HALF_WIDTH = 0.07
#: Contact radius around door and drawer handles
HANDLE_RADIUS = 0.05

#: Positions used for extra distractor blocks, in order
DISTRACTOR_SLOTS = ((0.75, 0.75), (0.5, 0.2), (0.2, 0.3), (0.8, 0.3), (0.75, 0.15), (0.15, 0.15),
                    (0.9, 0.55), (0.9, 0.9))
DISTRACTOR_INTENSITIES = (0.45, 0.3, 0.55, 0.35, 0.4, 0.25, 0.5, 0.2)


def block(name: str, x: float, y: float, intensity: float, distractor: bool = False) \
        -> ObjectState:
    return ObjectState(name=name,
                       kind=ObjectKind.DISTRACTOR_BLOCK if distractor else ObjectKind.BLOCK,
                       x=x, y=y, size=BLOCK_RADIUS, intensity=intensity)


def distractors(count: int, skip: int = 0) -> typing.Tuple[ObjectState, ...]:
    if not 0 <= count <= len(DISTRACTOR_SLOTS) - skip:
        raise ConfigError(f"Between 0 and {len(DISTRACTOR_SLOTS) - skip} distractors supported")
    return tuple(
        block(f"distractor{index}", *DISTRACTOR_SLOTS[skip + index],
              intensity=DISTRACTOR_INTENSITIES[skip + index], distractor=True)
        for index in range(count)
    )


def blocks_layout(distractor_count: int = 2, **kwargs) -> LayoutSpec:
    """
    Target block in the lower left, distractor blocks elsewhere
    """
    target = block("target", 0.25, 0.75, intensity=0.7)
    return LayoutSpec(objects=(target,) + distractors(distractor_count), target_ids=("target",),
                      gripper=(0.5, 0.5), **kwargs)


def door_layout(distractor_count: int = 2, **kwargs) -> LayoutSpec:
    """
    Hinged door in the upper left corner plus distractor blocks
    """
    angle = -np.pi / 4
    door = ObjectState(name="door", kind=ObjectKind.DOOR, x=0.2, y=0.8, angle=angle,
                       size=DOOR_LENGTH, intensity=0.7, lower=angle - DOOR_RANGE,
                       upper=angle + DOOR_RANGE)
    return LayoutSpec(objects=(door,) + distractors(distractor_count, skip=2),
                      target_ids=("door",), gripper=(0.5, 0.5), **kwargs)


def drawer_layout(distractor_count: int = 2, **kwargs) -> LayoutSpec:
    """
    Drawer at the table edge, pulled out towards the table center, plus distractor blocks
    """
    drawer = ObjectState(name="drawer", kind=ObjectKind.DRAWER, x=0.5, y=0.95,
                         extension=DRAWER_INITIAL_EXTENSION, size=DRAWER_HALF_WIDTH,
                         intensity=0.7, lower=0.0, upper=DRAWER_MAX_EXTENSION,
                         direction=-np.pi / 2)
    return LayoutSpec(objects=(drawer,) + distractors(distractor_count, skip=2),
                      target_ids=("drawer",), gripper=(0.5, 0.4), **kwargs)


LAYOUTS = {
    "blocks": blocks_layout,
    "door": door_layout,
    "drawer": drawer_layout,
}


def get_layout(name: str, overrides: typing.Optional[typing.Mapping[str, typing.Any]] = None) \
        -> LayoutSpec:
    """
    Build a named layout

    Supported overrides: ``distractors`` (count), ``horizon``, ``image_size``, ``max_step`` and
    ``target_ids`` (list of object names).

    :raises ConfigError: for unknown layouts or overrides
    """
    try:
        factory = LAYOUTS[name]
    except KeyError as error:
        raise ConfigError(f"Unknown layout '{name}'. Choose from: "
                          f"{', '.join(sorted(LAYOUTS))}") from error

    overrides = dict(overrides or {})
    unknown = set(overrides) - {"distractors", "horizon", "image_size", "max_step", "target_ids"}
    if unknown:
        raise ConfigError(f"Unknown layout overrides: {', '.join(sorted(unknown))}")

    kwargs = {key: overrides[key] for key in ("horizon", "image_size", "max_step")
              if key in overrides}
    layout = factory(int(overrides.get("distractors", 2)), **kwargs)
    if "target_ids" in overrides:
        layout = layout._replace(target_ids=tuple(str(item) for item in overrides["target_ids"]))
    return layout.validate()
