"""
Relevant examples
^^^^^^^^^^^^^^^^^

Procedural stand-in for the human who provides images of relevant states: the gripper hovers
near a target object while the target is shown in a random part of its relevant pose range.
Distractors always keep their initial poses.
"""
import typing

import numpy as np

from ..models.sim import LayoutSpec, ObjectKind, ObjectState, Observation, SimState
from ..nn.rng import Rng
from ..utils.errors import ConfigError
from .render import render

#: Maximum distance between gripper and the target's handle or center
EXAMPLE_RADIUS = 0.05
#: Uniform jitter of block positions per axis
BLOCK_JITTER = 0.02
#: Range of door deflections relative to the initial angle
DOOR_DEFLECTION = (np.deg2rad(5.0), np.deg2rad(45.0))


def _perturb(obj: ObjectState, rng: Rng) -> ObjectState:
    if obj.kind is ObjectKind.DOOR:
        deflection = rng.uniform(*DOOR_DEFLECTION) * (1.0 if rng.random() < 0.5 else -1.0)
        return obj._replace(angle=float(np.clip(obj.angle + deflection, obj.lower, obj.upper)))
    if obj.kind is ObjectKind.DRAWER:
        return obj._replace(extension=float(rng.uniform(obj.lower, obj.upper)))
    x, y = np.clip(np.array([obj.x, obj.y]) + rng.uniform(-BLOCK_JITTER, BLOCK_JITTER, size=2),
                   0.0, 1.0)
    return obj._replace(x=float(x), y=float(y))


def relevant_state(layout: LayoutSpec, target: str, rng: Rng,
                   radius: float = EXAMPLE_RADIUS) -> SimState:
    """
    Sample one relevant state for ``target``
    """
    state = layout.initial_state()
    objects = []
    handle = None
    for obj in state.objects:
        if obj.name == target:
            obj = _perturb(obj, rng)
            handle = obj.handle()
        objects.append(obj)
    if handle is None:
        raise ConfigError(f"Target object '{target}' is not part of the layout")

    distance = radius * np.sqrt(rng.random())
    direction = rng.uniform(0.0, 2.0 * np.pi)
    gripper = np.clip(handle + distance * np.array([np.cos(direction), np.sin(direction)]),
                      0.0, 1.0)
    return SimState(gripper=(float(gripper[0]), float(gripper[1])), objects=tuple(objects),
                    time=0)


def generate_relevant_examples(layout: LayoutSpec, count: int, rng: Rng,
                               targets: typing.Optional[typing.Sequence[str]] = None,
                               radius: float = EXAMPLE_RADIUS) -> typing.List[Observation]:
    """
    Generate ``count`` relevant observations

    With several targets, examples are assigned to the targets in turn, so each target gets an
    (almost) equal share.

    :param layout: Scene
    :param count: Number of examples, at least 1
    :param rng: Random stream
    :param targets: Objects to show; defaults to the layout's targets
    :param radius: Maximum gripper distance to the target's handle
    """
    if count < 1:
        raise ConfigError("At least one relevant example is required")
    targets = tuple(targets or layout.target_ids)
    examples = []
    for index in range(count):
        state = relevant_state(layout, targets[index % len(targets)], rng, radius=radius)
        examples.append(Observation(frame=render(state, layout.image_size), truth=state))
    return examples
