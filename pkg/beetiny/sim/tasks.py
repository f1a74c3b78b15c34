"""
Downstream tasks
^^^^^^^^^^^^^^^^

Goal-reaching tasks used to judge a collected dataset. Each task names a layout, derives a goal
state from the layout's initial state (rendered into the goal image the planner sees) and decides
success from ground truth at the end of a trial.
"""
import typing

import numpy as np

from ..models.sim import LayoutSpec, ObjectKind, SimState
from ..utils.errors import ConfigError
from .layouts import get_layout
from .metrics import THRESHOLDS

DRAWER_GOAL_EXTENSION = 0.30
BLOCK_GOAL_SHIFT = 0.16
DOOR_GOAL_TURN = 0.35


class DownstreamTask(typing.NamedTuple):
    """
    :param name: Task name
    :param layout_name: Name of the layout in :py:data:`~beetiny.sim.layouts.LAYOUTS`
    :param target: Object the task is about
    :param goal: Maps the initial state to the goal state
    :param succeeded: Predicate over (initial state, final state)
    :param trials: Default number of evaluation trials
    """
    name: str
    layout_name: str
    target: str
    goal: typing.Callable[[SimState, str], SimState]
    succeeded: typing.Callable[[SimState, SimState, str], bool]
    trials: int = 100

    def layout(self, overrides: typing.Optional[typing.Mapping] = None) -> LayoutSpec:
        return get_layout(self.layout_name, overrides)

    def goal_state(self, initial: SimState) -> SimState:
        return self.goal(initial, self.target)

    def is_success(self, initial: SimState, final: SimState) -> bool:
        return bool(self.succeeded(initial, final, self.target))


def _replace_target(state: SimState, target: str, gripper_at_handle: bool = True,
                    **changes) -> SimState:
    objects = tuple(obj._replace(**changes) if obj.name == target else obj
                    for obj in state.objects)
    gripper = state.gripper
    if gripper_at_handle:
        handle = np.clip([obj for obj in objects if obj.name == target][0].handle(), 0.0, 1.0)
        gripper = (float(handle[0]), float(handle[1]))
    return state._replace(gripper=gripper, objects=objects)


def _drawer_goal(initial: SimState, target: str) -> SimState:
    drawer = initial.find(target)
    return _replace_target(initial, target, extension=min(DRAWER_GOAL_EXTENSION, drawer.upper))


def _drawer_opened(initial: SimState, final: SimState, target: str) -> bool:
    return final.find(target).extension - initial.find(target).extension \
        > THRESHOLDS[ObjectKind.DRAWER]


def _block_goal(initial: SimState, target: str) -> SimState:
    block = initial.find(target)
    return _replace_target(initial, target, x=float(min(block.x + BLOCK_GOAL_SHIFT, 1.0)))


def _block_pushed(initial: SimState, final: SimState, target: str) -> bool:
    return final.find(target).x - initial.find(target).x > THRESHOLDS[ObjectKind.BLOCK]


def _block_goal_left(initial: SimState, target: str) -> SimState:
    block = initial.find(target)
    return _replace_target(initial, target, x=float(max(block.x - BLOCK_GOAL_SHIFT, 0.0)))


def _block_pushed_left(initial: SimState, final: SimState, target: str) -> bool:
    return initial.find(target).x - final.find(target).x > THRESHOLDS[ObjectKind.BLOCK]


def _door_goal(initial: SimState, target: str) -> SimState:
    door = initial.find(target)
    return _replace_target(initial, target, angle=float(min(door.angle + DOOR_GOAL_TURN,
                                                            door.upper)))


def _door_opened(initial: SimState, final: SimState, target: str) -> bool:
    return final.find(target).angle - initial.find(target).angle > THRESHOLDS[ObjectKind.DOOR]


TASKS = {
    "drawer_open": DownstreamTask("drawer_open", "drawer", "drawer", _drawer_goal,
                                  _drawer_opened),
    "block_push": DownstreamTask("block_push", "blocks", "target", _block_goal, _block_pushed),
    "block_push_left": DownstreamTask("block_push_left", "blocks", "target", _block_goal_left,
                                      _block_pushed_left),
    "door_open": DownstreamTask("door_open", "door", "door", _door_goal, _door_opened),
}


def get_task(name: str) -> DownstreamTask:
    try:
        return TASKS[name]
    except KeyError as error:
        raise ConfigError(f"Unknown task '{name}'. Choose from: "
                          f"{', '.join(sorted(TASKS))}") from error
