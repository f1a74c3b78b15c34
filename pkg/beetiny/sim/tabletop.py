"""
Tabletop environment
^^^^^^^^^^^^^^^^^^^^

Deterministic 2D scene with a point gripper. Contacts are resolved at position level:

* a block overlapping the gripper is pushed out by the penetration depth, away from the gripper
* a gripper within :py:data:`~beetiny.sim.layouts.HANDLE_RADIUS` of a door handle turns the door
  by its motion along the panel's tangent, divided by the panel length
* a gripper within the same radius of a drawer handle moves the drawer by its motion along the
  drawer axis

Poses are clamped to the table, the hinge limits and the drawer range after every step. Objects do
not collide with each other.
"""
import typing

import numpy as np

from ..models import ACTION_DIM
from ..models.sim import LayoutSpec, ObjectKind, ObjectState, Observation, SimState
from ..utils.errors import ConfigError, UsageError
from .layouts import GRIPPER_RADIUS, HANDLE_RADIUS
from .render import render


def clip_action(action: typing.Any) -> np.ndarray:
    action = np.asarray(action, dtype=np.float64)
    if action.shape != (ACTION_DIM,):
        raise ConfigError(f"Actions must have shape ({ACTION_DIM},). Got: {action.shape}")
    return np.clip(action, -1.0, 1.0)


def _push_block(obj: ObjectState, gripper: np.ndarray, move: np.ndarray) -> ObjectState:
    offset = np.array([obj.x, obj.y]) - gripper
    distance = float(np.hypot(*offset))
    reach = GRIPPER_RADIUS + obj.size
    if distance >= reach:
        return obj
    if distance > 0.0:
        normal = offset / distance
    else:
        norm = float(np.hypot(*move))
        normal = move / norm if norm > 0.0 else np.array([1.0, 0.0])
    x, y = np.clip(np.array([obj.x, obj.y]) + (reach - distance) * normal, 0.0, 1.0)
    return obj._replace(x=float(x), y=float(y))


def _turn_door(obj: ObjectState, gripper: np.ndarray, move: np.ndarray) -> ObjectState:
    if np.hypot(*(gripper - obj.handle())) >= HANDLE_RADIUS:
        return obj
    tangent = np.array([-np.sin(obj.angle), np.cos(obj.angle)])
    angle = np.clip(obj.angle + float(move @ tangent) / obj.size, obj.lower, obj.upper)
    return obj._replace(angle=float(angle))


def _slide_drawer(obj: ObjectState, gripper: np.ndarray, move: np.ndarray) -> ObjectState:
    if np.hypot(*(gripper - obj.handle())) >= HANDLE_RADIUS:
        return obj
    extension = np.clip(obj.extension + float(move @ obj.axis), obj.lower, obj.upper)
    return obj._replace(extension=float(extension))


_CONTACT = {
    ObjectKind.BLOCK: _push_block,
    ObjectKind.DISTRACTOR_BLOCK: _push_block,
    ObjectKind.DOOR: _turn_door,
    ObjectKind.DRAWER: _slide_drawer,
}


def transition(state: SimState, action: typing.Any, max_step: float) -> SimState:
    """
    Pure state transition (no horizon bookkeeping)
    """
    start = np.array(state.gripper, dtype=np.float64)
    gripper = np.clip(start + clip_action(action) * max_step, 0.0, 1.0)
    move = gripper - start
    objects = tuple(_CONTACT[obj.kind](obj, gripper, move) for obj in state.objects)
    return SimState(gripper=(float(gripper[0]), float(gripper[1])), objects=objects,
                    time=state.time + 1)


class TabletopEnv:
    """
    Environment for one layout

    :param layout: Scene to simulate
    :raises ConfigError: if the layout is malformed
    """
    def __init__(self, layout: LayoutSpec):
        self.layout = layout.validate()
        self.state: typing.Optional[SimState] = None

    @property
    def horizon(self) -> int:
        return self.layout.horizon

    @property
    def image_size(self) -> int:
        return self.layout.image_size

    def observe(self, state: typing.Optional[SimState] = None) -> Observation:
        state = state if state is not None else self.state
        return Observation(frame=render(state, self.image_size), truth=state)

    def reset(self) -> Observation:
        """
        Restore the layout's initial state
        """
        self.state = self.layout.initial_state()
        return self.observe()

    def set_state(self, state: SimState) -> Observation:
        self.state = state
        return self.observe()

    def step(self, action: typing.Any) -> Observation:
        """
        Apply one action

        :param action: Gripper velocity ``(dx, dy)``; components are clipped to ``[-1, 1]`` and
                       scaled by the layout's ``max_step``
        :raises UsageError: if the episode is exhausted or the environment was never reset
        """
        if self.state is None:
            raise UsageError("Environment must be reset before stepping")
        if self.state.time >= self.horizon:
            raise UsageError(f"Episode horizon of {self.horizon} steps exhausted")
        self.state = transition(self.state, action, self.layout.max_step)
        return self.observe()
