"""
Interaction metrics
^^^^^^^^^^^^^^^^^^^

Ground-truth measurements of what an episode did to the objects. These are only ever computed
from :py:attr:`~beetiny.models.sim.Observation.truth` after the fact; agents never see them.
"""
import typing

import numpy as np

from ..models.sim import ObjectKind, SimState

#: Displacement above which an object counts as moved, per kind (table units or radians)
THRESHOLDS = {
    ObjectKind.BLOCK: 0.08,
    ObjectKind.DISTRACTOR_BLOCK: 0.08,
    ObjectKind.DOOR: 0.15,
    ObjectKind.DRAWER: 0.06,
}


class InteractionReport(typing.NamedTuple):
    displacement: typing.Dict[str, float]
    moved: typing.Dict[str, bool]
    target_ids: typing.Tuple[str, ...]

    @property
    def target_moved(self) -> bool:
        return any(self.moved[name] for name in self.target_ids)

    @property
    def target_displacement(self) -> float:
        return max(self.displacement[name] for name in self.target_ids)


def interaction_report(states: typing.Sequence[SimState], target_ids: typing.Sequence[str],
                       thresholds: typing.Optional[typing.Mapping[ObjectKind, float]] = None) \
        -> InteractionReport:
    """
    Maximum displacement of every object from its initial pose over an episode

    :param states: Ground truth states of the episode, starting with the reset state
    :param target_ids: Names of the target objects
    :param thresholds: Override of :py:data:`THRESHOLDS`
    """
    merged = dict(THRESHOLDS)
    merged.update(thresholds or {})
    initial = states[0]
    displacement = {}
    moved = {}
    for index, obj in enumerate(initial.objects):
        start = obj.pose()
        distance = max(float(np.linalg.norm(state.objects[index].pose() - start))
                       for state in states)
        displacement[obj.name] = distance
        moved[obj.name] = distance > merged[obj.kind]
    return InteractionReport(displacement=displacement, moved=moved,
                             target_ids=tuple(target_ids))
