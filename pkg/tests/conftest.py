from __future__ import annotations

import pytest

from sasim.abstraction import ControlState, PlanLabel, abstract_state
from sasim.arbitration import (
    ArbitrationRequest,
    LaneMarking,
    LaneMarkings,
    ObjectKind,
    SceneContext,
    SceneObject,
    SceneSnapshot,
    TeamingMode,
)
from sasim.uncertainty import UncertaintyScore


def make_snapshot(
    timestamp: float = 10.0,
    objects=(),
    ego_lane: int = 0,
    markings: LaneMarkings | None = None,
    visibility: float = 1.0,
) -> SceneSnapshot:
    return SceneSnapshot(
        timestamp=timestamp,
        objects=tuple(objects),
        ego_lane=ego_lane,
        lane_markings=markings or LaneMarkings(),
        visibility=visibility,
    )


def make_request(
    human_plan: PlanLabel = PlanLabel.STOP,
    autonomy_plan: PlanLabel = PlanLabel.DRIVE_FORWARD,
    objects=(),
    markings: LaneMarkings | None = None,
    visibility: float = 1.0,
    human_control: ControlState | None = None,
    ego_control: ControlState | None = None,
    u: float = 0.2,
    triggered: bool = False,
    mode: TeamingMode = TeamingMode.PROACTIVE_TEAMING,
) -> ArbitrationRequest:
    snaps = tuple(
        make_snapshot(timestamp=9.0 + 0.5 * i, objects=objects, markings=markings, visibility=visibility)
        for i in range(3)
    )
    human_control = human_control or ControlState(brake=0.9, speed_mps=8.0)
    ego_control = ego_control or ControlState(throttle=0.4, speed_mps=8.0)
    return ArbitrationRequest(
        context=SceneContext(snapshots=snaps),
        ego_descriptor=abstract_state(ego_control),
        human_descriptor=abstract_state(human_control),
        human_plan=human_plan,
        autonomy_plan=autonomy_plan,
        autonomy_uncertainty=UncertaintyScore(
            u_t=u, intra_raw=u, inter_raw=0.0, triggered=triggered
        ),
        mode=mode,
    )


@pytest.fixture
def blocked_lane_objects():
    return (
        SceneObject(kind=ObjectKind.VEHICLE, x=0.2, y=24.0, vx=0.0, vy=0.0, lane_offset=0),
    )


@pytest.fixture
def oncoming_objects():
    return (
        SceneObject(kind=ObjectKind.VEHICLE, x=-3.5, y=25.0, vx=0.0, vy=-8.0, lane_offset=-1),
    )


__all__ = ["make_request", "make_snapshot", "LaneMarking", "LaneMarkings", "ObjectKind"]
