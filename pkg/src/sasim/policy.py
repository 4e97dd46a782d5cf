"""Scripted autonomous driving policy.

Stands in for a learned planner: a route-following rollout produces the
nominal plan, and a seeded ensemble of laterally perturbed copies provides the
candidate set the uncertainty module scores. Failure injections reshape the
output: candidate scatter widens the ensemble noise, a policy freeze collapses
the nominal plan to an in-place stop.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .abstraction import PlanLabel, Trajectory, classify_plan, summarize_plan
from .geometry import Polyline
from .scenario import InjectionKind, Scenario
from .uncertainty import CandidateSet
from .world import ACCEL_MAX, ControlCommand, VehicleState, integrate_vehicle, world_to_ego

PLAN_HORIZON_S = 2.0
PLAN_WAYPOINTS = 10
CANDIDATE_COUNT = 6
NOMINAL_SIGMA = 0.05
SCATTER_SIGMA = 1.0
ROLLOUT_LOOKAHEAD_M = 8.0
ROLLOUT_STEER_GAIN = 0.4
# perturbed candidates tolerate wide steps; the nominal keeps the strict bound
CANDIDATE_MAX_STEP_M = 25.0


@dataclass(frozen=True)
class PolicyOutput:
    candidates: CandidateSet  # ego-frame
    plan: PlanLabel
    nominal_ego: Trajectory
    nominal_world: tuple[tuple[float, float], ...]  # for the control tracker
    target_speed: float


def autonomous_policy(
    ego: VehicleState,
    scenario: Scenario,
    route: Polyline,
    tick: int,
    seed: int,
    dt: float,
) -> PolicyOutput:
    """Plan for one tick: nominal rollout, candidate ensemble, plan label."""
    frozen = scenario.injections_at(tick, InjectionKind.POLICY_FREEZE)
    scatter = scenario.injections_at(tick, InjectionKind.CANDIDATE_SCATTER)

    if frozen:
        nominal_world = tuple((ego.x, ego.y) for _ in range(PLAN_WAYPOINTS))
        target_speed = 0.0
    else:
        nominal_world = _rollout(ego, route, scenario.cruise_speed, dt)
        target_speed = scenario.cruise_speed

    nominal_ego = Trajectory(
        tuple(world_to_ego(ego, x, y) for x, y in nominal_world),
        max_step_m=CANDIDATE_MAX_STEP_M,
    )

    sigma = SCATTER_SIGMA if scatter else NOMINAL_SIGMA
    rng = np.random.default_rng([abs(seed), tick])
    noise = rng.normal(0.0, sigma, size=(CANDIDATE_COUNT - 1, PLAN_WAYPOINTS))
    candidates = [nominal_ego]
    for row in noise:
        pts = tuple(
            (x + float(dx), y) for (x, y), dx in zip(nominal_ego.waypoints, row)
        )
        candidates.append(Trajectory(pts, max_step_m=CANDIDATE_MAX_STEP_M))

    return PolicyOutput(
        candidates=CandidateSet(frame_index=tick, candidates=tuple(candidates)),
        plan=classify_plan(summarize_plan(nominal_ego)),
        nominal_ego=nominal_ego,
        nominal_world=nominal_world,
        target_speed=target_speed,
    )


def _rollout(
    ego: VehicleState, route: Polyline, cruise_speed: float, dt: float
) -> tuple[tuple[float, float], ...]:
    """Route-following rollout sampled at fixed intervals over the horizon."""
    substeps = max(1, round(PLAN_HORIZON_S / PLAN_WAYPOINTS / dt))
    state = ego
    points = []
    for _ in range(PLAN_WAYPOINTS):
        for _ in range(substeps):
            state = _pursuit_step(state, route, cruise_speed, dt)
        points.append((state.x, state.y))
    return tuple(points)


def _pursuit_step(
    state: VehicleState, route: Polyline, cruise_speed: float, dt: float
) -> VehicleState:
    proj = route.project(state.x, state.y)
    tx, ty = route.offset_point(proj.s + ROLLOUT_LOOKAHEAD_M, 0.0)
    lateral, _ = world_to_ego(state, tx, ty)
    steering = min(1.0, max(-1.0, ROLLOUT_STEER_GAIN * lateral))
    # idealized speed regulation toward cruise (not the throttle map)
    speed = state.speed + min(ACCEL_MAX * dt, max(-ACCEL_MAX * dt, cruise_speed - state.speed))
    advanced = integrate_vehicle(
        replace(state, speed=max(0.0, speed)),
        ControlCommand(steering=steering),
        dt,
    )
    return replace(advanced, speed=max(0.0, speed))


def infer_plan_from_controls(
    ego: VehicleState, throttle: float, brake: float, steering: float, dt: float = 0.05
) -> PlanLabel:
    """Ground raw human controls into a plan label via rollout + classification."""
    state = ego
    cmd = ControlCommand(steering=steering, throttle=throttle, brake=brake)
    points = []
    substeps = max(1, round(PLAN_HORIZON_S / PLAN_WAYPOINTS / dt))
    for _ in range(PLAN_WAYPOINTS):
        for _ in range(substeps):
            state = integrate_vehicle(state, cmd, dt)
        points.append(world_to_ego(ego, state.x, state.y))
    traj = Trajectory(tuple(points), max_step_m=CANDIDATE_MAX_STEP_M)
    return classify_plan(summarize_plan(traj))


def straight_route(length: float = 200.0) -> Polyline:  # pragma: no cover - test helper
    return Polyline([(0.0, 0.0), (length, 0.0)])
