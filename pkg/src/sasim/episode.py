"""Episode engine: the deterministic fixed-timestep simulation loop.

One `Simulation` owns the ego vehicle, scripted actors, the autonomous policy
output, uncertainty scoring, scene-context history, and primitive execution.
`run_episode` drives it headlessly in either teaming mode; the gateway drives
the same object in live mode. The per-tick JSONL event log contains no
wall-clock values, so two runs with identical inputs produce identical bytes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

from .abstraction import (
    Attention,
    ControlState,
    PlanLabel,
    StateDescriptor,
    abstract_state,
)
from .arbitration import (
    Arbiter,
    ArbitrationDecision,
    ArbitrationRequest,
    Choice,
    SceneContext,
    SceneObject,
    SceneSnapshot,
    TeamingMode,
    arbitrate,
)
from .config import GlobalConfig
from .errors import MalformedResponse, VlmUnavailable
from .mock_human import control_for_plan
from .planning import (
    OccupancyGrid,
    PrimitiveSpec,
    TrajectoryTracker,
    astar_plan,
    primitive_goal,
    smooth_to_trajectory,
)
from .policy import PolicyOutput, autonomous_policy, infer_plan_from_controls
from .scenario import ActorSpec, HumanScriptEntry, InjectionKind, Scenario
from .uncertainty import UncertaintyScore, mean_trajectory, score as uncertainty_score
from .world import (
    ControlCommand,
    Obb,
    ego_to_world,
    integrate_vehicle,
    obb_penetration,
    world_to_ego,
)

SNAPSHOT_RANGE_FORWARD_M = 60.0
SNAPSHOT_RANGE_BEHIND_M = 20.0
SNAPSHOT_RANGE_LATERAL_M = 30.0
BLACKOUT_VISIBILITY = 0.1
GRID_RESOLUTION_M = 0.5
OBSTACLE_MARGIN_M = 0.3
GOAL_REACHED_M = 1.5
LIVE_INPUT_FRESH_TICKS = 10


@dataclass(frozen=True)
class HumanProposal:
    plan: PlanLabel
    control: ControlState
    attention: Attention


class HumanSource(Protocol):
    """Supplies human plans: scripted, synthetic, or live."""

    def at_tick(self, scenario: Scenario, tick: int, ego_speed: float) -> HumanProposal | None:
        """Proactive mode: proposal scheduled exactly at this tick."""
        ...

    def for_trigger(self, scenario: Scenario, tick: int, ego_speed: float) -> HumanProposal | None:
        """Supervisory mode: proposal fetched when uncertainty fires."""
        ...


class ScriptHumanSource:
    """Replays the scenario's scripted human entries."""

    def at_tick(self, scenario: Scenario, tick: int, ego_speed: float) -> HumanProposal | None:
        for entry in scenario.human_script:
            if entry.tick == tick:
                return _proposal_from_entry(entry, ego_speed)
        return None

    def for_trigger(self, scenario: Scenario, tick: int, ego_speed: float) -> HumanProposal | None:
        if not scenario.human_script:
            return None
        chosen: HumanScriptEntry | None = None
        for entry in scenario.human_script:
            if entry.tick <= tick:
                chosen = entry
        if chosen is None:
            chosen = scenario.human_script[0]
        return _proposal_from_entry(chosen, ego_speed)


def _proposal_from_entry(entry: HumanScriptEntry, ego_speed: float) -> HumanProposal:
    control = control_for_plan(entry.plan, ego_speed, attention=entry.attention)
    return HumanProposal(plan=entry.plan, control=control, attention=entry.attention)


@dataclass
class ActivePrimitive:
    spec: PrimitiveSpec
    ref_world: list[tuple[float, float]]
    start_tick: int
    end_tick: int
    used_search: bool


@dataclass
class EpisodeResult:
    collided: bool
    route_completion: float
    ticks: int
    interventions: int
    decisions: list[ArbitrationDecision]
    event_log_path: str | None
    collision_actor: str | None = None
    scenario_name: str = ""
    mode: str = ""
    arbiter_name: str = ""
    seed: int = 0


def _round_floats(value):
    if isinstance(value, float):
        return round(value, 6)
    if isinstance(value, dict):
        return {k: _round_floats(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round_floats(v) for v in value]
    return value


def encode_event(record: dict) -> str:
    return json.dumps(_round_floats(record), sort_keys=True, separators=(",", ":"))


class Simulation:
    """Mutable world state advanced one fixed tick at a time."""

    def __init__(
        self,
        scenario: Scenario,
        cfg: GlobalConfig | None = None,
        seed: int | None = None,
        live: bool = False,
    ):
        self.scenario = scenario
        self.cfg = cfg or GlobalConfig()
        self.dt = self.cfg.simulator.dt
        self.seed = scenario.seed if seed is None else seed
        self.live = live
        self.route = scenario.route()
        self.ego = scenario.ego_start
        self.tick = 0
        self.gates_passed = 0
        self.prev_mean = None
        self.prev_triggered = False
        self.snapshots: list[SceneSnapshot] = []
        self.active_primitive: ActivePrimitive | None = None
        self.autonomy_tracker = TrajectoryTracker(
            self.cfg.lateral_gains, self.cfg.longitudinal_gains, self.cfg.lookahead_m
        )
        self.primitive_tracker = TrajectoryTracker(
            self.cfg.lateral_gains, self.cfg.longitudinal_gains, self.cfg.lookahead_m
        )
        self.collided = False
        self.collision_actor: str | None = None
        self.last_policy: PolicyOutput | None = None
        self.last_score: UncertaintyScore | None = None
        self.last_cmd = ControlCommand()
        self.control_source = "autonomy"
        self.interventions = 0
        self.decisions: list[ArbitrationDecision] = []
        self.records: list[dict] = []
        self.listeners: list[Callable[[dict], None]] = []
        self._correlation = 0
        # live-mode input queues (applied at tick boundaries)
        self._queued_controls: ControlState | None = None
        self._live_controls: tuple[int, ControlState] | None = None
        self._queued_intervention: dict | None = None
        self._context_spacing = max(1, round(0.5 / self.dt))

    # ------------------------------------------------------------------
    # event plumbing
    # ------------------------------------------------------------------

    def emit(self, record: dict) -> None:
        self.records.append(record)
        for listener in self.listeners:
            listener(record)

    # ------------------------------------------------------------------
    # world queries
    # ------------------------------------------------------------------

    @property
    def sim_time(self) -> float:
        return self.tick * self.dt

    @property
    def route_completion(self) -> float:
        return self.gates_passed / len(self.scenario.gates)

    def actor_poses(self) -> list[tuple[ActorSpec, tuple[float, float, float]]]:
        t = self.sim_time
        return [
            (spec, spec.pose_at(t))
            for spec in self.scenario.actors
            if spec.present(t)
        ]

    def make_snapshot(self) -> SceneSnapshot:
        blackout = self.scenario.injections_at(self.tick, InjectionKind.PERCEPTION_BLACKOUT)
        ego_lane = self.scenario.nearest_lane(self.ego.x, self.ego.y)
        if blackout:
            return SceneSnapshot(
                timestamp=self.sim_time,
                objects=(),
                ego_lane=ego_lane.lane_id,
                lane_markings=ego_lane.markings,
                visibility=BLACKOUT_VISIBILITY,
            )
        objects = []
        cos_h = math.cos(self.ego.heading)
        sin_h = math.sin(self.ego.heading)
        t = self.sim_time
        ego_lane_poly = ego_lane.polyline()
        for spec, (ax, ay, _) in self.actor_poses():
            ex, ey = world_to_ego(self.ego, ax, ay)
            if not (-SNAPSHOT_RANGE_BEHIND_M <= ey <= SNAPSHOT_RANGE_FORWARD_M):
                continue
            if abs(ex) > SNAPSHOT_RANGE_LATERAL_M:
                continue
            vx, vy = spec.velocity_at(t)
            # absolute velocity rotated into the ego orientation
            evx = vx * sin_h - vy * cos_h
            evy = vx * cos_h + vy * sin_h
            # lanes counted from the ego lane's centerline, positive rightward
            lateral = ego_lane_poly.project(ax, ay).lateral
            objects.append(
                SceneObject(
                    kind=spec.kind,
                    x=ex,
                    y=ey,
                    vx=evx,
                    vy=evy,
                    lane_offset=round(lateral / ego_lane.width),
                )
            )
        objects.sort(key=lambda o: (o.y, o.x))
        return SceneSnapshot(
            timestamp=self.sim_time,
            objects=tuple(objects),
            ego_lane=ego_lane.lane_id,
            lane_markings=ego_lane.markings,
            visibility=1.0,
        )

    def context(self) -> SceneContext:
        k = self._context_spacing
        idx = len(self.snapshots) - 1
        snaps = (self.snapshots[idx - 2 * k], self.snapshots[idx - k], self.snapshots[idx])
        return SceneContext(snapshots=snaps)

    def context_ready(self) -> bool:
        return len(self.snapshots) > 2 * self._context_spacing and self.tick >= self.cfg.simulator.warmup_ticks

    # ------------------------------------------------------------------
    # live-mode inputs (queued; applied at the next tick boundary)
    # ------------------------------------------------------------------

    def queue_human_controls(self, control: ControlState) -> None:
        self._queued_controls = control

    @property
    def applied_live_controls(self) -> ControlState | None:
        return self._live_controls[1] if self._live_controls is not None else None

    def queue_intervention(self, plan: PlanLabel | None, control: ControlState | None) -> None:
        self._queued_intervention = {"plan": plan, "control": control}

    # ------------------------------------------------------------------
    # arbitration
    # ------------------------------------------------------------------

    def build_request(self, proposal: HumanProposal, mode: TeamingMode) -> ArbitrationRequest:
        assert self.last_policy is not None and self.last_score is not None
        ego_control = ControlState(
            throttle=self.last_cmd.throttle,
            brake=self.last_cmd.brake,
            steering=self.last_cmd.steering,
            speed_mps=self.ego.speed,
        )
        human_control = proposal.control
        return ArbitrationRequest(
            context=self.context(),
            ego_descriptor=abstract_state(ego_control, self.cfg.abstraction),
            human_descriptor=abstract_state(human_control, self.cfg.abstraction),
            human_plan=proposal.plan,
            autonomy_plan=self.last_policy.plan,
            autonomy_uncertainty=self.last_score,
            mode=mode,
        )

    def decide_and_ground(
        self, proposal: HumanProposal, mode: TeamingMode, arbiter: Arbiter
    ) -> ArbitrationDecision:
        request = self.build_request(proposal, mode)
        self.interventions += 1
        self._correlation += 1
        correlation_id = self._correlation
        self.emit(
            {
                "type": "request",
                "frame": self.tick,
                "correlation_id": correlation_id,
                "mode": mode.value,
                "human_plan": request.human_plan.slug,
                "autonomy_plan": request.autonomy_plan.slug,
            }
        )
        if hasattr(arbiter, "current_frame"):
            arbiter.current_frame = self.tick
        fallback = False
        try:
            decision = arbitrate(request, arbiter)
        except (VlmUnavailable, MalformedResponse):
            decision = self._fallback_decision(request)
            fallback = True
        self.decisions.append(decision)
        self.ground_plan(decision.grounded_plan)
        self.emit(
            {
                "type": "decision",
                "frame": self.tick,
                "correlation_id": correlation_id,
                "mode": mode.value,
                "choice": decision.choice.value,
                "grounded_plan": decision.grounded_plan.slug,
                "rationale": decision.rationale,
                "intent": decision.intent,
                "fallback": fallback,
                "human_plan": request.human_plan.slug,
                "autonomy_plan": request.autonomy_plan.slug,
                "u": request.autonomy_uncertainty.u_t,
            }
        )
        return decision

    @staticmethod
    def _fallback_decision(request: ArbitrationRequest) -> ArbitrationDecision:
        plan = PlanLabel.STOP
        if plan is request.human_plan:
            choice = Choice.HUMAN
        elif plan is request.autonomy_plan:
            choice = Choice.AUTONOMY
        else:
            choice = Choice.ALTERNATIVE
        return ArbitrationDecision(
            choice=choice,
            grounded_plan=plan,
            rationale="arbitration unavailable; executing safe stop",
            intent="safe stop fallback",
        )

    # ------------------------------------------------------------------
    # primitive grounding and execution
    # ------------------------------------------------------------------

    def ground_plan(self, plan: PlanLabel) -> None:
        spec = primitive_goal(plan, self.ego, self.cfg.primitives)
        ref_world, used_search = self._plan_primitive_path(spec)
        self.active_primitive = ActivePrimitive(
            spec=spec,
            ref_world=ref_world,
            start_tick=self.tick,
            end_tick=self.tick + max(1, round(spec.duration_s / self.dt)),
            used_search=used_search,
        )
        self.primitive_tracker.reset()

    def _plan_primitive_path(self, spec: PrimitiveSpec) -> tuple[list[tuple[float, float]], bool]:
        """A* within the primitive's corridor, in the decision-time ego frame."""
        gx, gy = spec.goal_offset
        lane_w = self.cfg.primitives.lane_width
        x_min = min(0.0, gx) - lane_w / 2 - OBSTACLE_MARGIN_M
        x_max = max(0.0, gx) + lane_w / 2 + OBSTACLE_MARGIN_M
        y_min, y_max = -3.0, gy + 5.0
        res = GRID_RESOLUTION_M
        grid = OccupancyGrid(
            resolution=res,
            width=max(1, int(math.ceil((x_max - x_min) / res))),
            height=max(1, int(math.ceil((y_max - y_min) / res))),
            origin=(x_min, y_min),
        )
        inflate = self.ego.half_width + OBSTACLE_MARGIN_M
        for actor, (ax, ay, ah) in self.actor_poses():
            self._rasterize_actor(grid, actor, ax, ay, ah, inflate)

        start = grid.cell_of(0.0, 0.0)
        goal = grid.cell_of(gx, gy)
        goal = (
            min(max(goal[0], 0), grid.width - 1),
            min(max(goal[1], 0), grid.height - 1),
        )
        path = None
        if grid.in_bounds(start) and not grid.is_occupied(start):
            path = astar_plan(grid, start, goal)
        if path is None:
            return self._straight_reference(gx, gy), False
        if len(path) == 1:
            return self._straight_reference(gx, gy), True
        meters = max(1.0, (len(path) - 1) * res)
        samples = max(2, int(math.ceil(meters)) + 1)
        traj = smooth_to_trajectory(path, grid, samples)
        ref = [ego_to_world(self.ego, x, y) for x, y in traj.waypoints]
        return ref, True

    def _rasterize_actor(
        self,
        grid: OccupancyGrid,
        actor: ActorSpec,
        ax: float,
        ay: float,
        ah: float,
        inflate: float,
    ) -> None:
        hl = actor.half_length + inflate
        hw = actor.half_width + inflate
        corners = []
        cos_a, sin_a = math.cos(ah), math.sin(ah)
        for sl, sw in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            wx = ax + sl * hl * cos_a - sw * hw * sin_a
            wy = ay + sl * hl * sin_a + sw * hw * cos_a
            corners.append(world_to_ego(self.ego, wx, wy))
        lo_x = min(c[0] for c in corners)
        hi_x = max(c[0] for c in corners)
        lo_y = min(c[1] for c in corners)
        hi_y = max(c[1] for c in corners)
        c_lo = grid.cell_of(lo_x, lo_y)
        c_hi = grid.cell_of(hi_x, hi_y)
        for iy in range(max(0, c_lo[1]), min(grid.height, c_hi[1] + 2)):
            for ix in range(max(0, c_lo[0]), min(grid.width, c_hi[0] + 2)):
                ex, ey = grid.cell_center((ix, iy))
                wx, wy = ego_to_world(self.ego, ex, ey)
                lx = (wx - ax) * cos_a + (wy - ay) * sin_a
                ly = -(wx - ax) * sin_a + (wy - ay) * cos_a
                if abs(lx) <= hl and abs(ly) <= hw:
                    grid.occupied[iy, ix] = True

    def _straight_reference(self, gx: float, gy: float) -> list[tuple[float, float]]:
        dist = math.hypot(gx, gy)
        n = max(2, int(math.ceil(dist)) + 1)
        return [
            ego_to_world(self.ego, gx * k / (n - 1), gy * k / (n - 1)) for k in range(n)
        ]

    def _primitive_finished(self, prim: ActivePrimitive) -> bool:
        if self.tick >= prim.end_tick:
            return True
        if prim.spec.label is PlanLabel.STOP:
            return False  # stop holds for its full duration
        last = prim.ref_world[-1]
        return math.hypot(last[0] - self.ego.x, last[1] - self.ego.y) <= GOAL_REACHED_M

    # ------------------------------------------------------------------
    # one tick
    # ------------------------------------------------------------------

    def tick_once(
        self,
        mode: TeamingMode,
        arbiter: Arbiter | None,
        human_source: HumanSource | None,
        forced_plan: tuple[int, PlanLabel] | None = None,
    ) -> None:
        """Advance the world by one tick under the given teaming mode.

        `arbiter=None` disables arbitration entirely (pure autonomy).
        `forced_plan=(tick, plan)` grounds a plan directly at that tick,
        bypassing arbitration (used by the correctness oracle).
        """
        # 1. perception, policy, uncertainty
        self.last_policy = autonomous_policy(
            self.ego, self.scenario, self.route, self.tick, self.seed, self.dt
        )
        self.last_score = uncertainty_score(
            self.last_policy.candidates, self.prev_mean, self.cfg.uncertainty
        )
        self.prev_mean = mean_trajectory(self.last_policy.candidates)
        self.snapshots.append(self.make_snapshot())
        if len(self.snapshots) > 4 * self._context_spacing:
            del self.snapshots[0]

        # 2. apply queued live inputs at the boundary
        if self._queued_controls is not None:
            self._live_controls = (self.tick, self._queued_controls)
            self.emit(
                {
                    "type": "live_input",
                    "frame": self.tick,
                    "kind": "controls",
                    "throttle": self._queued_controls.throttle,
                    "brake": self._queued_controls.brake,
                    "steering": self._queued_controls.steering,
                    "speed_mps": self._queued_controls.speed_mps,
                }
            )
            self._queued_controls = None

        # 3. primitive completion / handover
        if self.active_primitive is not None and self._primitive_finished(self.active_primitive):
            self.emit(
                {
                    "type": "handover",
                    "frame": self.tick,
                    "from": f"primitive:{self.active_primitive.spec.label.slug}",
                    "to": "autonomy",
                }
            )
            self.active_primitive = None
            self.autonomy_tracker.reset()

        # 4. arbitration / forced grounding
        if forced_plan is not None and self.tick == forced_plan[0]:
            self.ground_plan(forced_plan[1])
        elif arbiter is not None and self.active_primitive is None and self.context_ready():
            self._maybe_arbitrate(mode, arbiter, human_source)

        # 5. pick the control source
        cmd, source = self._control_for_tick()
        self.last_cmd = cmd
        self.control_source = source

        # 6. log the tick, then advance the world
        triggered = self.last_score.triggered
        self.emit(
            {
                "type": "tick",
                "frame": self.tick,
                "sim_t": self.sim_time,
                "ego": {
                    "x": self.ego.x,
                    "y": self.ego.y,
                    "heading": self.ego.heading,
                    "speed": self.ego.speed,
                },
                "source": source,
                "autonomy_plan": self.last_policy.plan.slug,
                "intra_raw": self.last_score.intra_raw,
                "inter_raw": self.last_score.inter_raw,
                "u": self.last_score.u_t,
                "triggered": triggered,
                "route_completion": self.route_completion,
            }
        )
        self.prev_triggered = triggered
        self.ego = integrate_vehicle(self.ego, cmd, self.dt)
        self.tick += 1
        self._update_gates()
        self._check_collision()

    def _maybe_arbitrate(
        self, mode: TeamingMode, arbiter: Arbiter, human_source: HumanSource | None
    ) -> None:
        proposal: HumanProposal | None = None
        if mode is TeamingMode.PROACTIVE_TEAMING:
            if self._queued_intervention is not None:
                proposal = self._consume_intervention()
            elif human_source is not None:
                proposal = human_source.at_tick(self.scenario, self.tick, self.ego.speed)
        else:  # supervisory: rising edge of the trigger only
            if self.last_score.triggered and not self.prev_triggered:
                if self._queued_intervention is not None:
                    proposal = self._consume_intervention()
                elif self.live and self._live_controls is not None:
                    proposal = self._proposal_from_live_controls()
                elif human_source is not None:
                    proposal = human_source.for_trigger(self.scenario, self.tick, self.ego.speed)
        if proposal is not None:
            self.decide_and_ground(proposal, mode, arbiter)

    def _consume_intervention(self) -> HumanProposal:
        intervention = self._queued_intervention
        self._queued_intervention = None
        plan = intervention.get("plan")
        control = intervention.get("control")
        self.emit(
            {
                "type": "live_input",
                "frame": self.tick,
                "kind": "intervention",
                "plan": plan.slug if plan is not None else None,
                "throttle": control.throttle if control else None,
                "brake": control.brake if control else None,
                "steering": control.steering if control else None,
                "speed_mps": control.speed_mps if control else None,
            }
        )
        return self._proposal_from_intervention(intervention)

    def _proposal_from_intervention(self, intervention: dict) -> HumanProposal:
        plan = intervention.get("plan")
        control = intervention.get("control")
        if plan is None and control is not None:
            plan = infer_plan_from_controls(
                self.ego, control.throttle, control.brake, control.steering, self.dt
            )
        if plan is None:
            plan = PlanLabel.STOP
        if control is None:
            control = control_for_plan(plan, self.ego.speed)
        return HumanProposal(
            plan=plan, control=control, attention=control.human_attention or Attention.ATTENTIVE
        )

    def _proposal_from_live_controls(self) -> HumanProposal:
        _, control = self._live_controls
        plan = infer_plan_from_controls(
            self.ego, control.throttle, control.brake, control.steering, self.dt
        )
        return HumanProposal(
            plan=plan, control=control, attention=control.human_attention or Attention.ATTENTIVE
        )

    def _control_for_tick(self) -> tuple[ControlCommand, str]:
        if self.live and self._live_controls is not None and self.active_primitive is None:
            applied_tick, control = self._live_controls
            if self.tick - applied_tick <= LIVE_INPUT_FRESH_TICKS:
                cmd = ControlCommand(
                    steering=control.steering, throttle=control.throttle, brake=control.brake
                )
                return cmd, "human_live"
        if self.active_primitive is not None:
            prim = self.active_primitive
            cmd = self.primitive_tracker.control(
                prim.ref_world, prim.spec.target_speed, self.ego, self.dt
            )
            return cmd, f"primitive:{prim.spec.label.slug}"
        assert self.last_policy is not None
        cmd = self.autonomy_tracker.control(
            list(self.last_policy.nominal_world), self.last_policy.target_speed, self.ego, self.dt
        )
        return cmd, "autonomy"

    def _update_gates(self) -> None:
        gates = self.scenario.gates
        while self.gates_passed < len(gates):
            gate = gates[self.gates_passed]
            if math.hypot(gate.x - self.ego.x, gate.y - self.ego.y) <= gate.radius:
                self.gates_passed += 1
            else:
                break

    def _check_collision(self) -> None:
        ego_box = Obb.of_vehicle(self.ego)
        for spec, (ax, ay, ah) in self.actor_poses():
            pen = obb_penetration(
                ego_box,
                Obb(cx=ax, cy=ay, heading=ah, half_length=spec.half_length, half_width=spec.half_width),
            )
            if pen is not None:
                self.collided = True
                self.collision_actor = spec.actor_id
                self.emit(
                    {
                        "type": "collision",
                        "frame": self.tick,
                        "actor": spec.actor_id,
                        "penetration": pen,
                    }
                )
                return

    def finished(self) -> bool:
        return (
            self.collided
            or self.gates_passed == len(self.scenario.gates)
            or self.tick >= self.scenario.tick_budget
        )


def detect_collision(sim: Simulation) -> tuple[str, float] | None:
    """First overlapping actor against the ego, with penetration depth."""
    ego_box = Obb.of_vehicle(sim.ego)
    for spec, (ax, ay, ah) in sim.actor_poses():
        pen = obb_penetration(
            ego_box,
            Obb(cx=ax, cy=ay, heading=ah, half_length=spec.half_length, half_width=spec.half_width),
        )
        if pen is not None:
            return (spec.actor_id, pen)
    return None


def run_episode(
    scenario: Scenario,
    mode: TeamingMode,
    arbiter: Arbiter | None,
    cfg: GlobalConfig | None = None,
    seed: int | None = None,
    log_path: str | Path | None = None,
    human_source: HumanSource | None = None,
) -> EpisodeResult:
    """Run one full scripted episode headlessly.

    `arbiter=None` runs pure autonomy (no arbitration, no interventions).
    The whole run is reproducible from (scenario, seed, arbiter, mode, cfg).
    """
    cfg = cfg or GlobalConfig()
    sim = Simulation(scenario, cfg, seed=seed)
    if human_source is None and arbiter is not None:
        human_source = ScriptHumanSource()
    sim.emit(
        {
            "type": "header",
            "schema_version": 1,
            "scenario": scenario.name,
            "seed": sim.seed,
            "mode": mode.value,
            "arbiter": getattr(arbiter, "name", "none"),
            "dt": sim.dt,
        }
    )
    while not sim.finished():
        sim.tick_once(mode, arbiter, human_source)
    sim.emit(
        {
            "type": "end",
            "frame": sim.tick,
            "collided": sim.collided,
            "route_completion": sim.route_completion,
            "ticks": sim.tick,
            "interventions": sim.interventions,
        }
    )
    path_str: str | None = None
    if log_path is not None:
        path = Path(log_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as fh:
            for record in sim.records:
                fh.write(encode_event(record) + "\n")
        path_str = str(path)
    return EpisodeResult(
        collided=sim.collided,
        route_completion=sim.route_completion,
        ticks=sim.tick,
        interventions=sim.interventions,
        decisions=sim.decisions,
        event_log_path=path_str,
        collision_actor=sim.collision_actor,
        scenario_name=scenario.name,
        mode=mode.value,
        arbiter_name=getattr(arbiter, "name", "none"),
        seed=sim.seed,
    )


def rollout_with_plan(
    scenario: Scenario,
    plan: PlanLabel,
    cfg: GlobalConfig | None = None,
    horizon_s: float = 15.0,
) -> tuple[bool, float]:
    """Deterministic forced-plan rollout used by the correctness oracle.

    Autonomy drives until the scenario's arbitration tick, the plan's
    primitive executes, control returns to autonomy, and the episode runs on
    until the horizon (measured from the intervention), completion, collision,
    or the tick budget. Returns (collided, route_completion).
    """
    cfg = cfg or GlobalConfig()
    sim = Simulation(scenario, cfg, seed=scenario.seed)
    start_tick = max(scenario.arbitration_tick, cfg.simulator.warmup_ticks)
    last_tick = min(scenario.tick_budget, start_tick + round(horizon_s / sim.dt))
    while not sim.finished() and sim.tick <= last_tick:
        sim.tick_once(
            TeamingMode.PROACTIVE_TEAMING, None, None, forced_plan=(start_tick, plan)
        )
    return sim.collided, sim.route_completion


def request_template(
    scenario: Scenario,
    cfg: GlobalConfig | None = None,
    mode: TeamingMode = TeamingMode.PROACTIVE_TEAMING,
) -> tuple[Simulation, "RequestContext"]:
    """Run pure autonomy up to the arbitration tick and capture request inputs.

    Benches reuse the returned context for many trials that differ only in
    the human fields.
    """
    cfg = cfg or GlobalConfig()
    sim = Simulation(scenario, cfg, seed=scenario.seed)
    stop_tick = max(scenario.arbitration_tick, cfg.simulator.warmup_ticks)
    while sim.tick < stop_tick and not sim.finished():
        sim.tick_once(mode, None, None)
    # one more policy/snapshot pass so the captured tick has fresh state
    sim.last_policy = autonomous_policy(
        sim.ego, scenario, sim.route, sim.tick, sim.seed, sim.dt
    )
    sim.last_score = uncertainty_score(sim.last_policy.candidates, sim.prev_mean, cfg.uncertainty)
    sim.snapshots.append(sim.make_snapshot())
    ego_control = ControlState(
        throttle=sim.last_cmd.throttle,
        brake=sim.last_cmd.brake,
        steering=sim.last_cmd.steering,
        speed_mps=sim.ego.speed,
    )
    ctx = RequestContext(
        context=sim.context(),
        ego_descriptor=abstract_state(ego_control, cfg.abstraction),
        autonomy_plan=sim.last_policy.plan,
        uncertainty=sim.last_score,
        ego_speed=sim.ego.speed,
        mode=mode,
    )
    return sim, ctx


@dataclass(frozen=True)
class RequestContext:
    """Frozen request inputs captured at a scenario's arbitration tick."""

    context: SceneContext
    ego_descriptor: StateDescriptor
    autonomy_plan: PlanLabel
    uncertainty: UncertaintyScore
    ego_speed: float
    mode: TeamingMode

    def with_human(self, proposal: HumanProposal) -> ArbitrationRequest:
        return ArbitrationRequest(
            context=self.context,
            ego_descriptor=self.ego_descriptor,
            human_descriptor=abstract_state(proposal.control),
            human_plan=proposal.plan,
            autonomy_plan=self.autonomy_plan,
            autonomy_uncertainty=self.uncertainty,
            mode=self.mode,
        )
