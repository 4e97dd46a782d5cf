"""Scenario files: declarative world descriptions for the simulator.

A scenario is a versioned YAML document holding the road layout, the ordered
route gates, scripted actors, the ego start state, the scripted human plans,
annotated correct/incorrect plans, and failure injections. Unknown keys are
rejected so hand-edited files fail loudly.

Schema (version 1), all distances in meters, times in seconds:

    schema_version: 1
    name: blocked_lane
    description: free text
    seed: 0
    tick_budget: 1200            # optional, simulation ticks
    cruise_speed: 8.0            # autonomy target speed
    road:
      lanes:                     # ids increase to the right
        - {id: 0, center: [[x, y], ...], width: 3.5,
           markings: {left: double_yellow, right: solid_white}}
    route:
      path: [[x, y], ...]        # centerline the autonomy follows
      gates: [{x: 60, y: 0, radius: 4.0}, ...]
    ego_start: {x: 0, y: 0, heading: 0.0, speed: 8.0}
    actors:
      - {id: parked, kind: vehicle, static: {x: 80, y: 0, heading: 0.0},
         half_length: 2.25, half_width: 0.9}
      - {id: oncoming, kind: vehicle,
         keyframes: [[t, x, y], ...], active: [t0, t1]}
    human_script:
      - {tick: 140, plan: lane_change_left, attention: attentive}
    failure_injections:
      - {kind: candidate_scatter, from_tick: 100, to_tick: 220}
    annotations:
      correct: [lane_change_left]
      incorrect: [drive_forward]
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import yaml

from .abstraction import Attention, PlanLabel
from .arbitration import LaneMarking, LaneMarkings, ObjectKind
from .errors import MissingAnnotations, ScenarioLoadError
from .geometry import Polyline
from .world import VehicleState

SCHEMA_VERSION = 1
DEFAULT_TICK_BUDGET = 1200  # 60 s at the 20 Hz default tick


class InjectionKind(enum.Enum):
    CANDIDATE_SCATTER = "candidate_scatter"
    POLICY_FREEZE = "policy_freeze"
    PERCEPTION_BLACKOUT = "perception_blackout"


@dataclass(frozen=True)
class Injection:
    kind: InjectionKind
    from_tick: int
    to_tick: int

    def active(self, tick: int) -> bool:
        return self.from_tick <= tick <= self.to_tick


@dataclass(frozen=True)
class Lane:
    lane_id: int
    center: tuple[tuple[float, float], ...]
    width: float
    markings: LaneMarkings

    def polyline(self) -> Polyline:
        return Polyline(self.center)


@dataclass(frozen=True)
class Gate:
    x: float
    y: float
    radius: float


@dataclass(frozen=True)
class ActorSpec:
    """A scripted agent: a static pose or piecewise-linear keyframe motion."""

    actor_id: str
    kind: ObjectKind
    half_length: float = 2.25
    half_width: float = 0.9
    static: tuple[float, float, float] | None = None  # (x, y, heading)
    keyframes: tuple[tuple[float, float, float], ...] = ()  # (t, x, y)
    heading_override: float | None = None
    active: tuple[float, float] | None = None  # (t0, t1) presence window

    def present(self, t: float) -> bool:
        if self.active is None:
            return True
        return self.active[0] <= t <= self.active[1]

    def pose_at(self, t: float) -> tuple[float, float, float]:
        """(x, y, heading) at time t; keyframes clamp at both ends."""
        if self.static is not None:
            return self.static
        frames = self.keyframes
        if t <= frames[0][0]:
            x, y = frames[0][1], frames[0][2]
            heading = self._segment_heading(0)
        elif t >= frames[-1][0]:
            x, y = frames[-1][1], frames[-1][2]
            heading = self._segment_heading(len(frames) - 2)
        else:
            i = 0
            while frames[i + 1][0] < t:
                i += 1
            t0, x0, y0 = frames[i]
            t1, x1, y1 = frames[i + 1]
            f = (t - t0) / (t1 - t0)
            x, y = x0 + f * (x1 - x0), y0 + f * (y1 - y0)
            heading = self._segment_heading(i)
        return (x, y, heading)

    def velocity_at(self, t: float) -> tuple[float, float]:
        if self.static is not None or len(self.keyframes) < 2:
            return (0.0, 0.0)
        frames = self.keyframes
        if t <= frames[0][0] or t >= frames[-1][0]:
            return (0.0, 0.0)
        i = 0
        while frames[i + 1][0] < t:
            i += 1
        t0, x0, y0 = frames[i]
        t1, x1, y1 = frames[i + 1]
        dt = t1 - t0
        return ((x1 - x0) / dt, (y1 - y0) / dt)

    def _segment_heading(self, i: int) -> float:
        if self.heading_override is not None:
            return self.heading_override
        frames = self.keyframes
        if len(frames) < 2:
            return 0.0
        i = min(max(i, 0), len(frames) - 2)
        return math.atan2(frames[i + 1][2] - frames[i][2], frames[i + 1][1] - frames[i][1])


@dataclass(frozen=True)
class HumanScriptEntry:
    tick: int
    plan: PlanLabel
    attention: Attention = Attention.ATTENTIVE


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    seed: int
    cruise_speed: float
    lanes: tuple[Lane, ...]
    route_path: tuple[tuple[float, float], ...]
    gates: tuple[Gate, ...]
    ego_start: VehicleState
    actors: tuple[ActorSpec, ...] = ()
    human_script: tuple[HumanScriptEntry, ...] = ()
    failure_injections: tuple[Injection, ...] = ()
    correct_plans: tuple[PlanLabel, ...] = ()
    incorrect_plans: tuple[PlanLabel, ...] = ()
    tick_budget: int = DEFAULT_TICK_BUDGET
    schema_version: int = SCHEMA_VERSION

    def route(self) -> Polyline:
        return Polyline(self.route_path)

    def lane_by_id(self, lane_id: int) -> Lane:
        for lane in self.lanes:
            if lane.lane_id == lane_id:
                return lane
        raise KeyError(f"no lane {lane_id} in scenario {self.name}")

    def nearest_lane(self, x: float, y: float) -> Lane:
        return min(self.lanes, key=lambda ln: abs(ln.polyline().project(x, y).lateral))

    def injections_at(self, tick: int, kind: InjectionKind) -> bool:
        return any(inj.kind is kind and inj.active(tick) for inj in self.failure_injections)

    def annotation_of(self, plan: PlanLabel) -> bool:
        """True/False for annotated plans; raises for unannotated ones."""
        if plan in self.correct_plans:
            return True
        if plan in self.incorrect_plans:
            return False
        raise MissingAnnotations(f"plan {plan.slug} is not annotated in scenario {self.name}")

    def require_annotations(self) -> None:
        if not self.correct_plans or not self.incorrect_plans:
            raise MissingAnnotations(
                f"scenario {self.name} must annotate at least one correct and one incorrect plan"
            )

    @property
    def arbitration_tick(self) -> int:
        """Tick the benches use to stage a human proposal."""
        if self.human_script:
            return self.human_script[0].tick
        return self.tick_budget // 4


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _require_keys(d: dict, allowed: set[str], required: set[str], where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ScenarioLoadError(f"{where}: unknown keys {sorted(unknown)}")
    missing = required - set(d)
    if missing:
        raise ScenarioLoadError(f"{where}: missing keys {sorted(missing)}")


def _parse_plan(slug, where: str) -> PlanLabel:
    try:
        return PlanLabel.from_slug(str(slug))
    except ValueError as exc:
        raise ScenarioLoadError(f"{where}: {exc}") from None


def _parse_marking(slug, where: str) -> LaneMarking:
    try:
        return LaneMarking(str(slug))
    except ValueError:
        raise ScenarioLoadError(f"{where}: unknown lane marking {slug!r}") from None


def scenario_from_dict(doc: dict, name_fallback: str = "unnamed") -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioLoadError("scenario document must be a mapping")
    _require_keys(
        doc,
        allowed={
            "schema_version", "name", "description", "seed", "tick_budget",
            "cruise_speed", "road", "route", "ego_start", "actors",
            "human_script", "failure_injections", "annotations",
        },
        required={"schema_version", "road", "route", "ego_start"},
        where="scenario",
    )
    if doc["schema_version"] != SCHEMA_VERSION:
        raise ScenarioLoadError(
            f"unsupported schema_version {doc['schema_version']} (expected {SCHEMA_VERSION})"
        )
    name = str(doc.get("name", name_fallback))

    road = doc["road"]
    _require_keys(road, allowed={"lanes"}, required={"lanes"}, where="road")
    lanes = []
    for i, lane_doc in enumerate(road["lanes"]):
        where = f"road.lanes[{i}]"
        _require_keys(
            lane_doc, allowed={"id", "center", "width", "markings"},
            required={"id", "center", "width"}, where=where,
        )
        markings_doc = lane_doc.get("markings", {})
        _require_keys(markings_doc, allowed={"left", "right"}, required=set(), where=f"{where}.markings")
        markings = LaneMarkings(
            left=_parse_marking(markings_doc.get("left", "dashed_white"), where),
            right=_parse_marking(markings_doc.get("right", "solid_white"), where),
        )
        center = tuple((float(x), float(y)) for x, y in lane_doc["center"])
        if len(center) < 2:
            raise ScenarioLoadError(f"{where}: lane center needs >= 2 points")
        lanes.append(
            Lane(lane_id=int(lane_doc["id"]), center=center,
                 width=float(lane_doc["width"]), markings=markings)
        )
    if not lanes:
        raise ScenarioLoadError("road must define at least one lane")

    route = doc["route"]
    _require_keys(route, allowed={"path", "gates"}, required={"path", "gates"}, where="route")
    path = tuple((float(x), float(y)) for x, y in route["path"])
    if len(path) < 2:
        raise ScenarioLoadError("route.path needs >= 2 points")
    gates = []
    for i, g in enumerate(route["gates"]):
        _require_keys(g, allowed={"x", "y", "radius"}, required={"x", "y"}, where=f"route.gates[{i}]")
        gates.append(Gate(x=float(g["x"]), y=float(g["y"]), radius=float(g.get("radius", 4.0))))
    if not gates:
        raise ScenarioLoadError("route needs at least one gate")

    ego_doc = doc["ego_start"]
    _require_keys(
        ego_doc, allowed={"x", "y", "heading", "speed", "wheelbase", "half_length", "half_width"},
        required={"x", "y"}, where="ego_start",
    )
    ego_start = VehicleState(
        x=float(ego_doc["x"]),
        y=float(ego_doc["y"]),
        heading=float(ego_doc.get("heading", 0.0)),
        speed=float(ego_doc.get("speed", 0.0)),
        wheelbase=float(ego_doc.get("wheelbase", 2.8)),
        half_length=float(ego_doc.get("half_length", 2.25)),
        half_width=float(ego_doc.get("half_width", 0.9)),
    )

    actors = []
    for i, a in enumerate(doc.get("actors", []) or []):
        where = f"actors[{i}]"
        _require_keys(
            a,
            allowed={"id", "kind", "half_length", "half_width", "static", "keyframes",
                     "heading", "active"},
            required={"id", "kind"},
            where=where,
        )
        try:
            kind = ObjectKind(str(a["kind"]))
        except ValueError:
            raise ScenarioLoadError(f"{where}: unknown actor kind {a['kind']!r}") from None
        static = None
        keyframes: tuple = ()
        if "static" in a:
            s = a["static"]
            _require_keys(s, allowed={"x", "y", "heading"}, required={"x", "y"}, where=f"{where}.static")
            static = (float(s["x"]), float(s["y"]), float(s.get("heading", 0.0)))
        elif "keyframes" in a:
            keyframes = tuple((float(t), float(x), float(y)) for t, x, y in a["keyframes"])
            if len(keyframes) < 2:
                raise ScenarioLoadError(f"{where}: keyframes need >= 2 entries")
            if any(b[0] <= a_[0] for a_, b in zip(keyframes, keyframes[1:])):
                raise ScenarioLoadError(f"{where}: keyframe times must strictly increase")
        else:
            raise ScenarioLoadError(f"{where}: actor needs either `static` or `keyframes`")
        actors.append(
            ActorSpec(
                actor_id=str(a["id"]),
                kind=kind,
                half_length=float(a.get("half_length", 2.25)),
                half_width=float(a.get("half_width", 0.9)),
                static=static,
                keyframes=keyframes,
                heading_override=float(a["heading"]) if "heading" in a else None,
                active=tuple(float(v) for v in a["active"]) if "active" in a else None,
            )
        )

    script = []
    for i, h in enumerate(doc.get("human_script", []) or []):
        where = f"human_script[{i}]"
        _require_keys(h, allowed={"tick", "plan", "attention"}, required={"tick", "plan"}, where=where)
        attention = Attention(str(h.get("attention", "attentive")))
        script.append(
            HumanScriptEntry(tick=int(h["tick"]), plan=_parse_plan(h["plan"], where), attention=attention)
        )
    script.sort(key=lambda e: e.tick)

    injections = []
    for i, inj in enumerate(doc.get("failure_injections", []) or []):
        where = f"failure_injections[{i}]"
        _require_keys(inj, allowed={"kind", "from_tick", "to_tick"},
                      required={"kind", "from_tick", "to_tick"}, where=where)
        try:
            kind = InjectionKind(str(inj["kind"]))
        except ValueError:
            raise ScenarioLoadError(f"{where}: unknown injection kind {inj['kind']!r}") from None
        injections.append(
            Injection(kind=kind, from_tick=int(inj["from_tick"]), to_tick=int(inj["to_tick"]))
        )

    ann = doc.get("annotations", {}) or {}
    _require_keys(ann, allowed={"correct", "incorrect"}, required=set(), where="annotations")
    correct = tuple(_parse_plan(p, "annotations.correct") for p in ann.get("correct", []))
    incorrect = tuple(_parse_plan(p, "annotations.incorrect") for p in ann.get("incorrect", []))
    overlap = set(correct) & set(incorrect)
    if overlap:
        raise ScenarioLoadError(f"plans annotated both correct and incorrect: {sorted(p.slug for p in overlap)}")

    scenario = Scenario(
        name=name,
        description=str(doc.get("description", "")),
        seed=int(doc.get("seed", 0)),
        cruise_speed=float(doc.get("cruise_speed", 8.0)),
        lanes=tuple(lanes),
        route_path=path,
        gates=tuple(gates),
        ego_start=ego_start,
        actors=tuple(actors),
        human_script=tuple(script),
        failure_injections=tuple(injections),
        correct_plans=correct,
        incorrect_plans=incorrect,
        tick_budget=int(doc.get("tick_budget", DEFAULT_TICK_BUDGET)),
    )
    _validate_scenario(scenario)
    return scenario


def _validate_scenario(s: Scenario) -> None:
    route = s.route()
    # gates must be ordered along the route and sit on the road
    prev_s = -math.inf
    for i, gate in enumerate(s.gates):
        proj = route.project(gate.x, gate.y)
        if proj.s <= prev_s:
            raise ScenarioLoadError(f"route.gates[{i}] is out of order along the route")
        prev_s = proj.s
        on_road = any(
            abs(lane.polyline().project(gate.x, gate.y).lateral) <= lane.width
            for lane in s.lanes
        )
        if not on_road:
            raise ScenarioLoadError(f"route.gates[{i}] is not on any lane")
    annotated = set(s.correct_plans) | set(s.incorrect_plans)
    for entry in s.human_script:
        if entry.plan not in annotated:
            raise ScenarioLoadError(
                f"scripted plan {entry.plan.slug} at tick {entry.tick} is not annotated"
            )


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    if not path.exists():
        raise ScenarioLoadError(f"scenario file not found: {path}")
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ScenarioLoadError(f"{path}: invalid YAML: {exc}") from None
    return scenario_from_dict(doc, name_fallback=path.stem)


# ---------------------------------------------------------------------------
# Shipped corpus
# ---------------------------------------------------------------------------


def _corpus_root():
    return resources.files("sasim.data") / "scenarios"


def shipped_scenario_names() -> list[str]:
    root = _corpus_root()
    return sorted(p.name[: -len(".yaml")] for p in root.iterdir() if p.name.endswith(".yaml"))


def load_shipped(name: str) -> Scenario:
    path = _corpus_root() / f"{name}.yaml"
    if not path.is_file():
        raise ScenarioLoadError(f"no shipped scenario named {name!r}")
    doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    return scenario_from_dict(doc, name_fallback=name)


def load_corpus() -> list[Scenario]:
    return [load_shipped(name) for name in shipped_scenario_names()]


def resolve_scenario(ref: str) -> Scenario:
    """Accept either a filesystem path or a shipped scenario name."""
    p = Path(ref)
    if p.suffix in (".yaml", ".yml") or p.exists():
        return load_scenario(p)
    return load_shipped(ref)
