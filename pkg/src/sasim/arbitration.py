"""Arbitration between human and autonomous plans.

Holds the scene/request/decision types, the deterministic prompt template and
its response parser, and the arbiter implementations: always-trust-the-human
(naive), ordered rule table (decision tree), ground-truth oracle, and the
reasoning-service client (VLM, with an offline deterministic stub backend).

Responses follow a strict output grammar: the reply must end with a
`DECISION: HUMAN | AUTONOMY | ALTERNATIVE=<primitive>` line and an
`INTENT: <sentence>` line, which is what makes free-form text executable.
"""

from __future__ import annotations

import enum
import math
import re
import time
from dataclasses import dataclass, field
from typing import Callable, Protocol

from .abstraction import (
    PlanLabel,
    StateDescriptor,
    describe,
    parse_plan_phrase,
)
from .errors import MalformedResponse
from .rules import RuleFacts, RuleTable
from .uncertainty import UncertaintyScore

SNAPSHOT_SPACING_S = 0.5
SNAPSHOT_SPACING_TOL_S = 0.051  # one tick of slack at the 20 Hz default


class ObjectKind(enum.Enum):
    VEHICLE = "vehicle"
    PEDESTRIAN = "pedestrian"
    CONE_OR_SIGN = "cone_or_sign"
    OPEN_DOOR = "open_door"
    EMERGENCY_VEHICLE = "emergency_vehicle"
    BARRIER = "barrier"


_KIND_PHRASE = {
    ObjectKind.VEHICLE: "vehicle",
    ObjectKind.PEDESTRIAN: "pedestrian",
    ObjectKind.CONE_OR_SIGN: "traffic cone or sign",
    ObjectKind.OPEN_DOOR: "open car door",
    ObjectKind.EMERGENCY_VEHICLE: "emergency vehicle",
    ObjectKind.BARRIER: "barrier",
}


class LaneMarking(enum.Enum):
    DASHED_WHITE = "dashed_white"
    SOLID_WHITE = "solid_white"
    SOLID_YELLOW = "solid_yellow"
    DOUBLE_YELLOW = "double_yellow"


@dataclass(frozen=True)
class LaneMarkings:
    left: LaneMarking = LaneMarking.DASHED_WHITE
    right: LaneMarking = LaneMarking.SOLID_WHITE


@dataclass(frozen=True)
class SceneObject:
    """One perceived object in the ego frame (x right+, y forward+, meters)."""

    kind: ObjectKind
    x: float
    y: float
    vx: float = 0.0
    vy: float = 0.0
    lane_offset: int = 0  # lanes relative to ego lane, negative = left

    def __post_init__(self):
        for v in (self.x, self.y, self.vx, self.vy):
            if not math.isfinite(v):
                raise ValueError("scene object fields must be finite")

    @property
    def speed(self) -> float:
        return math.hypot(self.vx, self.vy)

    @property
    def approaching(self) -> bool:
        return self.vy < -0.5


@dataclass(frozen=True)
class SceneSnapshot:
    timestamp: float
    objects: tuple[SceneObject, ...]
    ego_lane: int
    lane_markings: LaneMarkings
    visibility: float

    def __post_init__(self):
        if not (0.0 <= self.visibility <= 1.0):
            raise ValueError("visibility must lie in [0, 1]")


@dataclass(frozen=True)
class SceneContext:
    """Exactly three snapshots at 0.5 s spacing, oldest first."""

    snapshots: tuple[SceneSnapshot, SceneSnapshot, SceneSnapshot]

    def __post_init__(self):
        if len(self.snapshots) != 3:
            raise ValueError("scene context requires exactly 3 snapshots")
        for a, b in zip(self.snapshots, self.snapshots[1:]):
            gap = b.timestamp - a.timestamp
            if abs(gap - SNAPSHOT_SPACING_S) > SNAPSHOT_SPACING_TOL_S:
                raise ValueError(f"snapshot spacing {gap:.3f} s is not ~0.5 s")

    @property
    def latest(self) -> SceneSnapshot:
        return self.snapshots[-1]


class TeamingMode(enum.Enum):
    PROACTIVE_TEAMING = "proactive"
    SUPERVISORY_PROMPTED = "supervisory"

    @property
    def phrase(self) -> str:
        return (
            "proactive teaming"
            if self is TeamingMode.PROACTIVE_TEAMING
            else "supervisory prompt"
        )


@dataclass(frozen=True)
class ArbitrationRequest:
    context: SceneContext
    ego_descriptor: StateDescriptor
    human_descriptor: StateDescriptor
    human_plan: PlanLabel
    autonomy_plan: PlanLabel
    autonomy_uncertainty: UncertaintyScore
    mode: TeamingMode

    def __post_init__(self):
        if self.mode is TeamingMode.SUPERVISORY_PROMPTED and not self.autonomy_uncertainty.triggered:
            raise ValueError("supervisory requests require a fired uncertainty trigger")


class Choice(enum.Enum):
    HUMAN = "human"
    AUTONOMY = "autonomy"
    ALTERNATIVE = "alternative"


@dataclass(frozen=True)
class ArbitrationDecision:
    choice: Choice
    grounded_plan: PlanLabel
    rationale: str
    latency_ms: float = 0.0
    intent: str = ""


def validate_decision(request: ArbitrationRequest, decision: ArbitrationDecision) -> None:
    """Enforce the choice/grounded-plan consistency contract."""
    if decision.choice is Choice.HUMAN and decision.grounded_plan is not request.human_plan:
        raise ValueError("human choice must ground the human plan")
    if decision.choice is Choice.AUTONOMY and decision.grounded_plan is not request.autonomy_plan:
        raise ValueError("autonomy choice must ground the autonomy plan")
    if decision.choice is Choice.ALTERNATIVE:
        plan = decision.grounded_plan
        is_lane_change = plan in (PlanLabel.LANE_CHANGE_LEFT, PlanLabel.LANE_CHANGE_RIGHT)
        if not is_lane_change and plan in (request.human_plan, request.autonomy_plan):
            raise ValueError("alternative must differ from both plans or be a lane change")


# ---------------------------------------------------------------------------
# Prompt assembly and response parsing
# ---------------------------------------------------------------------------


def _fmt(value: float, places: int = 1) -> str:
    return f"{value:.{places}f}"


def narrate_object(obj: SceneObject) -> str:
    ahead = obj.y >= 0
    side = "right" if obj.x >= 0 else "left"
    if obj.lane_offset == 0:
        lane_text = "in your lane"
    else:
        n = abs(obj.lane_offset)
        lane_side = "left" if obj.lane_offset < 0 else "right"
        lane_text = f"{n} lane{'s' if n > 1 else ''} to the {lane_side}"
    if obj.speed < 0.1:
        motion = "stationary"
    elif obj.approaching:
        motion = f"approaching at {_fmt(obj.speed)} m/s"
    else:
        motion = f"moving at {_fmt(obj.speed)} m/s"
    article = "an" if _KIND_PHRASE[obj.kind][0] in "aeiou" else "a"
    return (
        f"{article} {_KIND_PHRASE[obj.kind]} {_fmt(abs(obj.y))} m {'ahead' if ahead else 'behind'}, "
        f"{_fmt(abs(obj.x))} m {side}, {lane_text}, {motion}"
    )


def narrate_snapshot(snap: SceneSnapshot) -> str:
    if snap.objects:
        objects = "; ".join(narrate_object(o) for o in snap.objects)
    else:
        objects = "no objects in range"
    return (
        f"in lane {snap.ego_lane}; lane markings: left {snap.lane_markings.left.value}, "
        f"right {snap.lane_markings.right.value}; visibility {_fmt(snap.visibility, 2)}; "
        f"objects: {objects}."
    )


def _descriptor_line(d: StateDescriptor) -> str:
    return (
        f"Throttle: {d.throttle_label}, Brake: {d.brake_label}, "
        f"Steering: {d.steering_label}, Speed: {_fmt(d.speed_mph)} mph"
    )


def build_prompt(request: ArbitrationRequest) -> str:
    """Deterministic arbitration prompt; every request field appears verbatim."""
    rel_labels = ("-1.0 s", "-0.5 s", "+0.0 s")
    lines = [
        "You are the plan arbiter for a shared-autonomy vehicle.",
        "Scene history (3 snapshots at 0.5-second intervals, oldest first):",
    ]
    for label, snap in zip(rel_labels, request.context.snapshots):
        lines.append(f"[{label}] (t={_fmt(snap.timestamp, 2)} s) {narrate_snapshot(snap)}")
    human = request.human_descriptor
    lines += [
        f"Ego-vehicle state: {_descriptor_line(request.ego_descriptor)}.",
        f"Autonomous stack plan: {describe(request.autonomy_plan)}.",
        f"Human state: {_descriptor_line(human)}, Attention: {human.attention_text}.",
        f"Human action: the driver's controls suggest the plan: {describe(request.human_plan)}.",
        (
            f"Planner uncertainty: u_t={_fmt(request.autonomy_uncertainty.u_t, 2)} "
            f"({'triggered' if request.autonomy_uncertainty.triggered else 'not triggered'}); "
            f"mode: {request.mode.phrase}."
        ),
        (
            "Your task: analyze the situation and describe what is happening in the scene, "
            "infer the plausible intention of the human driver given their actions, and "
            "based on your inference choose the human plan, the autonomous plan, or "
            "propose an alternative."
        ),
        "End your reply with exactly two lines:",
        "DECISION: HUMAN | AUTONOMY | ALTERNATIVE=<primitive>",
        "INTENT: <one sentence>",
    ]
    return "\n".join(lines)


_DECISION_RE = re.compile(r"^DECISION:\s*(.+?)\s*$", re.MULTILINE)
_INTENT_RE = re.compile(r"^INTENT:\s*(.+?)\s*$", re.MULTILINE)


def parse_response(raw: str, request: ArbitrationRequest) -> ArbitrationDecision:
    """Turn a reply in the output grammar into a validated decision.

    The last DECISION line wins. An ALTERNATIVE that names one of the two
    plans on offer is coerced to the matching direct choice so the grounding
    invariant always holds.
    """
    if not raw or not raw.strip():
        raise MalformedResponse("empty response")
    matches = list(_DECISION_RE.finditer(raw))
    if not matches:
        raise MalformedResponse("no DECISION line in response")
    decision_match = matches[-1]
    verdict = decision_match.group(1).strip()

    intent_match = None
    for m in _INTENT_RE.finditer(raw):
        intent_match = m
    intent = intent_match.group(1).strip() if intent_match else ""
    prose = raw[: decision_match.start()].strip()
    rationale = prose if not intent else (f"{prose}\n{intent}".strip())

    upper = verdict.upper()
    if upper == "HUMAN":
        choice, plan = Choice.HUMAN, request.human_plan
    elif upper == "AUTONOMY":
        choice, plan = Choice.AUTONOMY, request.autonomy_plan
    elif upper.startswith("ALTERNATIVE"):
        _, _, primitive = verdict.partition("=")
        primitive = primitive.strip().strip(".")
        if not primitive:
            raise MalformedResponse("ALTERNATIVE without a primitive")
        try:
            plan = parse_plan_phrase(primitive)
        except ValueError:
            try:
                plan = PlanLabel.from_slug(primitive.lower().replace(" ", "_"))
            except ValueError:
                raise MalformedResponse(f"unknown primitive {primitive!r}") from None
        if plan is request.human_plan:
            choice = Choice.HUMAN
        elif plan is request.autonomy_plan:
            choice = Choice.AUTONOMY
        else:
            choice = Choice.ALTERNATIVE
    else:
        raise MalformedResponse(f"unknown decision verdict {verdict!r}")

    decision = ArbitrationDecision(choice=choice, grounded_plan=plan, rationale=rationale, intent=intent)
    validate_decision(request, decision)
    return decision


def render_decision(decision: ArbitrationDecision, request: ArbitrationRequest) -> str:
    """Decision back into the output grammar (inverse direction of parse_response)."""
    if decision.choice is Choice.HUMAN:
        verdict = "HUMAN"
    elif decision.choice is Choice.AUTONOMY:
        verdict = "AUTONOMY"
    else:
        verdict = f"ALTERNATIVE={describe(decision.grounded_plan)}"
    intent = decision.intent or "intent unavailable"
    prose = decision.rationale.splitlines()[0] if decision.rationale else ""
    return f"{prose}\nDECISION: {verdict}\nINTENT: {intent}"


# ---------------------------------------------------------------------------
# Rule facts (decision-tree inputs) derived from a request
# ---------------------------------------------------------------------------

_ATTENTION_SLUGS = {
    "attentive": "attentive",
    "distracted": "distracted",
    "gazing to the left": "gaze_left",
    "gazing to the right": "gaze_right",
}

_LEFTWARD = (PlanLabel.TURN_LEFT, PlanLabel.LANE_CHANGE_LEFT)
_RIGHTWARD = (PlanLabel.TURN_RIGHT, PlanLabel.LANE_CHANGE_RIGHT)


def rule_facts(request: ArbitrationRequest) -> RuleFacts:
    snap = request.context.latest
    if request.human_plan in _LEFTWARD:
        marking = snap.lane_markings.left.value
    elif request.human_plan in _RIGHTWARD:
        marking = snap.lane_markings.right.value
    else:
        marking = "none"
    oncoming = math.inf
    for obj in snap.objects:
        if obj.kind in (ObjectKind.VEHICLE, ObjectKind.EMERGENCY_VEHICLE):
            if obj.approaching and obj.y > 0:
                oncoming = min(oncoming, obj.y)
    return RuleFacts(
        marking_crossed=marking,
        oncoming_distance=oncoming,
        attention=_ATTENTION_SLUGS.get(request.human_descriptor.attention_text, "unknown"),
        uncertainty_triggered=request.autonomy_uncertainty.triggered,
        plan_category=request.human_plan.category,
    )


# ---------------------------------------------------------------------------
# Arbiters
# ---------------------------------------------------------------------------


class Arbiter(Protocol):
    name: str

    def decide(self, request: ArbitrationRequest) -> ArbitrationDecision: ...


class NaiveArbiter:
    """Baseline that always selects the human plan."""

    name = "naive"

    def decide(self, request: ArbitrationRequest) -> ArbitrationDecision:
        return ArbitrationDecision(
            choice=Choice.HUMAN,
            grounded_plan=request.human_plan,
            rationale="naive policy: always trust the human",
            intent="follow the human plan",
        )


class OracleArbiter:
    """Upper-bound arbiter fed the ground-truth correctness of the human plan."""

    name = "oracle"

    def __init__(self, truth_fn: Callable[[ArbitrationRequest], bool]):
        self._truth_fn = truth_fn

    def decide(self, request: ArbitrationRequest) -> ArbitrationDecision:
        if self._truth_fn(request):
            return ArbitrationDecision(
                choice=Choice.HUMAN,
                grounded_plan=request.human_plan,
                rationale="oracle: human plan annotated correct",
                intent="follow the human plan",
            )
        return ArbitrationDecision(
            choice=Choice.AUTONOMY,
            grounded_plan=request.autonomy_plan,
            rationale="oracle: human plan annotated incorrect",
            intent="keep the autonomous plan",
        )


class DecisionTreeArbiter:
    """Ordered rule-table baseline; rigid by design."""

    name = "decision-tree"

    def __init__(self, table: RuleTable):
        self.table = table

    def decide(self, request: ArbitrationRequest) -> ArbitrationDecision:
        facts = rule_facts(request)
        rule = self.table.evaluate(facts)
        rationale = f"rule (line {rule.line}) matched: {facts}"
        if rule.choice == "human":
            return ArbitrationDecision(
                choice=Choice.HUMAN,
                grounded_plan=request.human_plan,
                rationale=rationale,
                intent="follow the human plan",
            )
        if rule.choice == "autonomy":
            return ArbitrationDecision(
                choice=Choice.AUTONOMY,
                grounded_plan=request.autonomy_plan,
                rationale=rationale,
                intent="keep the autonomous plan",
            )
        plan = rule.alternative
        if plan is request.human_plan:
            choice = Choice.HUMAN
        elif plan is request.autonomy_plan:
            choice = Choice.AUTONOMY
        else:
            choice = Choice.ALTERNATIVE
        return ArbitrationDecision(
            choice=choice,
            grounded_plan=plan,
            rationale=rationale,
            intent=f"switch to {describe(plan)}",
        )


class VlmArbiter:
    """Client of a chat-completion reasoning service (or its offline stub).

    `audit` (anything with a .record method) receives every exchange; the
    episode runner sets `current_frame` before each decision.
    """

    def __init__(self, call: Callable[[str], str], name: str = "vlm", audit=None):
        self._call = call
        self.name = name
        self._audit = audit
        self.current_frame: int | None = None

    def decide(self, request: ArbitrationRequest) -> ArbitrationDecision:
        prompt = build_prompt(request)
        started = time.perf_counter()
        raw = self._call(prompt)
        latency_ms = (time.perf_counter() - started) * 1000.0
        decision = parse_response(raw, request)
        if self._audit is not None:
            self._audit.record(self.current_frame, prompt, raw, decision.choice.value, latency_ms)
        return ArbitrationDecision(
            choice=decision.choice,
            grounded_plan=decision.grounded_plan,
            rationale=decision.rationale,
            latency_ms=latency_ms,
            intent=decision.intent,
        )


def arbitrate(request: ArbitrationRequest, arbiter: Arbiter) -> ArbitrationDecision:
    """Run one arbiter and enforce the decision contract on its output."""
    decision = arbiter.decide(request)
    validate_decision(request, decision)
    return decision
