"""Plan and state abstraction: continuous signals to symbolic descriptors.

A waypoint trajectory is summarized by net lateral/longitudinal displacement
plus total path length and thresholded into a symbolic plan label. Low-level
control signals (throttle, brake, steering, speed) are discretized into the
ordinal text vocabulary used by the arbitration prompts.

Conventions: ego frame has x positive to the right, y positive forward.
All functions here are pure; inputs are immutable dataclasses.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .errors import InvalidTrajectory

MPS_TO_MPH = 2.23694

# Reject plans whose consecutive waypoints jump farther than this (corrupt data).
DEFAULT_MAX_STEP_M = 5.0


class PlanLabel(enum.Enum):
    """Symbolic high-level plan vocabulary.

    The first five labels are producible by trajectory classification; the
    lane-change labels are only emitted by arbiters and scripted humans.
    """

    STOP = "stop"
    TURN_LEFT = "turn_left"
    TURN_RIGHT = "turn_right"
    DRIVE_FORWARD = "drive_forward"
    SLOW_DOWN = "slow_down"
    LANE_CHANGE_LEFT = "lane_change_left"
    LANE_CHANGE_RIGHT = "lane_change_right"

    @property
    def slug(self) -> str:
        return self.value

    @classmethod
    def from_slug(cls, slug: str) -> "PlanLabel":
        for label in cls:
            if label.value == slug:
                return label
        raise ValueError(f"unknown plan label slug: {slug!r}")

    @property
    def category(self) -> str:
        """Coarse family used by rule predicates: stop/turn/lane_change/forward/slow."""
        return _CATEGORY[self]


_CATEGORY = {
    PlanLabel.STOP: "stop",
    PlanLabel.TURN_LEFT: "turn",
    PlanLabel.TURN_RIGHT: "turn",
    PlanLabel.DRIVE_FORWARD: "forward",
    PlanLabel.SLOW_DOWN: "slow",
    PlanLabel.LANE_CHANGE_LEFT: "lane_change",
    PlanLabel.LANE_CHANGE_RIGHT: "lane_change",
}


class Attention(enum.Enum):
    ATTENTIVE = "attentive"
    DISTRACTED = "distracted"
    GAZE_LEFT = "gaze_left"
    GAZE_RIGHT = "gaze_right"


_ATTENTION_TEXT = {
    None: "unknown",
    Attention.ATTENTIVE: "attentive",
    Attention.DISTRACTED: "distracted",
    Attention.GAZE_LEFT: "gazing to the left",
    Attention.GAZE_RIGHT: "gazing to the right",
}


@dataclass(frozen=True)
class Trajectory:
    """Ordered (x, y) waypoints in the ego frame at emission time.

    x is lateral (positive right), y is longitudinal (positive forward),
    both in meters.
    """

    waypoints: tuple[tuple[float, float], ...]
    max_step_m: float = field(default=DEFAULT_MAX_STEP_M, compare=False, repr=False)

    def __post_init__(self):
        if len(self.waypoints) == 0:
            raise InvalidTrajectory("trajectory has no waypoints")
        prev = None
        for i, (x, y) in enumerate(self.waypoints):
            if not (math.isfinite(x) and math.isfinite(y)):
                raise InvalidTrajectory(f"non-finite coordinate at waypoint {i}")
            if prev is not None:
                step = math.hypot(x - prev[0], y - prev[1])
                if step > self.max_step_m:
                    raise InvalidTrajectory(
                        f"step {step:.3f} m between waypoints {i - 1} and {i} "
                        f"exceeds bound {self.max_step_m} m"
                    )
            prev = (x, y)

    def __len__(self) -> int:
        return len(self.waypoints)

    @classmethod
    def from_points(cls, points, max_step_m: float = DEFAULT_MAX_STEP_M) -> "Trajectory":
        return cls(tuple((float(x), float(y)) for x, y in points), max_step_m)


@dataclass(frozen=True)
class PlanSummary:
    """Net displacement and arc length of a trajectory (inputs to classification)."""

    delta_x: float
    delta_y: float
    path_length: float

    def __post_init__(self):
        if self.path_length < 0:
            raise ValueError("path_length must be non-negative")
        chord = math.hypot(self.delta_x, self.delta_y)
        if self.path_length < chord - 1e-9:
            raise ValueError(
                f"path_length {self.path_length} shorter than displacement chord {chord}"
            )


@dataclass(frozen=True)
class AbstractionConfig:
    """Thresholds for plan classification and bins for state discretization."""

    theta_stop: float = 1.5
    theta_turn: float = 2.0
    theta_fwd: float = 2.0
    epsilon_theta: float = 0.05
    throttle_bins: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0)
    ordinal_labels: tuple[str, ...] = (
        "not applied",
        "light",
        "moderate",
        "strong",
        "maximum",
    )

    def __post_init__(self):
        if len(self.throttle_bins) != 5 or len(self.ordinal_labels) != 5:
            raise ValueError("throttle_bins and ordinal_labels must both have 5 entries")
        if self.throttle_bins[0] != 0.0 or self.throttle_bins[-1] != 1.0:
            raise ValueError("throttle_bins must start at 0.0 and end at 1.0")
        if any(b >= a for b, a in zip(self.throttle_bins, self.throttle_bins[1:])):
            raise ValueError("throttle_bins must be strictly increasing")


@dataclass(frozen=True)
class ControlState:
    """Low-level control signals of the ego or human driver."""

    throttle: float = 0.0
    brake: float = 0.0
    steering: float = 0.0
    speed_mps: float = 0.0
    human_attention: Attention | None = None

    def __post_init__(self):
        for name, value, lo, hi in (
            ("throttle", self.throttle, 0.0, 1.0),
            ("brake", self.brake, 0.0, 1.0),
            ("steering", self.steering, -1.0, 1.0),
        ):
            if not math.isfinite(value) or not (lo <= value <= hi):
                raise ValueError(f"{name}={value} outside [{lo}, {hi}]")
        if not math.isfinite(self.speed_mps) or self.speed_mps < 0:
            raise ValueError(f"speed_mps={self.speed_mps} must be finite and >= 0")


@dataclass(frozen=True)
class StateDescriptor:
    """Textual discretization of a ControlState."""

    throttle_label: str
    brake_label: str
    steering_label: str
    speed_mph: float
    attention_text: str


def summarize_plan(traj: Trajectory) -> PlanSummary:
    """Net lateral/longitudinal displacement plus summed segment lengths.

    A single-waypoint trajectory summarizes to all zeros.
    """
    pts = traj.waypoints
    dx = pts[-1][0] - pts[0][0]
    dy = pts[-1][1] - pts[0][1]
    length = 0.0
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        length += math.hypot(x1 - x0, y1 - y0)
    return PlanSummary(delta_x=dx, delta_y=dy, path_length=length)


def classify_plan(summary: PlanSummary, cfg: AbstractionConfig | None = None) -> PlanLabel:
    """Threshold a plan summary into a label.

    Checks apply in a fixed precedence: stop, then turn, then forward; anything
    left is a slow-down (including backward motion). Total on valid summaries.
    """
    cfg = cfg or AbstractionConfig()
    if summary.path_length < cfg.theta_stop:
        return PlanLabel.STOP
    if abs(summary.delta_x) > cfg.theta_turn:
        return PlanLabel.TURN_RIGHT if summary.delta_x > 0 else PlanLabel.TURN_LEFT
    if summary.delta_y > cfg.theta_fwd:
        return PlanLabel.DRIVE_FORWARD
    return PlanLabel.SLOW_DOWN


def _nearest_bin_index(value: float, bins: tuple[float, ...]) -> int:
    # ties resolve to the lower bin
    best = 0
    best_dist = abs(value - bins[0])
    for i, b in enumerate(bins[1:], start=1):
        d = abs(value - b)
        if d < best_dist:
            best = i
            best_dist = d
    return best


def abstract_state(state: ControlState, cfg: AbstractionConfig | None = None) -> StateDescriptor:
    """Discretize control values into the ordinal text vocabulary."""
    cfg = cfg or AbstractionConfig()
    throttle_label = cfg.ordinal_labels[_nearest_bin_index(state.throttle, cfg.throttle_bins)]
    brake_label = cfg.ordinal_labels[_nearest_bin_index(state.brake, cfg.throttle_bins)]
    if state.steering > cfg.epsilon_theta:
        steering_label = "to the right"
    elif state.steering < -cfg.epsilon_theta:
        steering_label = "to the left"
    else:
        steering_label = "neutral"
    return StateDescriptor(
        throttle_label=throttle_label,
        brake_label=brake_label,
        steering_label=steering_label,
        speed_mph=state.speed_mps * MPS_TO_MPH,
        attention_text=_ATTENTION_TEXT[state.human_attention],
    )


_PHRASES = {
    PlanLabel.STOP: "stop",
    PlanLabel.TURN_LEFT: "turn left",
    PlanLabel.TURN_RIGHT: "turn right",
    PlanLabel.DRIVE_FORWARD: "drive forward",
    PlanLabel.SLOW_DOWN: "slow down",
    PlanLabel.LANE_CHANGE_LEFT: "change lane to the left",
    PlanLabel.LANE_CHANGE_RIGHT: "change lane to the right",
}
_PHRASE_TO_LABEL = {phrase: label for label, phrase in _PHRASES.items()}


def describe(label: PlanLabel) -> str:
    """Prompt-ready phrase for a plan label (injective; see parse_plan_phrase)."""
    return _PHRASES[label]


def parse_plan_phrase(text: str) -> PlanLabel:
    """Inverse of describe. Raises ValueError on unknown phrases."""
    phrase = text.strip().lower()
    if phrase not in _PHRASE_TO_LABEL:
        raise ValueError(f"unknown plan phrase: {text!r}")
    return _PHRASE_TO_LABEL[phrase]
