"""Planner reliability scoring from candidate-trajectory disagreement.

Two variance signals are combined: spread among the candidate trajectories of
a single frame (indecision) and displacement of the mean trajectory between
consecutive frames (temporal inconsistency). Each raw variance is divided by a
fixed scale, clamped to [0, 1], and the two are merged as a weighted convex
combination. Crossing the trigger threshold requests human input.
"""

from __future__ import annotations

from dataclasses import dataclass

from .abstraction import Trajectory
from .errors import MalformedCandidateSet


@dataclass(frozen=True)
class CandidateSet:
    """Candidate trajectories emitted by the autonomous planner at one tick."""

    frame_index: int
    candidates: tuple[Trajectory, ...]

    def __post_init__(self):
        if len(self.candidates) == 0:
            raise MalformedCandidateSet("candidate set is empty")
        lengths = {len(c) for c in self.candidates}
        if len(lengths) != 1:
            raise MalformedCandidateSet(f"candidate waypoint counts differ: {sorted(lengths)}")

    @property
    def waypoint_count(self) -> int:
        return len(self.candidates[0])


@dataclass(frozen=True)
class UncertaintyConfig:
    """Weights, trigger threshold, and normalization scales (all config)."""

    alpha: float = 1.0
    beta: float = 1.0
    theta_u: float = 0.5
    intra_scale: float = 4.0
    inter_scale: float = 4.0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or self.alpha + self.beta <= 0:
            raise ValueError("weights must be non-negative with alpha + beta > 0")
        if not (0.0 <= self.theta_u <= 1.0):
            raise ValueError("theta_u must lie in [0, 1]")
        if self.intra_scale <= 0 or self.inter_scale <= 0:
            raise ValueError("normalization scales must be positive")


@dataclass(frozen=True)
class UncertaintyScore:
    u_t: float
    intra_raw: float
    inter_raw: float
    triggered: bool


def intra_frame_variance(cand_set: CandidateSet) -> float:
    """Mean over waypoint indices of (population var of x + population var of y).

    A singleton candidate set has zero spread by definition.
    """
    k = len(cand_set.candidates)
    if k == 1:
        return 0.0
    n = cand_set.waypoint_count
    total = 0.0
    for i in range(n):
        xs = [c.waypoints[i][0] for c in cand_set.candidates]
        ys = [c.waypoints[i][1] for c in cand_set.candidates]
        mx = sum(xs) / k
        my = sum(ys) / k
        total += sum((x - mx) ** 2 for x in xs) / k
        total += sum((y - my) ** 2 for y in ys) / k
    return total / n


def inter_frame_variance(prev_mean: Trajectory, curr_mean: Trajectory) -> float:
    """Mean squared waypoint displacement between consecutive mean trajectories."""
    if len(prev_mean) != len(curr_mean):
        raise MalformedCandidateSet(
            f"mean trajectory lengths differ: {len(prev_mean)} vs {len(curr_mean)}"
        )
    total = 0.0
    for (x0, y0), (x1, y1) in zip(prev_mean.waypoints, curr_mean.waypoints):
        total += (x1 - x0) ** 2 + (y1 - y0) ** 2
    return total / len(curr_mean)


def mean_trajectory(cand_set: CandidateSet) -> Trajectory:
    """Waypoint-wise arithmetic mean of the candidates."""
    k = len(cand_set.candidates)
    points = []
    for i in range(cand_set.waypoint_count):
        x = sum(c.waypoints[i][0] for c in cand_set.candidates) / k
        y = sum(c.waypoints[i][1] for c in cand_set.candidates) / k
        points.append((x, y))
    # mean of valid trajectories can exceed a member's step bound only if
    # members diverge wildly; inherit the loosest member bound
    max_step = max(c.max_step_m for c in cand_set.candidates)
    return Trajectory(tuple(points), max_step_m=max_step)


def score(
    cand_set: CandidateSet,
    prev_mean: Trajectory | None,
    cfg: UncertaintyConfig | None = None,
) -> UncertaintyScore:
    """Combined uncertainty for one frame.

    The first frame of an episode (no predecessor mean) has zero inter-frame
    variance by contract. Triggering requires strictly exceeding theta_u.
    """
    cfg = cfg or UncertaintyConfig()
    intra_raw = intra_frame_variance(cand_set)
    if prev_mean is None:
        inter_raw = 0.0
    else:
        inter_raw = inter_frame_variance(prev_mean, mean_trajectory(cand_set))
    intra_norm = min(intra_raw / cfg.intra_scale, 1.0)
    inter_norm = min(inter_raw / cfg.inter_scale, 1.0)
    u = (cfg.alpha * intra_norm + cfg.beta * inter_norm) / (cfg.alpha + cfg.beta)
    return UncertaintyScore(
        u_t=u, intra_raw=intra_raw, inter_raw=inter_raw, triggered=u > cfg.theta_u
    )


def first_trigger(scores: list[UncertaintyScore]) -> int | None:
    """Position of the first triggered score in frame order, or None."""
    for i, s in enumerate(scores):
        if s.triggered:
            return i
    return None
