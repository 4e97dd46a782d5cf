"""Plan grounding: motion-primitive goals, grid path search, PID tracking.

A symbolic plan label is grounded in three stages: a catalog lookup turns the
label into a goal offset and target speed; 8-connected A* finds a path on a
local occupancy grid; the resampled path is tracked tick-by-tick with two PID
loops (lateral cross-track to a lookahead point, longitudinal speed).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .abstraction import DEFAULT_MAX_STEP_M, PlanLabel, Trajectory
from .errors import OutOfBounds, StartOccupied
from .world import ControlCommand, VehicleState, world_to_ego

Cell = tuple[int, int]

SQRT2 = math.sqrt(2.0)


@dataclass
class OccupancyGrid:
    """Boolean occupancy over a regular metric grid.

    Cells are addressed as (ix, iy); cell (0, 0) has its center at
    origin + resolution/2 on both axes.
    """

    resolution: float
    width: int
    height: int
    origin: tuple[float, float] = (0.0, 0.0)
    occupied: np.ndarray = field(default=None)  # bool, shape (height, width)

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")
        if self.width < 1 or self.height < 1:
            raise ValueError("grid dimensions must be at least 1x1")
        if self.occupied is None:
            self.occupied = np.zeros((self.height, self.width), dtype=bool)
        if self.occupied.shape != (self.height, self.width):
            raise ValueError("occupancy array shape does not match dimensions")

    def in_bounds(self, cell: Cell) -> bool:
        ix, iy = cell
        return 0 <= ix < self.width and 0 <= iy < self.height

    def is_occupied(self, cell: Cell) -> bool:
        ix, iy = cell
        return bool(self.occupied[iy, ix])

    def cell_center(self, cell: Cell) -> tuple[float, float]:
        ix, iy = cell
        return (
            self.origin[0] + (ix + 0.5) * self.resolution,
            self.origin[1] + (iy + 0.5) * self.resolution,
        )

    def cell_of(self, x: float, y: float) -> Cell:
        return (
            int(math.floor((x - self.origin[0]) / self.resolution)),
            int(math.floor((y - self.origin[1]) / self.resolution)),
        )

    def mark_disc(self, x: float, y: float, radius: float) -> None:
        """Set all cells whose centers fall within radius of (x, y)."""
        lo_x, lo_y = self.cell_of(x - radius, y - radius)
        hi_x, hi_y = self.cell_of(x + radius, y + radius)
        for iy in range(max(0, lo_y), min(self.height, hi_y + 2)):
            for ix in range(max(0, lo_x), min(self.width, hi_x + 2)):
                cx, cy = self.cell_center((ix, iy))
                if (cx - x) ** 2 + (cy - y) ** 2 <= radius * radius:
                    self.occupied[iy, ix] = True


_NEIGHBORS = (
    (1, 0, 1.0),
    (-1, 0, 1.0),
    (0, 1, 1.0),
    (0, -1, 1.0),
    (1, 1, SQRT2),
    (1, -1, SQRT2),
    (-1, 1, SQRT2),
    (-1, -1, SQRT2),
)


def astar_plan(grid: OccupancyGrid, start: Cell, goal: Cell) -> list[Cell] | None:
    """Minimal-cost 8-connected path with Euclidean costs and heuristic.

    Ties on f-value break by heap insertion order, which keeps results
    deterministic. Returns None when the goal is unreachable.
    """
    for name, cell in (("start", start), ("goal", goal)):
        if not grid.in_bounds(cell):
            raise OutOfBounds(f"{name} cell {cell} outside {grid.width}x{grid.height} grid")
    if grid.is_occupied(start):
        raise StartOccupied(f"start cell {start} is occupied")
    if start == goal:
        return [start]

    def h(cell: Cell) -> float:
        return math.hypot(goal[0] - cell[0], goal[1] - cell[1])

    counter = 0
    open_heap: list[tuple[float, int, Cell]] = [(h(start), counter, start)]
    g_score: dict[Cell, float] = {start: 0.0}
    came_from: dict[Cell, Cell] = {}
    closed: set[Cell] = set()

    while open_heap:
        _, _, current = heapq.heappop(open_heap)
        if current in closed:
            continue
        if current == goal:
            path = [current]
            while current in came_from:
                current = came_from[current]
                path.append(current)
            path.reverse()
            return path
        closed.add(current)
        cx, cy = current
        for dx, dy, step in _NEIGHBORS:
            nxt = (cx + dx, cy + dy)
            if not grid.in_bounds(nxt) or grid.is_occupied(nxt):
                continue
            tentative = g_score[current] + step
            if tentative < g_score.get(nxt, math.inf):
                g_score[nxt] = tentative
                came_from[nxt] = current
                counter += 1
                heapq.heappush(open_heap, (tentative + h(nxt), counter, nxt))
    return None


def path_cost(path: list[Cell]) -> float:
    cost = 0.0
    for (x0, y0), (x1, y1) in zip(path, path[1:]):
        cost += math.hypot(x1 - x0, y1 - y0)
    return cost


def smooth_to_trajectory(path: list[Cell], grid: OccupancyGrid, samples: int) -> Trajectory:
    """Resample a cell path to evenly spaced arc-length waypoints in meters."""
    if len(path) < 1:
        raise ValueError("path must contain at least one cell")
    points = [grid.cell_center(c) for c in path]
    if len(points) == 1 or samples <= 1:
        return Trajectory((points[0],))

    arc = [0.0]
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        arc.append(arc[-1] + math.hypot(x1 - x0, y1 - y0))
    total = arc[-1]
    if total == 0.0:
        return Trajectory((points[0],))

    out = []
    seg = 0
    for k in range(samples):
        target = total * k / (samples - 1)
        while seg < len(arc) - 2 and arc[seg + 1] < target:
            seg += 1
        span = arc[seg + 1] - arc[seg]
        t = 0.0 if span == 0 else (target - arc[seg]) / span
        x = points[seg][0] + t * (points[seg + 1][0] - points[seg][0])
        y = points[seg][1] + t * (points[seg + 1][1] - points[seg][1])
        out.append((x, y))
    spacing = total / (samples - 1)
    return Trajectory(tuple(out), max_step_m=max(DEFAULT_MAX_STEP_M, spacing * 1.01))


# ---------------------------------------------------------------------------
# Motion primitives
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PrimitiveSpec:
    """Grounded goal of a symbolic plan, relative to the ego at decision time."""

    label: PlanLabel
    goal_offset: tuple[float, float]  # (lateral right+, longitudinal forward+) meters
    target_speed: float
    duration_s: float

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ValueError("duration_s must be positive")
        if self.label is PlanLabel.STOP and self.target_speed != 0.0:
            raise ValueError("stop primitive must target zero speed")


@dataclass(frozen=True)
class PrimitiveCatalog:
    """Geometry of the motion-primitive vocabulary (all distances in meters)."""

    forward_distance: float = 20.0
    slow_distance: float = 10.0
    stop_min_distance: float = 3.0
    lane_change_distance: float = 15.0
    lane_width: float = 3.5
    turn_offset: float = 8.0
    turn_distance: float = 8.0
    turn_speed: float = 5.0
    # floor applied to "keep speed" primitives so a stopped ego can still move
    keep_speed_floor: float = 3.0
    min_duration_s: float = 2.0


def primitive_goal(
    label: PlanLabel, ego: VehicleState, cfg: PrimitiveCatalog | None = None
) -> PrimitiveSpec:
    """Catalog lookup from plan label to goal offset and target speed."""
    cfg = cfg or PrimitiveCatalog()
    keep = max(ego.speed, cfg.keep_speed_floor)
    if label is PlanLabel.DRIVE_FORWARD:
        offset, speed = (0.0, cfg.forward_distance), keep
    elif label is PlanLabel.SLOW_DOWN:
        offset, speed = (0.0, cfg.slow_distance), ego.speed / 2.0
    elif label is PlanLabel.STOP:
        offset, speed = (0.0, max(2.0 * ego.speed, cfg.stop_min_distance)), 0.0
    elif label is PlanLabel.LANE_CHANGE_LEFT:
        offset, speed = (-cfg.lane_width, cfg.lane_change_distance), keep
    elif label is PlanLabel.LANE_CHANGE_RIGHT:
        offset, speed = (cfg.lane_width, cfg.lane_change_distance), keep
    elif label is PlanLabel.TURN_LEFT:
        offset, speed = (-cfg.turn_offset, cfg.turn_distance), cfg.turn_speed
    elif label is PlanLabel.TURN_RIGHT:
        offset, speed = (cfg.turn_offset, cfg.turn_distance), cfg.turn_speed
    else:  # pragma: no cover - vocabulary is closed
        raise ValueError(f"no primitive for {label}")
    distance = math.hypot(*offset)
    pace = max(ego.speed, speed, 2.0)
    duration = max(cfg.min_duration_s, distance / pace + 2.0)
    return PrimitiveSpec(label=label, goal_offset=offset, target_speed=speed, duration_s=duration)


# ---------------------------------------------------------------------------
# PID tracking
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PidGains:
    kp: float
    ki: float
    kd: float
    integral_clamp: float

    def __post_init__(self):
        if self.kp < 0 or self.ki < 0 or self.kd < 0:
            raise ValueError("gains must be non-negative")
        if self.integral_clamp <= 0:
            raise ValueError("integral clamp must be positive")


LATERAL_GAINS = PidGains(kp=0.8, ki=0.0, kd=0.2, integral_clamp=1.0)
LONGITUDINAL_GAINS = PidGains(kp=0.5, ki=0.05, kd=0.0, integral_clamp=2.0)

LOOKAHEAD_M = 5.0
# raw 20 Hz derivatives chatter against the steering limits; first-order
# low-pass keeps the D term useful
DERIVATIVE_FILTER_TAU_S = 0.3


class Pid:
    """Scalar PID loop with clamped integral (anti-windup) and filtered D."""

    def __init__(self, gains: PidGains, derivative_tau: float = DERIVATIVE_FILTER_TAU_S):
        self.gains = gains
        self.derivative_tau = derivative_tau
        self.integral = 0.0
        self.prev_error: float | None = None
        self._derivative = 0.0

    def reset(self) -> None:
        self.integral = 0.0
        self.prev_error = None
        self._derivative = 0.0

    def step(self, error: float, dt: float) -> float:
        g = self.gains
        self.integral = min(g.integral_clamp, max(-g.integral_clamp, self.integral + error * dt))
        raw = 0.0 if self.prev_error is None else (error - self.prev_error) / dt
        blend = dt / (dt + self.derivative_tau)
        self._derivative += blend * (raw - self._derivative)
        self.prev_error = error
        return g.kp * error + g.ki * self.integral + g.kd * self._derivative


class TrajectoryTracker:
    """Tracks a world-frame polyline with lateral + longitudinal PID loops.

    The lateral error is the ego-frame lateral offset of a lookahead point,
    which folds heading error into the signal and damps oscillation.
    """

    def __init__(
        self,
        lateral: PidGains = LATERAL_GAINS,
        longitudinal: PidGains = LONGITUDINAL_GAINS,
        lookahead_m: float = LOOKAHEAD_M,
    ):
        self._lat = Pid(lateral)
        self._lon = Pid(longitudinal)
        self.lookahead_m = lookahead_m

    def reset(self) -> None:
        self._lat.reset()
        self._lon.reset()

    def control(
        self,
        ref: list[tuple[float, float]],
        target_speed: float,
        ego: VehicleState,
        dt: float,
    ) -> ControlCommand:
        if not ref:
            raise ValueError("reference path is empty")
        target = _lookahead_point(ref, ego, self.lookahead_m)
        lateral_err, _ = world_to_ego(ego, target[0], target[1])
        steering = self._lat.step(lateral_err, dt)
        accel_cmd = self._lon.step(target_speed - ego.speed, dt)
        return ControlCommand(
            steering=min(1.0, max(-1.0, steering)),
            throttle=min(1.0, max(0.0, accel_cmd)),
            brake=min(1.0, max(0.0, -accel_cmd)),
        )


def _lookahead_point(
    ref: list[tuple[float, float]], ego: VehicleState, lookahead: float
) -> tuple[float, float]:
    if len(ref) == 1:
        return ref[0]
    nearest = min(
        range(len(ref)), key=lambda i: (ref[i][0] - ego.x) ** 2 + (ref[i][1] - ego.y) ** 2
    )
    remaining = lookahead
    for i in range(nearest, len(ref) - 1):
        seg = math.hypot(ref[i + 1][0] - ref[i][0], ref[i + 1][1] - ref[i][1])
        if seg >= remaining and seg > 0:
            t = remaining / seg
            return (
                ref[i][0] + t * (ref[i + 1][0] - ref[i][0]),
                ref[i][1] + t * (ref[i + 1][1] - ref[i][1]),
            )
        remaining -= seg
    return ref[-1]


def pid_control(
    ref: Trajectory,
    target_speed: float,
    ego: VehicleState,
    dt: float,
    lateral: PidGains = LATERAL_GAINS,
    longitudinal: PidGains = LONGITUDINAL_GAINS,
) -> ControlCommand:
    """Single-shot tracking command for an ego-frame reference trajectory.

    Uses fresh controller state (no integral history); episode code keeps a
    TrajectoryTracker alive across ticks instead.
    """
    from .world import ego_to_world

    world_ref = [ego_to_world(ego, x, y) for x, y in ref.waypoints]
    tracker = TrajectoryTracker(lateral, longitudinal)
    return tracker.control(world_ref, target_speed, ego, dt)
