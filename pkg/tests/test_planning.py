import math
import random

import numpy as np
import pytest

from sasim.abstraction import PlanLabel
from sasim.errors import OutOfBounds, StartOccupied
from sasim.planning import (
    LATERAL_GAINS,
    LONGITUDINAL_GAINS,
    OccupancyGrid,
    PidGains,
    PrimitiveCatalog,
    TrajectoryTracker,
    astar_plan,
    path_cost,
    pid_control,
    primitive_goal,
    smooth_to_trajectory,
)
from sasim.world import VehicleState, integrate_vehicle

SQRT2 = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# Independent oracle: brute-force Dijkstra over the same 8-connected graph
# ---------------------------------------------------------------------------


def dijkstra_cost(grid: OccupancyGrid, start, goal):
    """Exhaustive relaxation Dijkstra; deliberately naive and heap-free."""
    dist = {start: 0.0}
    visited = set()
    while True:
        frontier = [(d, c) for c, d in dist.items() if c not in visited]
        if not frontier:
            return None
        d, cell = min(frontier, key=lambda item: (item[0], item[1]))
        if cell == goal:
            return d
        visited.add(cell)
        x, y = cell
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                if dx == 0 and dy == 0:
                    continue
                nxt = (x + dx, y + dy)
                if not grid.in_bounds(nxt) or grid.is_occupied(nxt):
                    continue
                step = SQRT2 if dx != 0 and dy != 0 else 1.0
                if d + step < dist.get(nxt, math.inf):
                    dist[nxt] = d + step


def random_grid(rng: random.Random, size=15, occupancy=0.2) -> OccupancyGrid:
    occ = np.zeros((size, size), dtype=bool)
    for iy in range(size):
        for ix in range(size):
            occ[iy, ix] = rng.random() < occupancy
    occ[0, 0] = False
    return OccupancyGrid(resolution=1.0, width=size, height=size, occupied=occ)


class TestAstar:
    def test_start_equals_goal(self):
        grid = OccupancyGrid(resolution=1.0, width=5, height=5)
        assert astar_plan(grid, (2, 2), (2, 2)) == [(2, 2)]

    def test_empty_grid_diagonal_cost(self):
        grid = OccupancyGrid(resolution=1.0, width=10, height=10)
        path = astar_plan(grid, (0, 0), (3, 4))
        # 8-connected optimum: max + (sqrt2 - 1) * min
        assert path_cost(path) == pytest.approx(4 + (SQRT2 - 1) * 3)

    def test_walled_goal_unreachable(self):
        grid = OccupancyGrid(resolution=1.0, width=10, height=10)
        for ix in range(10):
            grid.occupied[5, ix] = True
        assert astar_plan(grid, (0, 0), (9, 9)) is None

    def test_out_of_bounds(self):
        grid = OccupancyGrid(resolution=1.0, width=5, height=5)
        with pytest.raises(OutOfBounds):
            astar_plan(grid, (0, 0), (5, 0))

    def test_start_occupied(self):
        grid = OccupancyGrid(resolution=1.0, width=5, height=5)
        grid.occupied[0, 0] = True
        with pytest.raises(StartOccupied):
            astar_plan(grid, (0, 0), (4, 4))

    def test_path_avoids_occupied_cells(self):
        rng = random.Random(11)
        for _ in range(40):
            grid = random_grid(rng)
            path = astar_plan(grid, (0, 0), (14, 14))
            if path is not None:
                assert not any(grid.is_occupied(c) for c in path)

    def test_matches_dijkstra_oracle(self):
        rng = random.Random(1234)
        for _ in range(60):
            grid = random_grid(rng)
            path = astar_plan(grid, (0, 0), (14, 14))
            oracle = dijkstra_cost(grid, (0, 0), (14, 14))
            if oracle is None:
                assert path is None
            else:
                assert path is not None
                assert path_cost(path) == pytest.approx(oracle, abs=1e-9)

    def test_deterministic(self):
        rng = random.Random(5)
        grid = random_grid(rng)
        a = astar_plan(grid, (0, 0), (14, 14))
        b = astar_plan(grid, (0, 0), (14, 14))
        assert a == b


class TestSmoothing:
    def test_single_cell(self):
        grid = OccupancyGrid(resolution=0.5, width=5, height=5)
        t = smooth_to_trajectory([(2, 2)], grid, samples=5)
        assert t.waypoints == ((1.25, 1.25),)

    def test_straight_path_three_samples(self):
        grid = OccupancyGrid(resolution=0.5, width=8, height=8)
        path = [(0, 0), (0, 1), (0, 2), (0, 3), (0, 4)]
        t = smooth_to_trajectory(path, grid, samples=3)
        xs = [p[0] for p in t.waypoints]
        ys = [p[1] for p in t.waypoints]
        assert xs == [0.25, 0.25, 0.25]
        assert ys == pytest.approx([0.25, 1.25, 2.25])

    def test_l_shape_preserves_length(self):
        grid = OccupancyGrid(resolution=0.5, width=10, height=10)
        path = [(0, 0), (0, 1), (0, 2), (1, 2), (2, 2)]
        t = smooth_to_trajectory(path, grid, samples=9)
        total = sum(
            math.hypot(x1 - x0, y1 - y0)
            for (x0, y0), (x1, y1) in zip(t.waypoints, t.waypoints[1:])
        )
        assert total == pytest.approx(2.0, abs=grid.resolution / 2)


class TestPrimitives:
    def test_stop_from_rest(self):
        spec = primitive_goal(PlanLabel.STOP, VehicleState(0, 0, 0, 0.0))
        assert spec.goal_offset == (0.0, 3.0)
        assert spec.target_speed == 0.0

    def test_stop_scales_with_speed(self):
        spec = primitive_goal(PlanLabel.STOP, VehicleState(0, 0, 0, 8.0))
        assert spec.goal_offset == (0.0, 16.0)

    def test_lane_change_left_offset(self):
        spec = primitive_goal(
            PlanLabel.LANE_CHANGE_LEFT, VehicleState(0, 0, 0, 8.0), PrimitiveCatalog(lane_width=3.5)
        )
        assert spec.goal_offset == (-3.5, 15.0)

    def test_drive_forward_distance(self):
        spec = primitive_goal(PlanLabel.DRIVE_FORWARD, VehicleState(0, 0, 0, 8.0))
        assert spec.goal_offset == (0.0, 20.0)
        assert spec.target_speed == 8.0

    def test_pure_function(self):
        ego = VehicleState(3, 4, 0.2, 6.0)
        a = primitive_goal(PlanLabel.TURN_LEFT, ego)
        b = primitive_goal(PlanLabel.TURN_LEFT, ego)
        assert a == b
        assert a.goal_offset == (-8.0, 8.0)
        assert a.target_speed == 5.0


class TestPid:
    def test_on_path_at_speed_all_zero(self):
        from sasim.abstraction import Trajectory

        ref = Trajectory.from_points([(0, 0), (0, 5), (0, 10)])
        ego = VehicleState(0, 0, math.pi / 2, 8.0)  # facing +y in world
        cmd = pid_control(ref, 8.0, ego, dt=0.05)
        assert cmd.steering == pytest.approx(0.0, abs=1e-9)
        assert cmd.throttle == 0.0
        assert cmd.brake == 0.0

    def test_left_offset_steers_right(self):
        tracker = TrajectoryTracker()
        ref = [(x, 0.0) for x in range(0, 60, 2)]  # straight along +x
        # path direction +x; left of path is +y
        ego = VehicleState(10.0, 1.0, 0.0, 8.0)
        cmd = tracker.control(ref, 8.0, ego, dt=0.05)
        assert cmd.steering > 0.0

    def test_overspeed_brakes(self):
        tracker = TrajectoryTracker()
        ref = [(x, 0.0) for x in range(0, 60, 2)]
        ego = VehicleState(0.0, 0.0, 0.0, 13.0)
        cmd = tracker.control(ref, 8.0, ego, dt=0.05)
        assert cmd.brake > 0.0
        assert cmd.throttle == 0.0

    def test_gain_validation(self):
        with pytest.raises(ValueError):
            PidGains(kp=-1, ki=0, kd=0, integral_clamp=1)
        with pytest.raises(ValueError):
            PidGains(kp=1, ki=0, kd=0, integral_clamp=0)


def _track_straight(start_offset: float, start_speed: float, seconds: float, dt=0.05):
    """Closed-loop tracking of a straight +x road; returns (offsets, speeds)."""
    tracker = TrajectoryTracker(LATERAL_GAINS, LONGITUDINAL_GAINS)
    ref = [(float(x), 0.0) for x in range(0, 400, 2)]
    ego = VehicleState(0.0, start_offset, 0.0, start_speed)
    offsets, speeds = [], []
    for _ in range(int(seconds / dt)):
        cmd = tracker.control(ref, 8.0, ego, dt)
        ego = integrate_vehicle(ego, cmd, dt)
        offsets.append(abs(ego.y))
        speeds.append(ego.speed)
    return offsets, speeds


def test_lateral_convergence_from_two_meters():
    offsets, _ = _track_straight(start_offset=2.0, start_speed=8.0, seconds=8.0)
    assert offsets[-1] < 0.2
    assert min(i for i, v in enumerate(offsets) if v < 0.2) * 0.05 <= 8.0


def test_speed_tracking_from_rest():
    _, speeds = _track_straight(start_offset=0.0, start_speed=0.0, seconds=6.0)
    assert abs(speeds[-1] - 8.0) <= 0.3
