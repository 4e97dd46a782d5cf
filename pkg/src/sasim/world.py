"""2D world primitives: vehicle kinematics, frames, and collision tests.

World frame is standard Cartesian (heading measured counterclockwise from +x).
The ego frame used everywhere else has x positive to the RIGHT of the vehicle
and y positive forward, so a positive steering command turns the vehicle
clockwise (rightward).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

# Fixed actuation map: commands are fractions, accelerations in m/s^2.
ACCEL_MAX = 3.0
BRAKE_DECEL_MAX = 6.0
MAX_WHEEL_ANGLE = 0.5  # rad at full steering command


@dataclass(frozen=True)
class ControlCommand:
    steering: float = 0.0  # [-1, 1], positive steers right
    throttle: float = 0.0  # [0, 1]
    brake: float = 0.0  # [0, 1]

    def clamped(self) -> "ControlCommand":
        return ControlCommand(
            steering=min(1.0, max(-1.0, self.steering)),
            throttle=min(1.0, max(0.0, self.throttle)),
            brake=min(1.0, max(0.0, self.brake)),
        )


@dataclass(frozen=True)
class VehicleState:
    """Pose and motion of one vehicle plus its footprint geometry."""

    x: float
    y: float
    heading: float
    speed: float
    wheelbase: float = 2.8
    half_length: float = 2.25
    half_width: float = 0.9

    def __post_init__(self):
        if self.speed < 0:
            raise ValueError("speed must be non-negative (no reverse gear)")
        for v in (self.x, self.y, self.heading, self.speed):
            if not math.isfinite(v):
                raise ValueError("vehicle state must be finite")


def integrate_vehicle(state: VehicleState, cmd: ControlCommand, dt: float) -> VehicleState:
    """One explicit-Euler step of the kinematic bicycle model.

    Acceleration comes from the fixed throttle/brake map; speed clamps at zero.
    Positive steering decreases heading (clockwise turn = rightward).
    """
    cmd = cmd.clamped()
    accel = cmd.throttle * ACCEL_MAX - cmd.brake * BRAKE_DECEL_MAX
    wheel = cmd.steering * MAX_WHEEL_ANGLE
    x = state.x + state.speed * math.cos(state.heading) * dt
    y = state.y + state.speed * math.sin(state.heading) * dt
    heading = state.heading - (state.speed / state.wheelbase) * math.tan(wheel) * dt
    speed = max(0.0, state.speed + accel * dt)
    return replace(state, x=x, y=y, heading=heading, speed=speed)


def world_to_ego(state: VehicleState, px: float, py: float) -> tuple[float, float]:
    """World point -> (lateral right+, longitudinal forward+) in the ego frame."""
    dx = px - state.x
    dy = py - state.y
    cos_h = math.cos(state.heading)
    sin_h = math.sin(state.heading)
    return (dx * sin_h - dy * cos_h, dx * cos_h + dy * sin_h)


def ego_to_world(state: VehicleState, ex: float, ey: float) -> tuple[float, float]:
    cos_h = math.cos(state.heading)
    sin_h = math.sin(state.heading)
    return (state.x + ex * sin_h + ey * cos_h, state.y - ex * cos_h + ey * sin_h)


@dataclass(frozen=True)
class Obb:
    """Oriented bounding box in world coordinates."""

    cx: float
    cy: float
    heading: float
    half_length: float
    half_width: float

    @classmethod
    def of_vehicle(cls, v: VehicleState) -> "Obb":
        return cls(v.x, v.y, v.heading, v.half_length, v.half_width)

    def axes(self) -> tuple[tuple[float, float], tuple[float, float]]:
        c, s = math.cos(self.heading), math.sin(self.heading)
        return ((c, s), (-s, c))


def obb_penetration(a: Obb, b: Obb) -> float | None:
    """Separating-axis overlap test for two oriented boxes.

    Returns the penetration depth (smallest overlap across the four candidate
    axes) when the boxes strictly overlap, or None when separated or merely
    touching. Symmetric in its arguments.
    """
    tx = b.cx - a.cx
    ty = b.cy - a.cy
    min_overlap = math.inf
    for box in (a, b):
        (ax1, ay1), (ax2, ay2) = box.axes()
        for axis_x, axis_y, _ in ((ax1, ay1, 0), (ax2, ay2, 1)):
            ra = _projected_radius(a, axis_x, axis_y)
            rb = _projected_radius(b, axis_x, axis_y)
            dist = abs(tx * axis_x + ty * axis_y)
            overlap = ra + rb - dist
            if overlap <= 0.0:
                return None
            min_overlap = min(min_overlap, overlap)
    return min_overlap


def _projected_radius(box: Obb, axis_x: float, axis_y: float) -> float:
    (lx, ly), (wx, wy) = box.axes()
    return box.half_length * abs(lx * axis_x + ly * axis_y) + box.half_width * abs(
        wx * axis_x + wy * axis_y
    )
