"""Polyline utilities shared by the route tracker, scripted policy, and lanes.

Lateral offsets are signed positive to the RIGHT of the direction of travel,
matching the ego-frame convention used by the abstraction layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class Projection:
    s: float  # arc length along the polyline
    lateral: float  # signed offset, positive right of travel direction
    heading: float  # tangent heading of the matched segment
    segment: int


class Polyline:
    def __init__(self, points):
        pts = [(float(x), float(y)) for x, y in points]
        if len(pts) < 2:
            raise ValueError("polyline needs at least 2 points")
        self.points = pts
        self._arc = [0.0]
        self._headings = []
        for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
            seg = math.hypot(x1 - x0, y1 - y0)
            if seg <= 0:
                raise ValueError("polyline has a zero-length segment")
            self._arc.append(self._arc[-1] + seg)
            self._headings.append(math.atan2(y1 - y0, x1 - x0))

    @property
    def length(self) -> float:
        return self._arc[-1]

    def project(self, x: float, y: float) -> Projection:
        """Closest-point projection with signed lateral offset."""
        best: Projection | None = None
        best_dist = math.inf
        for i, ((x0, y0), (x1, y1)) in enumerate(zip(self.points, self.points[1:])):
            dx, dy = x1 - x0, y1 - y0
            seg_len_sq = dx * dx + dy * dy
            t = ((x - x0) * dx + (y - y0) * dy) / seg_len_sq
            t = min(1.0, max(0.0, t))
            px, py = x0 + t * dx, y0 + t * dy
            ox, oy = x - px, y - py
            dist = math.hypot(ox, oy)
            if dist < best_dist:
                heading = self._headings[i]
                lateral = ox * math.sin(heading) - oy * math.cos(heading)
                best = Projection(
                    s=self._arc[i] + t * math.sqrt(seg_len_sq),
                    lateral=lateral,
                    heading=heading,
                    segment=i,
                )
                best_dist = dist
        assert best is not None
        return best

    def point_at(self, s: float) -> tuple[float, float, float]:
        """(x, y, heading) at arc length s; extrapolates beyond both ends."""
        if s <= 0.0:
            heading = self._headings[0]
            x0, y0 = self.points[0]
            return (x0 + s * math.cos(heading), y0 + s * math.sin(heading), heading)
        if s >= self.length:
            heading = self._headings[-1]
            x1, y1 = self.points[-1]
            extra = s - self.length
            return (x1 + extra * math.cos(heading), y1 + extra * math.sin(heading), heading)
        # binary search over cumulative arc lengths
        lo, hi = 0, len(self._arc) - 1
        while lo + 1 < hi:
            mid = (lo + hi) // 2
            if self._arc[mid] <= s:
                lo = mid
            else:
                hi = mid
        heading = self._headings[lo]
        t = (s - self._arc[lo]) / (self._arc[lo + 1] - self._arc[lo])
        x0, y0 = self.points[lo]
        x1, y1 = self.points[lo + 1]
        return (x0 + t * (x1 - x0), y0 + t * (y1 - y0), heading)

    def offset_point(self, s: float, lateral: float) -> tuple[float, float]:
        """Point at arc length s displaced laterally (positive = right)."""
        x, y, heading = self.point_at(s)
        return (x + lateral * math.sin(heading), y - lateral * math.cos(heading))
