"""Geographic primitives: coordinates, distances, projections and the grid index."""

from __future__ import annotations

import math
from dataclasses import dataclass

EARTH_RADIUS_M = 6_371_000.0
_DEG = math.pi / 180.0


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not (-90.0 <= self.lat <= 90.0):
            raise ValueError(f"latitude out of range: {self.lat}")
        if not (-180.0 <= self.lon <= 180.0):
            raise ValueError(f"longitude out of range: {self.lon}")


def haversine_m(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters."""
    dlat = (b.lat - a.lat) * _DEG
    dlon = (b.lon - a.lon) * _DEG
    s = math.sin(dlat / 2.0) ** 2 + math.cos(a.lat * _DEG) * math.cos(b.lat * _DEG) * math.sin(dlon / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(s)))


def polyline_length_m(points: list[GeoPoint]) -> float:
    return sum(haversine_m(points[i], points[i + 1]) for i in range(len(points) - 1))


class LocalProjection:
    """Equirectangular projection to meters around a reference point.

    Adequate at city scale; all planar geometry (segment projection, grid
    bucketing) goes through one shared projection so results are consistent.
    """

    def __init__(self, origin: GeoPoint):
        self.origin = origin
        self._kx = EARTH_RADIUS_M * _DEG * math.cos(origin.lat * _DEG)
        self._ky = EARTH_RADIUS_M * _DEG

    def to_xy(self, p: GeoPoint) -> tuple[float, float]:
        return ((p.lon - self.origin.lon) * self._kx, (p.lat - self.origin.lat) * self._ky)

    def distance_m(self, a: GeoPoint, b: GeoPoint) -> float:
        ax, ay = self.to_xy(a)
        bx, by = self.to_xy(b)
        return math.hypot(ax - bx, ay - by)


def project_point_to_segment(
    proj: LocalProjection, p: GeoPoint, a: GeoPoint, b: GeoPoint
) -> tuple[float, float]:
    """Project ``p`` onto segment ``a``-``b``.

    Returns ``(perpendicular_distance_m, offset_m)`` where offset is measured
    along the segment from ``a`` and clamped to the segment extent.
    """
    px, py = proj.to_xy(p)
    ax, ay = proj.to_xy(a)
    bx, by = proj.to_xy(b)
    dx, dy = bx - ax, by - ay
    seg_len2 = dx * dx + dy * dy
    if seg_len2 <= 0.0:
        return math.hypot(px - ax, py - ay), 0.0
    t = ((px - ax) * dx + (py - ay) * dy) / seg_len2
    t = min(1.0, max(0.0, t))
    cx, cy = ax + t * dx, ay + t * dy
    return math.hypot(px - cx, py - cy), t * math.sqrt(seg_len2)


class GridIndex:
    """Uniform grid over a bounding box; maps each point to exactly one cell."""

    def __init__(self, origin: GeoPoint, cell_size_m: float):
        if cell_size_m <= 0:
            raise ValueError("cell_size_m must be positive")
        self.origin = origin
        self.cell_size_m = cell_size_m
        self.proj = LocalProjection(origin)
        self.cells: dict[tuple[int, int], list] = {}

    def cell_of(self, p: GeoPoint) -> tuple[int, int]:
        x, y = self.proj.to_xy(p)
        return (math.floor(y / self.cell_size_m), math.floor(x / self.cell_size_m))

    def add(self, member, p: GeoPoint) -> tuple[int, int]:
        cell = self.cell_of(p)
        self.cells.setdefault(cell, []).append(member)
        return cell

    def members_near(self, p: GeoPoint, radius_m: float) -> list:
        """Members of every cell intersecting the radius around ``p``."""
        r_cells = max(0, math.ceil(radius_m / self.cell_size_m))
        row, col = self.cell_of(p)
        out = []
        for dr in range(-r_cells, r_cells + 1):
            for dc in range(-r_cells, r_cells + 1):
                out.extend(self.cells.get((row + dr, col + dc), ()))
        return out
