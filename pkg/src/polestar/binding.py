"""Bind arbitrary coordinates to boardable stations via a precomputed cache.

Offline: every station is projected to its nearest road segment, then one
road-network Dijkstra per station (on the reversed road graph, cut off at
``lambda_m``) records the exact distance from each reachable intersection to
that station.  Online: the query point enters the road network through its
projected segment (or a nearby POI's stored projection) and combines the
walk leg, the along-segment leg and the cached intersection-to-station
distances.  Within ``lambda_m`` the cached distance equals the exact
road-network distance.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .binio import read_artifact, write_artifact
from .config import BindConfig
from .errors import UnprojectableStation
from .geo import GeoPoint, GridIndex, LocalProjection, project_point_to_segment
from .kernels import csr_dijkstra
from .model import Poi, RoadNetwork

log = logging.getLogger(__name__)

CACHE_MAGIC = b"SBC1"
CACHE_VERSION = 1

NO_STATION_IN_RANGE = "no_station_in_range"
BOUND_OK = "ok"


@dataclass(frozen=True)
class StationProjection:
    segment_idx: int
    offset_m: float  # along the segment from its `from` endpoint
    walk_m: float  # perpendicular walk from the station to the segment


@dataclass(frozen=True)
class BoundStation:
    station_id: str
    total_distance_m: float
    entry_segment: int  # segment the query point entered the road network on
    via: str  # intersection id used, or "same-segment"
    walk_to_segment_m: float


@dataclass
class StationCache:
    lambda_m: float
    cell_size_m: float
    road: RoadNetwork
    station_ids: list[str]
    projections: dict[int, StationProjection]  # station index -> projection
    per_intersection: dict[int, list[tuple[int, float]]]  # u index -> [(station idx, d(u,p))]
    unprojectable: int = 0
    # derived indexes, rebuilt on load
    intersection_pos: dict[str, int] = field(default_factory=dict)
    grid: GridIndex | None = None  # intersections
    segment_grid: GridIndex | None = None
    poi_grid: GridIndex | None = None
    pois: tuple[Poi, ...] = ()
    poi_offsets: dict[int, float] = field(default_factory=dict)  # poi idx -> along-segment offset
    stations_on_segment: dict[int, list[int]] = field(default_factory=dict)
    segment_pos: dict[str, int] = field(default_factory=dict)

    def rebuild_indexes(self, pois: tuple[Poi, ...] = ()) -> None:
        pts = [u.location for u in self.road.intersections]
        origin = GeoPoint(min(p.lat for p in pts), min(p.lon for p in pts)) if pts else GeoPoint(0, 0)
        self.intersection_pos = {u.id: i for i, u in enumerate(self.road.intersections)}
        self.grid = GridIndex(origin, self.cell_size_m)
        for i, u in enumerate(self.road.intersections):
            self.grid.add(i, u.location)
        self.segment_grid = GridIndex(origin, self.cell_size_m)
        proj = self.segment_grid.proj
        for si, seg in enumerate(self.road.segments):
            a = self.road.intersections[self.intersection_pos[seg.from_id]].location
            b = self.road.intersections[self.intersection_pos[seg.to_id]].location
            step = max(1, math.ceil(proj.distance_m(a, b) / (self.cell_size_m / 2.0)))
            seen = set()
            for t in range(step + 1):
                f = t / step
                cell = self.segment_grid.cell_of(GeoPoint(a.lat + f * (b.lat - a.lat), a.lon + f * (b.lon - a.lon)))
                if cell not in seen:
                    seen.add(cell)
                    self.segment_grid.cells.setdefault(cell, []).append(si)
        self.pois = tuple(pois)
        self.poi_grid = GridIndex(origin, self.cell_size_m)
        self.segment_pos = segment_pos = {s.id: i for i, s in enumerate(self.road.segments)}
        self.poi_offsets = {}
        for pi, poi in enumerate(self.pois):
            self.poi_grid.add(pi, poi.location)
            si = segment_pos.get(poi.projected_segment)
            if si is not None:
                seg = self.road.segments[si]
                a = self.road.intersections[self.intersection_pos[seg.from_id]].location
                b = self.road.intersections[self.intersection_pos[seg.to_id]].location
                _, offset = project_point_to_segment(proj, poi.location, a, b)
                self.poi_offsets[pi] = offset * _scale(seg, proj, a, b)
        self.stations_on_segment = {}
        for st_idx, sp in self.projections.items():
            self.stations_on_segment.setdefault(sp.segment_idx, []).append(st_idx)


def _scale(seg, proj, a, b) -> float:
    """Planar offset -> declared segment length scale (lengths may disagree)."""
    planar = proj.distance_m(a, b)
    return seg.length_m / planar if planar > 0 else 0.0


def _road_csr(road: RoadNetwork, pos: dict[str, int], reverse: bool):
    src, dst, w = [], [], []
    for seg in road.segments:
        a, b = pos[seg.from_id], pos[seg.to_id]
        pairs = [(a, b)]
        if seg.bidirectional:
            pairs.append((b, a))
        for u, v in pairs:
            if reverse:
                u, v = v, u
            src.append(u)
            dst.append(v)
            w.append(seg.length_m)
    src = np.array(src, dtype=np.int64)
    order = np.argsort(src, kind="stable")
    indptr = np.zeros(len(road.intersections) + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    np.cumsum(indptr, out=indptr)
    return indptr, np.array(dst, dtype=np.int32)[order], np.array(w, dtype=np.float64)[order]


def _project_station(location: GeoPoint, cache: StationCache, radius_m: float) -> StationProjection | None:
    proj = cache.segment_grid.proj
    best = None
    for si in set(cache.segment_grid.members_near(location, radius_m)):
        seg = cache.road.segments[si]
        a = cache.road.intersections[cache.intersection_pos[seg.from_id]].location
        b = cache.road.intersections[cache.intersection_pos[seg.to_id]].location
        walk, offset = project_point_to_segment(proj, location, a, b)
        if walk <= radius_m and (best is None or walk < best.walk_m or (walk == best.walk_m and si < best.segment_idx)):
            best = StationProjection(segment_idx=si, offset_m=offset * _scale(seg, proj, a, b), walk_m=walk)
    return best


def build_station_cache(
    road: RoadNetwork,
    stations,
    pois: tuple[Poi, ...] = (),
    lambda_m: float = 1500.0,
    cell_size_m: float = 500.0,
    projection_radius_m: float = 200.0,
) -> StationCache:
    if lambda_m <= 0:
        raise ValueError("lambda_m must be positive")
    station_list = list(stations.values()) if isinstance(stations, dict) else list(stations)
    cache = StationCache(
        lambda_m=lambda_m,
        cell_size_m=cell_size_m,
        road=road,
        station_ids=[s.id for s in station_list],
        projections={},
        per_intersection={},
    )
    cache.rebuild_indexes(pois)

    unprojectable = 0
    for idx, st in enumerate(station_list):
        sp = _project_station(st.location, cache, projection_radius_m)
        if sp is None:
            unprojectable += 1
            continue
        cache.projections[idx] = sp
    if unprojectable:
        log.warning("station cache: %d stations had no segment within %.0f m", unprojectable, projection_radius_m)
    cache.unprojectable = unprojectable

    indptr, indices, weights = _road_csr(road, cache.intersection_pos, reverse=True)
    for idx, sp in cache.projections.items():
        seg = road.segments[sp.segment_idx]
        a, b = cache.intersection_pos[seg.from_id], cache.intersection_pos[seg.to_id]
        srcs = np.array([a, b], dtype=np.int64)
        costs = np.array(
            [sp.offset_m + sp.walk_m, (seg.length_m - sp.offset_m) + sp.walk_m], dtype=np.float64
        )
        dist, _, _ = csr_dijkstra(indptr, indices, weights, srcs, costs, cutoff=lambda_m)
        for u in np.flatnonzero(np.isfinite(dist)):
            d = float(dist[u])
            if d < lambda_m:
                cache.per_intersection.setdefault(int(u), []).append((idx, d))
    for u in cache.per_intersection:
        cache.per_intersection[u].sort()
    cache.rebuild_indexes(pois)
    return cache


def _entry_projections(location: GeoPoint, cache: StationCache, cfg: BindConfig):
    """Candidate (segment, offset, walk) entries for a query point."""
    proj = cache.segment_grid.proj
    entries = []
    # POI snap: adopt the nearest indexed POI's stored projection when close.
    best_poi, best_d = None, cfg.poi_snap_m
    for pi in cache.poi_grid.members_near(location, cfg.poi_snap_m):
        d = proj.distance_m(location, cache.pois[pi].location)
        if d <= best_d and pi in cache.poi_offsets:
            best_poi, best_d = pi, d
    if best_poi is not None:
        poi = cache.pois[best_poi]
        si = cache.segment_pos[poi.projected_segment]
        entries.append((si, cache.poi_offsets[best_poi], best_d + poi.walk_to_segment_m))
        return entries

    radius = cache.cell_size_m
    seen: set[int] = set()
    candidates: list[tuple[float, int, float]] = []
    while radius <= 8 * cache.cell_size_m and not candidates:
        for si in set(cache.segment_grid.members_near(location, radius)):
            if si in seen:
                continue
            seen.add(si)
            seg = cache.road.segments[si]
            a = cache.road.intersections[cache.intersection_pos[seg.from_id]].location
            b = cache.road.intersections[cache.intersection_pos[seg.to_id]].location
            walk, offset = project_point_to_segment(proj, location, a, b)
            candidates.append((walk, si, offset * _scale(seg, proj, a, b)))
        radius *= 2
    candidates.sort()
    for walk, si, offset in candidates[: cfg.candidate_segments]:
        entries.append((si, offset, walk))
    return entries


def bind(
    location: GeoPoint, cache: StationCache, road: RoadNetwork | None = None, k: int = 3, cfg: BindConfig | None = None
) -> tuple[list[BoundStation], str]:
    """Top-k stations by total road-network distance, ascending; ties by id.

    ``road`` is accepted for interface symmetry but the cache already holds
    the network it was built from.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    cfg = cfg or BindConfig()
    best: dict[int, BoundStation] = {}

    def consider(st_idx: int, total: float, seg_idx: int, via: str, walk: float):
        sid = cache.station_ids[st_idx]
        cur = best.get(st_idx)
        if cur is None or total < cur.total_distance_m:
            best[st_idx] = BoundStation(sid, total, seg_idx, via, walk)

    for seg_idx, offset, walk in _entry_projections(location, cache, cfg):
        seg = cache.road.segments[seg_idx]
        # same-segment shortcut: both the query and the station project here
        for st_idx in cache.stations_on_segment.get(seg_idx, ()):
            sp = cache.projections[st_idx]
            consider(st_idx, walk + abs(offset - sp.offset_m) + sp.walk_m, seg_idx, "same-segment", walk)
        for u_id, along in ((seg.from_id, offset), (seg.to_id, seg.length_m - offset)):
            u = cache.intersection_pos[u_id]
            for st_idx, cached_d in cache.per_intersection.get(u, ()):
                consider(st_idx, walk + along + cached_d, seg_idx, u_id, walk)

    ranked = sorted(best.values(), key=lambda b: (b.total_distance_m, b.station_id))[:k]
    return ranked, (BOUND_OK if ranked else NO_STATION_IN_RANGE)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def save_station_cache(cache: StationCache, path: str) -> None:
    triplets_u, triplets_s, triplets_d = [], [], []
    for u, pairs in sorted(cache.per_intersection.items()):
        for st_idx, d in pairs:
            triplets_u.append(u)
            triplets_s.append(st_idx)
            triplets_d.append(d)
    proj_idx = sorted(cache.projections)
    header = {
        "lambda_m": cache.lambda_m,
        "cell_size_m": cache.cell_size_m,
        "station_ids": cache.station_ids,
        "unprojectable": cache.unprojectable,
        "pois": [
            {
                "id": p.id,
                "lat": p.location.lat,
                "lon": p.location.lon,
                "primary_category": p.primary_category,
                "secondary_category": p.secondary_category,
                "projected_segment": p.projected_segment,
                "walk_to_segment_m": p.walk_to_segment_m,
            }
            for p in cache.pois
        ],
    }
    arrays = {
        "cache_u": np.array(triplets_u, dtype=np.int64),
        "cache_station": np.array(triplets_s, dtype=np.int64),
        "cache_dist": np.array(triplets_d, dtype=np.float64),
        "proj_station": np.array(proj_idx, dtype=np.int64),
        "proj_segment": np.array([cache.projections[i].segment_idx for i in proj_idx], dtype=np.int64),
        "proj_offset": np.array([cache.projections[i].offset_m for i in proj_idx], dtype=np.float64),
        "proj_walk": np.array([cache.projections[i].walk_m for i in proj_idx], dtype=np.float64),
    }
    write_artifact(path, CACHE_MAGIC, CACHE_VERSION, header, arrays)


def load_station_cache(path: str, road: RoadNetwork) -> StationCache:
    header, arrays = read_artifact(path, CACHE_MAGIC, CACHE_VERSION)
    projections = {
        int(s): StationProjection(int(seg), float(off), float(walk))
        for s, seg, off, walk in zip(
            arrays["proj_station"], arrays["proj_segment"], arrays["proj_offset"], arrays["proj_walk"]
        )
    }
    per_intersection: dict[int, list[tuple[int, float]]] = {}
    for u, s, d in zip(arrays["cache_u"], arrays["cache_station"], arrays["cache_dist"]):
        per_intersection.setdefault(int(u), []).append((int(s), float(d)))
    pois = tuple(
        Poi(
            id=p["id"],
            location=GeoPoint(p["lat"], p["lon"]),
            primary_category=p["primary_category"],
            secondary_category=p["secondary_category"],
            projected_segment=p["projected_segment"],
            walk_to_segment_m=p["walk_to_segment_m"],
        )
        for p in header["pois"]
    )
    cache = StationCache(
        lambda_m=header["lambda_m"],
        cell_size_m=header["cell_size_m"],
        road=road,
        station_ids=list(header["station_ids"]),
        projections=projections,
        per_intersection=per_intersection,
        unprojectable=int(header["unprojectable"]),
    )
    cache.rebuild_indexes(pois)
    return cache
