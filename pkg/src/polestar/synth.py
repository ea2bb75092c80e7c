"""Deterministic synthetic city and query-log generation for tests and
benchmarks.

Cities are grid towns: a square road lattice, stations jittered next to
intersections, transit lines running along rows and columns so that crossing
lines share transfer stations.  Everything derives from a seeded generator;
the same seed always produces byte-identical datasets.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from .geo import GeoPoint, haversine_m
from .model import (
    FEEDBACK_KINDS,
    WEATHER_CATEGORIES,
    CityDataset,
    Feedback,
    PhysicalStation,
    Poi,
    PresentedRoute,
    QueryLogEntry,
    RoadIntersection,
    RoadNetwork,
    RoadSegment,
    TransportLine,
    TransportMode,
    WeatherRecord,
)

log = logging.getLogger(__name__)

BASE_LAT = 39.90
BASE_LON = 116.40
BASE_TS = 1772409600  # 2026-03-02 00:00:00 UTC, a Monday

POI_CATEGORIES = (
    ("food", "restaurant"),
    ("food", "cafe"),
    ("shopping", "mall"),
    ("shopping", "market"),
    ("office", "tower"),
    ("education", "school"),
    ("health", "hospital"),
    ("leisure", "park"),
)


def _grid_point(row: int, col: int, spacing_m: float) -> GeoPoint:
    lat = BASE_LAT + (row * spacing_m) / 111320.0
    lon = BASE_LON + (col * spacing_m) / (111320.0 * math.cos(math.radians(BASE_LAT)))
    return GeoPoint(lat, lon)


def _offset(p: GeoPoint, north_m: float, east_m: float) -> GeoPoint:
    return GeoPoint(
        p.lat + north_m / 111320.0,
        p.lon + east_m / (111320.0 * math.cos(math.radians(BASE_LAT))),
    )


def synth_city(
    name: str = "gridville",
    n_stations: int = 36,
    n_lines: int = 8,
    seed: int = 0,
    spacing_m: float = 500.0,
    n_pois: int | None = None,
    weather_days: int = 7,
) -> CityDataset:
    rng = np.random.default_rng(seed)
    side = max(2, math.ceil(math.sqrt(n_stations)))

    intersections = []
    for r in range(side):
        for c in range(side):
            intersections.append(RoadIntersection(id=f"x{r}_{c}", location=_grid_point(r, c, spacing_m)))
    by_id = {u.id: u for u in intersections}

    segments = []
    for r in range(side):
        for c in range(side):
            if c + 1 < side:
                a, b = by_id[f"x{r}_{c}"], by_id[f"x{r}_{c + 1}"]
                segments.append(
                    RoadSegment(
                        id=f"e{r}_{c}", from_id=a.id, to_id=b.id,
                        length_m=haversine_m(a.location, b.location), bidirectional=True,
                        congestion=float(rng.uniform(0.0, 0.8)),
                    )
                )
            if r + 1 < side:
                a, b = by_id[f"x{r}_{c}"], by_id[f"x{r + 1}_{c}"]
                segments.append(
                    RoadSegment(
                        id=f"n{r}_{c}", from_id=a.id, to_id=b.id,
                        length_m=haversine_m(a.location, b.location), bidirectional=True,
                        congestion=float(rng.uniform(0.0, 0.8)),
                    )
                )
    road = RoadNetwork(intersections=tuple(intersections), segments=tuple(segments))

    # stations jittered a few meters off their intersection so projection is
    # non-trivial but always within radius
    stations: dict[str, PhysicalStation] = {}
    cells = [(r, c) for r in range(side) for c in range(side)]
    for i, (r, c) in enumerate(cells[:n_stations]):
        loc = _offset(_grid_point(r, c, spacing_m), float(rng.uniform(-15, 15)), float(rng.uniform(-15, 15)))
        sid = f"s{r}_{c}"
        stations[sid] = PhysicalStation(id=sid, location=loc, name=f"Station {r}-{c}", city=name)

    station_rows: dict[int, list[str]] = {}
    station_cols: dict[int, list[str]] = {}
    for sid in stations:
        r, c = (int(v) for v in sid[1:].split("_"))
        station_rows.setdefault(r, []).append(sid)
        station_cols.setdefault(c, []).append(sid)
    for members in station_rows.values():
        members.sort(key=lambda s: int(s.split("_")[1]))
    for members in station_cols.values():
        members.sort(key=lambda s: int(s[1:].split("_")[0]))

    lines: dict[str, TransportLine] = {}
    lanes = [("row", r) for r in sorted(station_rows)] + [("col", c) for c in sorted(station_cols)]

    def add_line(stops, mode: TransportMode, speed: float, fare: float, headway: float) -> str | None:
        if len(stops) < 3:
            return None
        lid = f"L{len(lines):03d}"
        lines[lid] = TransportLine(
            id=lid,
            mode=mode,
            stops=tuple(stops),
            headway_s=float(headway),
            speed_mps=float(speed),
            fare=float(np.round(fare, 2)),
            service_window=(0, 1440) if rng.random() < 0.85 else (300, 1410),
        )
        return lid

    # backbone: per row/column a stop-everywhere local bus plus a faster,
    # pricier express that skips every other stop.  Locals come first so the
    # lower line number marks the older, cheaper service.
    for kind, idx in lanes:
        if len(lines) >= n_lines:
            break
        corridor = station_rows[idx] if kind == "row" else station_cols[idx]
        if rng.random() < 0.5:
            corridor = corridor[::-1]
        local_speed = float(rng.uniform(5.5, 7.5))
        local_fare = 2.0 + float(rng.uniform(0.0, 0.9))
        add_line(corridor, TransportMode.BUS, local_speed, local_fare, rng.integers(400, 901))
        if len(lines) < n_lines:
            add_line(
                corridor[::2] if len(corridor) % 2 else list(corridor[::2]) + [corridor[-1]],
                TransportMode.BUS,
                local_speed * float(rng.uniform(1.5, 1.9)),
                local_fare + float(rng.uniform(1.0, 2.0)),
                rng.integers(400, 901),
            )
    # extras: random metro or bus lines on random lanes
    attempts = 0
    while len(lines) < n_lines and attempts < n_lines * 20:
        attempts += 1
        kind, idx = lanes[int(rng.integers(0, len(lanes)))]
        corridor = station_rows[idx] if kind == "row" else station_cols[idx]
        is_metro = rng.random() < 0.5
        step = int(rng.integers(2, 4)) if is_metro else int(rng.integers(1, 3))
        start = int(rng.integers(0, max(1, step)))
        stops = corridor[start::step]
        if rng.random() < 0.5:
            stops = stops[::-1]
        add_line(
            stops,
            TransportMode.METRO if is_metro else TransportMode.BUS,
            rng.uniform(13.0, 18.0) if is_metro else rng.uniform(6.0, 9.0),
            (5.0 if is_metro else 2.5) + float(rng.uniform(0.0, 1.5)),
            rng.integers(300, 601) if is_metro else rng.integers(400, 901),
        )

    if n_pois is None:
        n_pois = max(4, n_stations // 4)
    pois = []
    for j in range(n_pois):
        seg = segments[int(rng.integers(0, len(segments)))]
        a = by_id[seg.from_id].location
        b = by_id[seg.to_id].location
        t = float(rng.uniform(0.2, 0.8))
        mid = GeoPoint(a.lat + t * (b.lat - a.lat), a.lon + t * (b.lon - a.lon))
        walk = float(rng.uniform(10.0, 40.0))
        loc = _offset(mid, walk if seg.id.startswith("e") else 0.0, 0.0 if seg.id.startswith("e") else walk)
        cat = POI_CATEGORIES[int(rng.integers(0, len(POI_CATEGORIES)))]
        pois.append(
            Poi(
                id=f"poi{j}", location=loc, primary_category=cat[0], secondary_category=cat[1],
                projected_segment=seg.id, walk_to_segment_m=walk,
            )
        )

    weather = []
    for d in range(weather_days):
        for h in range(0, 24, 3):
            weather.append(
                WeatherRecord(
                    timestamp=BASE_TS + d * 86400 + h * 3600,
                    weather=str(rng.choice(WEATHER_CATEGORIES, p=(0.45, 0.2, 0.15, 0.1, 0.05, 0.05))),
                    temperature_c=float(np.round(rng.uniform(-5.0, 30.0), 1)),
                    wind_level=int(rng.integers(0, 7)),
                    wind_direction=int(rng.integers(1, 17)),
                    aqi=int(rng.integers(20, 250)),
                )
            )

    return CityDataset(
        city=name,
        stations=stations,
        lines=lines,
        road=road,
        pois=tuple(pois),
        weather=tuple(weather),
    )


# ---------------------------------------------------------------------------
# Planted-preference query log
# ---------------------------------------------------------------------------

RUSH_HOURS = frozenset((7, 8, 9, 17, 18, 19))
OFFPEAK_HOURS = (10, 11, 12, 13, 14, 15, 20, 21, 22)


def is_rush_hour(timestamp: int) -> bool:
    return (timestamp // 3600) % 24 in RUSH_HOURS


def planted_utility(candidate, timestamp: int) -> float:
    """The simulated rider's deterministic utility.

    Rush hours: minimize ETA.  Weekend off-peak: leisure trips minimize
    distance.  Weekday off-peak: avoid transfers first, then fare, then
    distance (lexicographic via scale separation), without caring about
    speed.
    """
    if is_rush_hour(timestamp):
        return -candidate.duration_s
    day = ((timestamp // 86400) + 3) % 7  # epoch day 0 was a Thursday
    if day >= 5:
        return -candidate.distance_m
    return -(candidate.n_transfers * 1e9 + candidate.fare * 1e5 + candidate.distance_m * 1e-2)


def synth_query_log(
    engine,
    n_queries: int,
    seed: int = 0,
    epsilon: float = 0.05,
    no_feedback_fraction: float = 0.05,
    rush_fraction: float = 0.10,
) -> list[QueryLogEntry]:
    """Simulated queries with feedback planted by :func:`planted_utility`.

    With probability ``1 - epsilon`` the user gives feedback on the
    best-utility route; otherwise on a uniformly drawn shortlist member.
    """
    rng = np.random.default_rng(seed)
    station_locs = [s.location for s in engine.dataset.stations.values()]
    entries: list[QueryLogEntry] = []
    made = 0
    tries = 0
    while made < n_queries and tries < n_queries * 10:
        tries += 1
        oi, di = rng.integers(0, len(station_locs), size=2)
        if oi == di:
            continue
        origin = _offset(station_locs[oi], float(rng.uniform(-120, 120)), float(rng.uniform(-120, 120)))
        dest = _offset(station_locs[di], float(rng.uniform(-120, 120)), float(rng.uniform(-120, 120)))
        # weekends see more leisure travel; commute rush exists only on
        # weekdays (BASE_TS is a Monday, so days 5 and 6 are the weekend)
        day = int(rng.choice(7, p=(0.14, 0.14, 0.14, 0.14, 0.14, 0.15, 0.15)))
        if day < 5 and rng.random() < rush_fraction:
            hour = int(rng.choice(sorted(RUSH_HOURS)))
        else:
            hour = int(rng.choice(OFFPEAK_HOURS))
        ts = BASE_TS + day * 86400 + hour * 3600 + int(rng.integers(0, 3600))

        result = engine.shortlist_for(origin, dest)
        if result.status != "ok" or len(result.shortlist) < 2:
            continue
        shortlist = result.shortlist

        feedback: tuple[Feedback, ...] = ()
        if rng.random() >= no_feedback_fraction:
            utilities = [planted_utility(c, ts) for c in shortlist]
            best = max(range(len(shortlist)), key=lambda i: (utilities[i], -i))
            pick = best if rng.random() >= epsilon else int(rng.integers(0, len(shortlist)))
            kind = str(rng.choice(FEEDBACK_KINDS))
            fbs = [Feedback(route_id=shortlist[pick].route_id, kind=kind, timestamp=ts + 300)]
            if rng.random() < 0.15 and len(shortlist) > 1:
                second = int(rng.integers(0, len(shortlist)))
                if second != pick:
                    fbs.append(
                        Feedback(route_id=shortlist[second].route_id, kind="share", timestamp=ts + 600)
                    )
            feedback = tuple(fbs)

        entries.append(
            QueryLogEntry(
                query_id=f"q{made}",
                origin=origin,
                destination=dest,
                timestamp=ts,
                presented_routes=tuple(
                    PresentedRoute(route_id=c.route_id, features=c.to_dict()) for c in shortlist
                ),
                feedback=feedback,
            )
        )
        made += 1
    if made < n_queries:
        log.warning("query log synthesis produced %d of %d requested queries", made, n_queries)
    return entries
