"""Domain types and file ingestion for city datasets and query logs.

A city dataset is a directory of newline-delimited JSON files, one per entity
type (``stations.jsonl``, ``lines.jsonl``, ``road.jsonl`` mandatory;
``pois.jsonl`` and ``weather.jsonl`` optional).  Schemas are documented in
``docs/data-formats.md``.  Loaded datasets are immutable in spirit: nothing in
the engine mutates them after validation, so they are safe to share across
threads.
"""

from __future__ import annotations

import enum
import json
import logging
import os
from dataclasses import dataclass, field

from .errors import DanglingReference, MissingFile, SchemaError
from .geo import GeoPoint

log = logging.getLogger(__name__)

WEATHER_CATEGORIES = ("Sunny", "Rainy", "Overcast", "Cloudy", "Foggy", "Snow")
FEEDBACK_KINDS = ("favorite", "share", "screenshot", "navigation")


class TransportMode(enum.Enum):
    BUS = "Bus"
    METRO = "Metro"
    FERRY = "Ferry"
    LIGHT_RAIL = "LightRail"
    WALK = "Walk"

    @classmethod
    def line_modes(cls):
        """Modes a line may carry; Walk exists only on binding/transfer legs."""
        return (cls.BUS, cls.METRO, cls.FERRY, cls.LIGHT_RAIL)


@dataclass(frozen=True)
class PhysicalStation:
    id: str
    location: GeoPoint
    name: str
    city: str


@dataclass(frozen=True)
class TransportLine:
    id: str
    mode: TransportMode
    stops: tuple[str, ...]
    headway_s: float
    speed_mps: float
    fare: float
    service_window: tuple[int, int]  # [start, end] minute of day


@dataclass(frozen=True)
class RoadIntersection:
    id: str
    location: GeoPoint


@dataclass(frozen=True)
class RoadSegment:
    id: str
    from_id: str
    to_id: str
    length_m: float
    bidirectional: bool
    congestion: float = 0.0  # static congestion snapshot, 0 = free flow


@dataclass(frozen=True)
class RoadNetwork:
    intersections: tuple[RoadIntersection, ...]
    segments: tuple[RoadSegment, ...]

    def intersection_by_id(self) -> dict[str, RoadIntersection]:
        return {u.id: u for u in self.intersections}


@dataclass(frozen=True)
class Poi:
    id: str
    location: GeoPoint
    primary_category: str
    secondary_category: str
    projected_segment: str
    walk_to_segment_m: float


@dataclass(frozen=True)
class WeatherRecord:
    timestamp: int
    weather: str
    temperature_c: float
    wind_level: int
    wind_direction: int  # 1..16 compass sector
    aqi: int


@dataclass(frozen=True)
class Feedback:
    route_id: str
    kind: str
    timestamp: int


@dataclass(frozen=True)
class PresentedRoute:
    route_id: str
    features: dict  # serialized candidate payload (segments + totals)


@dataclass(frozen=True)
class QueryLogEntry:
    query_id: str
    origin: GeoPoint
    destination: GeoPoint
    timestamp: int
    presented_routes: tuple[PresentedRoute, ...]
    feedback: tuple[Feedback, ...]


@dataclass
class CityDataset:
    city: str
    stations: dict[str, PhysicalStation]
    lines: dict[str, TransportLine]
    road: RoadNetwork
    pois: tuple[Poi, ...] = ()
    weather: tuple[WeatherRecord, ...] = ()

    def station(self, station_id: str) -> PhysicalStation:
        return self.stations[station_id]


# ---------------------------------------------------------------------------
# JSONL parsing helpers
# ---------------------------------------------------------------------------

def _iter_jsonl(path):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                yield lineno, json.loads(raw)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc}", path=path, line=lineno) from exc


def _req(rec, key, path, lineno, kind=None):
    if key not in rec:
        raise SchemaError(f"missing field {key!r}", path=path, line=lineno)
    val = rec[key]
    if kind is not None and not isinstance(val, kind):
        raise SchemaError(f"field {key!r} has wrong type {type(val).__name__}", path=path, line=lineno)
    return val


def _geopoint(rec, path, lineno, lat_key="lat", lon_key="lon"):
    try:
        return GeoPoint(float(_req(rec, lat_key, path, lineno)), float(_req(rec, lon_key, path, lineno)))
    except ValueError as exc:
        raise SchemaError(str(exc), path=path, line=lineno) from exc


def _parse_station(rec, path, lineno, city):
    return PhysicalStation(
        id=str(_req(rec, "id", path, lineno)),
        location=_geopoint(rec, path, lineno),
        name=str(rec.get("name", "")),
        city=str(rec.get("city", city)),
    )


def _parse_line(rec, path, lineno):
    mode_name = str(_req(rec, "mode", path, lineno))
    try:
        mode = TransportMode(mode_name)
    except ValueError as exc:
        raise SchemaError(f"unknown mode {mode_name!r}", path=path, line=lineno) from exc
    if mode not in TransportMode.line_modes():
        raise SchemaError("Walk is not a valid line mode", path=path, line=lineno)
    stops = tuple(str(s) for s in _req(rec, "stops", path, lineno, list))
    if len(stops) < 2:
        raise SchemaError("line needs at least 2 stops", path=path, line=lineno)
    for a, b in zip(stops, stops[1:]):
        if a == b:
            raise SchemaError(f"consecutive duplicate stop {a!r}", path=path, line=lineno)
    headway = float(rec.get("headway_s", 600.0))
    speed = float(rec.get("speed_mps", 8.0))
    if headway <= 0 or speed <= 0:
        raise SchemaError("headway_s and speed_mps must be positive", path=path, line=lineno)
    window = rec.get("service_window", [0, 1440])
    if not (isinstance(window, list) and len(window) == 2):
        raise SchemaError("service_window must be [start_minute, end_minute]", path=path, line=lineno)
    return TransportLine(
        id=str(_req(rec, "id", path, lineno)),
        mode=mode,
        stops=stops,
        headway_s=headway,
        speed_mps=speed,
        fare=float(rec.get("fare", 2.0)),
        service_window=(int(window[0]), int(window[1])),
    )


def _parse_road(path):
    intersections, segments = [], []
    for lineno, rec in _iter_jsonl(path):
        kind = _req(rec, "type", path, lineno, str)
        if kind == "intersection":
            intersections.append(RoadIntersection(str(_req(rec, "id", path, lineno)), _geopoint(rec, path, lineno)))
        elif kind == "segment":
            length = float(_req(rec, "length_m", path, lineno))
            if length <= 0:
                raise SchemaError("length_m must be positive", path=path, line=lineno)
            segments.append(
                RoadSegment(
                    id=str(_req(rec, "id", path, lineno)),
                    from_id=str(_req(rec, "from", path, lineno)),
                    to_id=str(_req(rec, "to", path, lineno)),
                    length_m=length,
                    bidirectional=bool(rec.get("bidirectional", True)),
                    congestion=float(rec.get("congestion", 0.0)),
                )
            )
        else:
            raise SchemaError(f"unknown road record type {kind!r}", path=path, line=lineno)
    known = {u.id for u in intersections}
    for seg in segments:
        for end in (seg.from_id, seg.to_id):
            if end not in known:
                raise DanglingReference(end, context=f"road segment {seg.id}")
    return RoadNetwork(tuple(intersections), tuple(segments))


def _parse_poi(rec, path, lineno):
    walk = float(rec.get("walk_to_segment_m", 0.0))
    if walk < 0:
        raise SchemaError("walk_to_segment_m must be >= 0", path=path, line=lineno)
    return Poi(
        id=str(_req(rec, "id", path, lineno)),
        location=_geopoint(rec, path, lineno),
        primary_category=str(rec.get("primary_category", "unknown")),
        secondary_category=str(rec.get("secondary_category", "unknown")),
        projected_segment=str(rec.get("projected_segment", "")),
        walk_to_segment_m=walk,
    )


def _parse_weather(rec, path, lineno):
    weather = str(_req(rec, "weather", path, lineno))
    if weather not in WEATHER_CATEGORIES:
        raise SchemaError(f"unknown weather category {weather!r}", path=path, line=lineno)
    wind_level = int(rec.get("wind_level", 0))
    if not 0 <= wind_level <= 12:
        raise SchemaError("wind_level must be in [0, 12]", path=path, line=lineno)
    wind_dir = int(rec.get("wind_direction", 1))
    if not 1 <= wind_dir <= 16:
        raise SchemaError("wind_direction must be in [1, 16]", path=path, line=lineno)
    aqi = int(rec.get("aqi", 0))
    if aqi < 0:
        raise SchemaError("aqi must be non-negative", path=path, line=lineno)
    return WeatherRecord(
        timestamp=int(_req(rec, "timestamp", path, lineno)),
        weather=weather,
        temperature_c=float(rec.get("temperature_c", 15.0)),
        wind_level=wind_level,
        wind_direction=wind_dir,
        aqi=aqi,
    )


# ---------------------------------------------------------------------------
# Dataset loading / saving
# ---------------------------------------------------------------------------

def load_city_dataset(dir_path: str | os.PathLike) -> CityDataset:
    """Load and validate one city directory.

    Raises :class:`MissingFile` for absent mandatory files,
    :class:`SchemaError` for malformed records (with file and line) and
    :class:`DanglingReference` when a line references an unknown station.
    """
    dir_path = os.fspath(dir_path)
    for name in ("stations.jsonl", "lines.jsonl", "road.jsonl"):
        if not os.path.exists(os.path.join(dir_path, name)):
            raise MissingFile(os.path.join(dir_path, name))

    city = os.path.basename(os.path.normpath(dir_path)) or "city"

    stations: dict[str, PhysicalStation] = {}
    path = os.path.join(dir_path, "stations.jsonl")
    for lineno, rec in _iter_jsonl(path):
        st = _parse_station(rec, path, lineno, city)
        if st.id in stations:
            raise SchemaError(f"duplicate station id {st.id!r}", path=path, line=lineno)
        stations[st.id] = st

    lines: dict[str, TransportLine] = {}
    path = os.path.join(dir_path, "lines.jsonl")
    for lineno, rec in _iter_jsonl(path):
        line = _parse_line(rec, path, lineno)
        if line.id in lines:
            raise SchemaError(f"duplicate line id {line.id!r}", path=path, line=lineno)
        for stop in line.stops:
            if stop not in stations:
                raise DanglingReference(stop, context=f"line {line.id}")
        lines[line.id] = line

    road = _parse_road(os.path.join(dir_path, "road.jsonl"))

    pois: list[Poi] = []
    path = os.path.join(dir_path, "pois.jsonl")
    if os.path.exists(path):
        segment_ids = {s.id for s in road.segments}
        for lineno, rec in _iter_jsonl(path):
            poi = _parse_poi(rec, path, lineno)
            if poi.projected_segment and poi.projected_segment not in segment_ids:
                raise DanglingReference(poi.projected_segment, context=f"poi {poi.id}")
            pois.append(poi)

    weather: list[WeatherRecord] = []
    path = os.path.join(dir_path, "weather.jsonl")
    if os.path.exists(path):
        weather = [_parse_weather(rec, path, lineno) for lineno, rec in _iter_jsonl(path)]

    return CityDataset(
        city=city,
        stations=stations,
        lines=lines,
        road=road,
        pois=tuple(pois),
        weather=tuple(sorted(weather, key=lambda w: w.timestamp)),
    )


def save_city_dataset(dataset: CityDataset, dir_path: str | os.PathLike) -> None:
    """Write a dataset back to JSONL files (canonical field order)."""
    dir_path = os.fspath(dir_path)
    os.makedirs(dir_path, exist_ok=True)

    def dump(name, records):
        with open(os.path.join(dir_path, name), "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")

    dump(
        "stations.jsonl",
        (
            {"id": s.id, "lat": s.location.lat, "lon": s.location.lon, "name": s.name, "city": s.city}
            for s in dataset.stations.values()
        ),
    )
    dump(
        "lines.jsonl",
        (
            {
                "id": l.id,
                "mode": l.mode.value,
                "stops": list(l.stops),
                "headway_s": l.headway_s,
                "speed_mps": l.speed_mps,
                "fare": l.fare,
                "service_window": list(l.service_window),
            }
            for l in dataset.lines.values()
        ),
    )
    road_records = [
        {"type": "intersection", "id": u.id, "lat": u.location.lat, "lon": u.location.lon}
        for u in dataset.road.intersections
    ] + [
        {
            "type": "segment",
            "id": s.id,
            "from": s.from_id,
            "to": s.to_id,
            "length_m": s.length_m,
            "bidirectional": s.bidirectional,
            "congestion": s.congestion,
        }
        for s in dataset.road.segments
    ]
    dump("road.jsonl", road_records)
    if dataset.pois:
        dump(
            "pois.jsonl",
            (
                {
                    "id": p.id,
                    "lat": p.location.lat,
                    "lon": p.location.lon,
                    "primary_category": p.primary_category,
                    "secondary_category": p.secondary_category,
                    "projected_segment": p.projected_segment,
                    "walk_to_segment_m": p.walk_to_segment_m,
                }
                for p in dataset.pois
            ),
        )
    if dataset.weather:
        dump(
            "weather.jsonl",
            (
                {
                    "timestamp": w.timestamp,
                    "weather": w.weather,
                    "temperature_c": w.temperature_c,
                    "wind_level": w.wind_level,
                    "wind_direction": w.wind_direction,
                    "aqi": w.aqi,
                }
                for w in dataset.weather
            ),
        )


# ---------------------------------------------------------------------------
# Query logs
# ---------------------------------------------------------------------------

@dataclass
class QueryLogStats:
    entries: int = 0
    dropped_feedback: int = 0


def load_query_log(path: str | os.PathLike, stats: QueryLogStats | None = None) -> list[QueryLogEntry]:
    """Load a query log; feedback rows referencing unknown routes are dropped
    (counted in ``stats``), the entry itself is kept."""
    path = os.fspath(path)
    if not os.path.exists(path):
        raise MissingFile(path)
    stats = stats if stats is not None else QueryLogStats()
    entries: list[QueryLogEntry] = []
    for lineno, rec in _iter_jsonl(path):
        routes = tuple(
            PresentedRoute(route_id=str(_req(r, "route_id", path, lineno)), features=dict(r.get("candidate", {})))
            for r in _req(rec, "routes", path, lineno, list)
        )
        route_ids = {r.route_id for r in routes}
        feedback = []
        last_ts = None
        for fb in rec.get("feedback", []):
            rid = str(_req(fb, "route_id", path, lineno))
            kind = str(_req(fb, "kind", path, lineno))
            if kind not in FEEDBACK_KINDS:
                raise SchemaError(f"unknown feedback kind {kind!r}", path=path, line=lineno)
            ts = int(_req(fb, "timestamp", path, lineno))
            if last_ts is not None and ts < last_ts:
                raise SchemaError("feedback timestamps must be non-decreasing", path=path, line=lineno)
            last_ts = ts
            if rid not in route_ids:
                stats.dropped_feedback += 1
                continue
            feedback.append(Feedback(rid, kind, ts))
        entries.append(
            QueryLogEntry(
                query_id=str(_req(rec, "query_id", path, lineno)),
                origin=_geopoint(_req(rec, "origin", path, lineno, dict), path, lineno),
                destination=_geopoint(_req(rec, "destination", path, lineno, dict), path, lineno),
                timestamp=int(_req(rec, "timestamp", path, lineno)),
                presented_routes=routes,
                feedback=tuple(feedback),
            )
        )
    stats.entries = len(entries)
    if stats.dropped_feedback:
        log.info("query log %s: dropped %d feedback rows with unknown route ids", path, stats.dropped_feedback)
    return entries


def save_query_log(entries: list[QueryLogEntry], path: str | os.PathLike) -> None:
    with open(os.fspath(path), "w", encoding="utf-8") as fh:
        for e in entries:
            rec = {
                "query_id": e.query_id,
                "origin": {"lat": e.origin.lat, "lon": e.origin.lon},
                "destination": {"lat": e.destination.lat, "lon": e.destination.lon},
                "timestamp": e.timestamp,
                "routes": [{"route_id": r.route_id, "candidate": r.features} for r in e.presented_routes],
                "feedback": [
                    {"route_id": f.route_id, "kind": f.kind, "timestamp": f.timestamp} for f in e.feedback
                ],
            }
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
