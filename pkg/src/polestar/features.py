"""Situational feature construction for the re-ranking model.

Five families: route, spatial, temporal, meteorological and augmented
(shortlist statistics plus crossed categorical buckets).  Raw features are
name -> value dicts; a :class:`FeatureSchema` fitted on training data pins
the vector layout, categorical vocabularies and [0,1] scaling stats, so
serving never recomputes statistics.
"""

from __future__ import annotations

import datetime
import json
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import SchemaMismatch
from .geo import GeoPoint, GridIndex
from .model import CityDataset, WeatherRecord
from .primary import mode_group
from .ptg import CityPTG
from .search import RouteCandidate

SCHEMA_VERSION = 1

ROUTE_NUMERIC = (
    "eta_s",
    "wait_s",
    "fare",
    "road_distance_m",
    "congestion",
    "start_walk_m",
    "end_walk_m",
    "walk_total_m",
    "on_transport_m",
    "n_transfers",
)
AUGMENT_BASE = ("eta_s", "fare", "road_distance_m", "walk_total_m", "on_transport_m", "n_transfers", "wait_s")

POI_TOP_CATEGORIES = 8  # regional distribution vector length
WEATHER_BUCKETS = ("Sunny", "Rainy", "Overcast", "Cloudy", "Foggy", "Snow")
HOUR_BUCKETS = ((0, 6, "night"), (6, 10, "am_rush"), (10, 16, "day"), (16, 20, "pm_rush"), (20, 24, "evening"))


def _hour_bucket(hour: int) -> str:
    for lo, hi, name in HOUR_BUCKETS:
        if lo <= hour < hi:
            return name
    return "night"


def _load_holidays() -> frozenset:
    try:
        text = resources.files("polestar").joinpath("data/holidays.json").read_text()
        return frozenset(json.loads(text))
    except (FileNotFoundError, ModuleNotFoundError):
        return frozenset()


@dataclass
class TravelContext:
    timestamp: int
    origin: GeoPoint
    destination: GeoPoint
    weather: WeatherRecord | None = None


class FeatureEnvironment:
    """Per-city precomputed spatial statistics and lookups."""

    GRID_CELL_M = 1000.0
    DISTRICT_CELL_M = 4000.0
    POI_LOOKUP_M = 300.0

    def __init__(self, dataset: CityDataset, cp: CityPTG):
        self.dataset = dataset
        self.cp = cp
        self.holidays = _load_holidays()
        pts = [s.location for s in dataset.stations.values()] or [GeoPoint(0, 0)]
        origin = GeoPoint(min(p.lat for p in pts), min(p.lon for p in pts))
        self.grid = GridIndex(origin, self.GRID_CELL_M)
        self.district_grid = GridIndex(origin, self.DISTRICT_CELL_M)
        self.poi_grid = GridIndex(origin, self.GRID_CELL_M)

        self.cell_station_modes: dict[tuple, dict[str, int]] = {}
        self.cell_station_count: dict[tuple, int] = {}
        line_modes_by_station: dict[str, set] = {}
        for line in dataset.lines.values():
            for stop in line.stops:
                line_modes_by_station.setdefault(stop, set()).add(line.mode.value)
        for s in dataset.stations.values():
            cell = self.grid.cell_of(s.location)
            self.cell_station_count[cell] = self.cell_station_count.get(cell, 0) + 1
            modes = self.cell_station_modes.setdefault(cell, {})
            for m in line_modes_by_station.get(s.id, ()):
                modes[m] = modes.get(m, 0) + 1

        cat_totals: dict[str, int] = {}
        self.cell_poi_cats: dict[tuple, dict[str, int]] = {}
        for i, poi in enumerate(dataset.pois):
            self.poi_grid.add(i, poi.location)
            cell = self.grid.cell_of(poi.location)
            cats = self.cell_poi_cats.setdefault(cell, {})
            cats[poi.primary_category] = cats.get(poi.primary_category, 0) + 1
            cat_totals[poi.primary_category] = cat_totals.get(poi.primary_category, 0) + 1
        self.top_poi_categories = [
            c for c, _ in sorted(cat_totals.items(), key=lambda kv: (-kv[1], kv[0]))[:POI_TOP_CATEGORIES]
        ]

        self.cell_road_m: dict[tuple, float] = {}
        upos = dataset.road.intersection_by_id()
        for seg in dataset.road.segments:
            mid_a, mid_b = upos[seg.from_id].location, upos[seg.to_id].location
            mid = GeoPoint((mid_a.lat + mid_b.lat) / 2, (mid_a.lon + mid_b.lon) / 2)
            cell = self.grid.cell_of(mid)
            self.cell_road_m[cell] = self.cell_road_m.get(cell, 0.0) + seg.length_m

        # congestion of the road segment nearest each station (bus legs only)
        self.station_congestion: dict[str, float] = {}
        seg_grid = GridIndex(origin, self.GRID_CELL_M)
        for i, seg in enumerate(dataset.road.segments):
            seg_grid.add(i, upos[seg.from_id].location)
        for s in dataset.stations.values():
            best, best_d = 0.0, math.inf
            for i in seg_grid.members_near(s.location, self.GRID_CELL_M):
                seg = dataset.road.segments[i]
                d = seg_grid.proj.distance_m(s.location, upos[seg.from_id].location)
                if d < best_d:
                    best, best_d = seg.congestion, d
            self.station_congestion[s.id] = best

        self._weather_ts = [w.timestamp for w in dataset.weather]

    def weather_at(self, timestamp: int, max_gap_s: int = 3 * 3600) -> WeatherRecord | None:
        if not self._weather_ts:
            return None
        import bisect

        i = bisect.bisect_left(self._weather_ts, timestamp)
        best = None
        for j in (i - 1, i):
            if 0 <= j < len(self._weather_ts):
                w = self.dataset.weather[j]
                if abs(w.timestamp - timestamp) <= max_gap_s and (
                    best is None or abs(w.timestamp - timestamp) < abs(best.timestamp - timestamp)
                ):
                    best = w
        return best

    def nearest_poi_categories(self, p: GeoPoint) -> tuple[str, str]:
        best, best_d = None, self.POI_LOOKUP_M
        for i in self.poi_grid.members_near(p, self.POI_LOOKUP_M):
            d = self.poi_grid.proj.distance_m(p, self.dataset.pois[i].location)
            if d <= best_d:
                best, best_d = self.dataset.pois[i], d
        if best is None:
            return "unknown", "unknown"
        return best.primary_category, best.secondary_category

    def cell_features(self, p: GeoPoint, prefix: str) -> dict:
        cell = self.grid.cell_of(p)
        area_km2 = (self.GRID_CELL_M / 1000.0) ** 2
        out = {
            f"{prefix}_station_density": self.cell_station_count.get(cell, 0) / area_km2,
            f"{prefix}_road_density": self.cell_road_m.get(cell, 0.0) / 1000.0 / area_km2,
        }
        modes = self.cell_station_modes.get(cell, {})
        for m in ("Bus", "Metro", "Ferry", "LightRail"):
            out[f"{prefix}_stations_{m}"] = modes.get(m, 0)
        cats = self.cell_poi_cats.get(cell, {})
        for c in self.top_poi_categories:
            out[f"{prefix}_pois_{c}"] = cats.get(c, 0)
        return out


def _in_service(line, minute_of_day: int) -> bool:
    start, end = line.service_window
    if start <= end:
        return start <= minute_of_day <= end
    return minute_of_day >= start or minute_of_day <= end  # overnight window


def build_raw_features(
    candidate: RouteCandidate,
    shortlist: list[RouteCandidate],
    context: TravelContext,
    env: FeatureEnvironment,
) -> dict:
    """All five feature families as a flat name -> value dict (unscaled)."""
    if not any(c.signature == candidate.signature for c in shortlist):
        raise ValueError("candidate must be part of its shortlist")
    dt = datetime.datetime.fromtimestamp(context.timestamp, tz=datetime.timezone.utc)
    minute_of_day = dt.hour * 60 + dt.minute
    lines = [env.cp.lines[s.line] for s in candidate.segments if s.line is not None]

    walk_total = candidate.start_walk_m + candidate.end_walk_m + candidate.transfer_walk_m
    bus_station_ids = [
        st for s in candidate.segments if s.mode == "Bus" for st in (s.board, *s.intermediate, s.alight)
    ]
    congestion = (
        float(np.mean([env.station_congestion.get(st, 0.0) for st in bus_station_ids])) if bus_station_ids else 0.0
    )
    in_service = all(_in_service(l, minute_of_day) for l in lines) if lines else False

    raw: dict = {
        # route
        "eta_s": candidate.duration_s,
        "wait_s": candidate.wait_s,
        "fare": candidate.fare,
        "ticket_available": 1.0 if in_service else 0.0,
        "road_distance_m": candidate.distance_m,
        "congestion": congestion,
        "start_walk_m": candidate.start_walk_m,
        "end_walk_m": candidate.end_walk_m,
        "walk_total_m": walk_total,
        "on_transport_m": sum(s.distance_m for s in candidate.segments),
        "n_transfers": float(candidate.n_transfers),
        # temporal
        "hour": float(dt.hour),
        "minute": float(dt.minute),
        "day_of_week": float(dt.weekday()),
        "day_of_month": float(dt.day),
        "holiday": 1.0 if dt.date().isoformat() in env.holidays else 0.0,
        "route_in_service": 1.0 if in_service else 0.0,
        # spatial (categoricals)
        "city": env.cp.city,
        "origin_district": "d%d_%d" % env.district_grid.cell_of(context.origin),
        "dest_district": "d%d_%d" % env.district_grid.cell_of(context.destination),
    }
    o_cat1, o_cat2 = env.nearest_poi_categories(context.origin)
    d_cat1, d_cat2 = env.nearest_poi_categories(context.destination)
    raw["origin_poi_primary"], raw["origin_poi_secondary"] = o_cat1, o_cat2
    raw["dest_poi_primary"], raw["dest_poi_secondary"] = d_cat1, d_cat2
    raw.update(env.cell_features(context.origin, "origin"))
    raw.update(env.cell_features(context.destination, "dest"))

    # meteorological (unknown weather is a dedicated bucket, never an error)
    w = context.weather if context.weather is not None else env.weather_at(context.timestamp)
    raw["weather"] = w.weather if w else "unknown"
    raw["wind_direction"] = f"wd{w.wind_direction}" if w else "unknown"
    raw["temperature_c"] = w.temperature_c if w else 15.0
    raw["wind_level"] = float(w.wind_level) if w else 0.0
    raw["aqi"] = float(w.aqi) if w else 0.0

    # augmented: shortlist statistics and differences
    for name in AUGMENT_BASE:
        values = [_route_numeric(c, name) for c in shortlist]
        x = _route_numeric(candidate, name)
        raw[f"{name}_min"] = min(values)
        raw[f"{name}_max"] = max(values)
        raw[f"{name}_avg"] = sum(values) / len(values)
        raw[f"{name}_minus_min"] = x - min(values)

    # crossed categorical buckets
    group = mode_group(candidate)
    raw["cross_hour_mode"] = f"{_hour_bucket(dt.hour)}*{group}"
    raw["cross_destpoi_mode"] = f"{d_cat1}*{group}"
    raw["cross_weather_walk"] = f"{raw['weather']}*walk{int(min(walk_total // 250, 5))}"
    return raw


def _route_numeric(c: RouteCandidate, name: str) -> float:
    if name == "walk_total_m":
        return c.start_walk_m + c.end_walk_m + c.transfer_walk_m
    if name == "on_transport_m":
        return sum(s.distance_m for s in c.segments)
    if name == "n_transfers":
        return float(c.n_transfers)
    return float(getattr(c, {"eta_s": "duration_s", "road_distance_m": "distance_m"}.get(name, name)))


CATEGORICAL_CAPS = {
    "city": 16,
    "origin_district": 64,
    "dest_district": 64,
    "origin_poi_primary": 32,
    "origin_poi_secondary": 32,
    "dest_poi_primary": 32,
    "dest_poi_secondary": 32,
    "weather": 8,
    "wind_direction": 16,
    "cross_hour_mode": 64,
    "cross_destpoi_mode": 64,
    "cross_weather_walk": 64,
}


@dataclass
class FeatureSchema:
    """Pinned vector layout: numeric scaling stats + categorical vocabs."""

    version: int
    numeric: list[str]
    numeric_min: dict[str, float]
    numeric_max: dict[str, float]
    categorical: dict[str, list[str]]  # name -> vocabulary (unknown bucket implied)
    clamp_count: int = 0

    @property
    def feature_names(self) -> list[str]:
        names = list(self.numeric)
        for cat, vocab in self.categorical.items():
            names.extend(f"{cat}={v}" for v in vocab)
            names.append(f"{cat}=<unknown>")
        return names

    @property
    def dim(self) -> int:
        return len(self.numeric) + sum(len(v) + 1 for v in self.categorical.values())

    @classmethod
    def fit(cls, raw_dicts: list[dict]) -> "FeatureSchema":
        if not raw_dicts:
            raise ValueError("cannot fit a schema on zero examples")
        numeric, categorical_counts = [], {}
        for name, value in raw_dicts[0].items():
            if isinstance(value, str):
                categorical_counts[name] = {}
            else:
                numeric.append(name)
        numeric.sort()
        nmin = {n: math.inf for n in numeric}
        nmax = {n: -math.inf for n in numeric}
        for raw in raw_dicts:
            for n in numeric:
                v = float(raw.get(n, 0.0))
                nmin[n] = min(nmin[n], v)
                nmax[n] = max(nmax[n], v)
            for cat, counts in categorical_counts.items():
                v = str(raw.get(cat, "unknown"))
                counts[v] = counts.get(v, 0) + 1
        categorical = {
            cat: [v for v, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[: CATEGORICAL_CAPS.get(cat, 32)]]
            for cat, counts in sorted(categorical_counts.items())
        }
        return cls(version=SCHEMA_VERSION, numeric=numeric, numeric_min=nmin, numeric_max=nmax, categorical=categorical)

    def vectorize(self, raw: dict) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        i = 0
        for n in self.numeric:
            v = float(raw.get(n, 0.0))
            lo, hi = self.numeric_min[n], self.numeric_max[n]
            scaled = 0.0 if hi <= lo else (v - lo) / (hi - lo)
            if scaled < 0.0 or scaled > 1.0:
                self.clamp_count += 1
                scaled = min(1.0, max(0.0, scaled))
            vec[i] = scaled
            i += 1
        for cat, vocab in self.categorical.items():
            v = str(raw.get(cat, "unknown"))
            try:
                vec[i + vocab.index(v)] = 1.0
            except ValueError:
                vec[i + len(vocab)] = 1.0  # unknown bucket
            i += len(vocab) + 1
        return vec

    def vectorize_many(self, raw_dicts: list[dict]) -> np.ndarray:
        if not raw_dicts:
            return np.zeros((0, self.dim))
        return np.stack([self.vectorize(r) for r in raw_dicts])

    def to_json(self) -> dict:
        return {
            "version": self.version,
            "numeric": self.numeric,
            "numeric_min": self.numeric_min,
            "numeric_max": self.numeric_max,
            "categorical": self.categorical,
        }

    @classmethod
    def from_json(cls, rec: dict) -> "FeatureSchema":
        if rec["version"] != SCHEMA_VERSION:
            raise SchemaMismatch(f"schema version {rec['version']}, expected {SCHEMA_VERSION}")
        return cls(
            version=rec["version"],
            numeric=list(rec["numeric"]),
            numeric_min={k: float(v) for k, v in rec["numeric_min"].items()},
            numeric_max={k: float(v) for k, v in rec["numeric_max"].items()},
            categorical={k: list(v) for k, v in rec["categorical"].items()},
        )
