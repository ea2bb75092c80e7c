"""Online pipeline: bind -> generate -> primary rank -> features -> rerank.

The Engine owns immutable artifacts (PTG, station cache, model, dataset) and
is safe for concurrent queries; every per-query structure is private.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from . import binding, ranker, search
from .config import EngineConfig
from .features import FeatureEnvironment, TravelContext, build_raw_features
from .geo import GeoPoint
from .model import CityDataset, load_city_dataset
from .primary import primary_rank
from .ptg import PTG, CityPTG, load_ptg

DEGENERATE = "degenerate_query"


@dataclass
class PhaseTimings:
    bind_s: float = 0.0
    routing_s: float = 0.0
    ranking_s: float = 0.0

    def zeroed(self):
        return PhaseTimings()


@dataclass
class QueryResult:
    status: str
    routes: list[dict] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)
    timings: PhaseTimings = field(default_factory=PhaseTimings)
    shortlist: list = field(default_factory=list)  # RouteCandidates in final order
    scores: list[float] = field(default_factory=list)


class Engine:
    def __init__(
        self,
        dataset: CityDataset,
        ptg: PTG,
        cache: binding.StationCache,
        model: ranker.RankModel | None,
        config: EngineConfig | None = None,
    ):
        self.config = config or EngineConfig()
        self.dataset = dataset
        self.ptg = ptg
        if dataset.city in ptg.cities:
            self.cp: CityPTG = ptg.cities[dataset.city]
        else:
            self.cp = next(iter(ptg.cities.values()))
        self.cache = cache
        self.model = model
        self.env = FeatureEnvironment(dataset, self.cp)
        self.started_at = time.time()

    @classmethod
    def from_config(cls, config: EngineConfig) -> "Engine":
        dataset = load_city_dataset(config.data_dir)
        ptg = load_ptg(config.ptg_path)
        cache = binding.load_station_cache(config.cache_path, dataset.road)
        model = ranker.load_model(config.model_path) if config.model_path else None
        return cls(dataset, ptg, cache, model, config)

    # ------------------------------------------------------------------
    def shortlist_for(self, origin: GeoPoint, dest: GeoPoint) -> QueryResult:
        """Phases 1-3: bind, candidate generation, primary ranking."""
        cfg = self.config
        result = QueryResult(status="ok")
        t0 = time.perf_counter()
        if origin == dest:
            result.status = DEGENERATE
            return result
        bound_o, status_o = binding.bind(origin, self.cache, k=cfg.bind.k_bind, cfg=cfg.bind)
        bound_d, status_d = binding.bind(dest, self.cache, k=cfg.bind.k_bind, cfg=cfg.bind)
        result.timings.bind_s = time.perf_counter() - t0
        if status_o != binding.BOUND_OK or status_d != binding.BOUND_OK:
            result.status = binding.NO_STATION_IN_RANGE
            return result

        t1 = time.perf_counter()
        cands = search.generate_candidates(
            self.cp,
            bound_o,
            bound_d,
            limits=cfg.limits,
            config=self.ptg.weight_config,
            time_budget=not cfg.deterministic,
        )
        result.timings.routing_s = time.perf_counter() - t1
        if cands.status == search.STATUS_TIME_BUDGET:
            result.flags.append("time_budget_exceeded")
        if not cands.candidates:
            result.status = cands.status if cands.status != search.STATUS_OK else search.STATUS_UNREACHABLE
            return result

        t2 = time.perf_counter()
        shortlist = primary_rank(cands.candidates, cfg.rules, cfg.weights)
        result.shortlist = shortlist.candidates
        result.timings.ranking_s = time.perf_counter() - t2
        return result

    def query(self, origin: GeoPoint, dest: GeoPoint, depart_ts: int, weather_hint: str | None = None) -> QueryResult:
        """Full six-step pipeline; responds with partial results under a
        blown time budget rather than failing."""
        result = self.shortlist_for(origin, dest)
        if result.status != "ok" or not result.shortlist:
            return result

        t3 = time.perf_counter()
        context = TravelContext(
            timestamp=depart_ts,
            origin=origin,
            destination=dest,
            weather=self._hint_weather(weather_hint, depart_ts),
        )
        ordered = result.shortlist
        scores = [0.0] * len(ordered)
        if self.model is not None and self.model.schema is not None:
            raw = [build_raw_features(c, result.shortlist, context, self.env) for c in result.shortlist]
            vectors = self.model.schema.vectorize_many(raw)
            ordered, scores = ranker.rerank(result.shortlist, self.model, vectors)
        else:
            result.flags.append("rerank_disabled_primary_order")
        result.timings.ranking_s += time.perf_counter() - t3
        result.shortlist = ordered
        result.scores = scores
        if self.config.deterministic:
            result.timings = result.timings.zeroed()
        result.routes = [
            dict(c.to_dict(), rank=i + 1, score=scores[i]) for i, c in enumerate(ordered)
        ]
        return result

    def _hint_weather(self, hint: str | None, ts: int):
        if hint is None:
            return None  # features fall back to the dataset's nearest record
        from .model import WEATHER_CATEGORIES, WeatherRecord

        if hint not in WEATHER_CATEGORIES:
            raise ValueError(f"unknown weather category {hint!r}")
        return WeatherRecord(timestamp=ts, weather=hint, temperature_c=15.0, wind_level=0, wind_direction=1, aqi=50)

    def stations_in_bbox(self, min_lat, min_lon, max_lat, max_lon) -> list[dict]:
        lines_by_station: dict[str, list[str]] = {}
        for line in self.cp.lines.values():
            for stop in line.stops:
                lines_by_station.setdefault(stop, []).append(line.id)
        out = []
        for s in self.cp.physical.stations.values():
            if min_lat <= s.location.lat <= max_lat and min_lon <= s.location.lon <= max_lon:
                out.append(
                    {
                        "id": s.id,
                        "name": s.name,
                        "lat": s.location.lat,
                        "lon": s.location.lon,
                        "lines": sorted(lines_by_station.get(s.id, [])),
                    }
                )
        out.sort(key=lambda r: r["id"])
        return out
