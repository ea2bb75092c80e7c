"""Engine configuration: edge-weight proxies, search limits, ranking knobs.

Every default documented here can be overridden from a TOML file; see
``polestar --help`` for which commands accept ``--config`` / ``--params``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


@dataclass
class WeightConfig:
    """Virtual-graph edge weight proxies.

    Ride edges: Distance = polyline length, TravelTime = length / line speed,
    WalkDistance = 0.  Transfer edges: Distance = 0, WalkDistance =
    ``transfer_walk_m``, TravelTime = ``transfer_penalty_s`` + half the
    boarded line's headway (expected wait).  Boarding wait at the trip origin
    is charged as an initial search cost, keeping ride edges context-free.
    """

    transfer_walk_m: float = 100.0
    transfer_penalty_s: float = 120.0
    walk_speed_mps: float = 1.25
    max_skip: int = 0  # 0 = unlimited downstream pairs per line
    nearby_transfers: bool = False  # reserved: transfers between nearby (not co-located) stations

    def validate(self):
        if self.transfer_walk_m < 0 or self.transfer_penalty_s < 0:
            raise ValueError("transfer costs must be non-negative")
        if self.walk_speed_mps <= 0:
            raise ValueError("walk_speed_mps must be positive")


@dataclass
class BindConfig:
    lambda_m: float = 1500.0  # cache distance threshold
    cell_size_m: float = 500.0
    projection_radius_m: float = 200.0  # station -> segment projection radius
    poi_snap_m: float = 50.0  # adopt a POI's stored projection within this radius
    k_bind: int = 3  # boarding and alighting stations per endpoint
    candidate_segments: int = 3  # nearby segments tried when projecting a query point


@dataclass
class SearchLimits:
    max_candidates: int = 50
    max_time_ms: float = 50.0
    max_transfers: int = 4

    def validate(self):
        if self.max_candidates <= 0 or self.max_time_ms <= 0 or self.max_transfers <= 0:
            raise ValueError("search limits must be positive")


@dataclass
class FilterRules:
    theta_sim: float = 0.8  # segment-overlap Jaccard threshold
    theta_detour: float = 2.0  # candidate distance / best distance
    forbidden_patterns: tuple[tuple[str, ...], ...] = (("Metro", "Bus", "Metro"),)

    def validate(self):
        if not 0.0 <= self.theta_sim <= 1.0:
            raise ValueError("theta_sim must be in [0, 1]")
        if self.theta_detour < 1.0:
            raise ValueError("theta_detour must be >= 1")


@dataclass
class CostWeights:
    w_time: float = 0.6
    w_dist: float = 0.2
    w_walk: float = 0.2

    def validate(self):
        if min(self.w_time, self.w_dist, self.w_walk) < 0:
            raise ValueError("cost weights must be non-negative")
        if self.w_time == self.w_dist == self.w_walk == 0:
            raise ValueError("cost weights must not all be zero")


@dataclass
class RankParams:
    tau: float = 1.0
    lambda1: float = 0.0
    lambda2: float = 1.0
    beta: float = 0.1
    n_rounds: int = 200
    max_depth: int = 6
    min_leaf: int = 10
    holdout_fraction: float = 0.2
    seed: int = 0

    def validate(self):
        if not 0.0 < self.tau <= 1.0:
            from .errors import InvalidTau

            raise InvalidTau(f"tau must be in (0, 1], got {self.tau}")
        if self.n_rounds < 1:
            raise ValueError("n_rounds must be >= 1")


@dataclass
class EngineConfig:
    data_dir: str = ""
    ptg_path: str = "ptg.bin"
    cache_path: str = "cache.bin"
    model_path: str = ""  # empty = rerank disabled, primary order served
    listen: str = "127.0.0.1:8340"
    webui_dir: str = ""  # static bundle served under /; empty = API only
    request_timeout_s: float = 5.0
    deterministic: bool = False  # zero out timing fields, disable time budgets
    limits: SearchLimits = field(default_factory=SearchLimits)
    rules: FilterRules = field(default_factory=FilterRules)
    weights: CostWeights = field(default_factory=CostWeights)
    weight_config: WeightConfig = field(default_factory=WeightConfig)
    bind: BindConfig = field(default_factory=BindConfig)


def _apply(obj, table: dict):
    names = {f.name for f in dataclasses.fields(obj)}
    for key, value in table.items():
        if key not in names:
            raise ValueError(f"unknown config key {key!r} for {type(obj).__name__}")
        current = getattr(obj, key)
        if dataclasses.is_dataclass(current) and isinstance(value, dict):
            _apply(current, value)
        elif key == "forbidden_patterns":
            setattr(obj, key, tuple(tuple(p) for p in value))
        else:
            setattr(obj, key, type(current)(value) if not isinstance(current, bool) else bool(value))
    return obj


def load_toml(path: str, cls):
    with open(path, "rb") as fh:
        return _apply(cls(), tomllib.load(fh))
