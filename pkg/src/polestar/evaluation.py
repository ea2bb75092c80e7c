"""Offline evaluation and training harness over recorded query logs.

Relevance comes from implicit feedback: the earliest-feedback route of a
query grades 2, any other route with feedback grades 1, the rest 0.  Ranking
quality is NDCG@k with gain 2^grade - 1 and log2(i + 1) discounts.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import ranker
from .config import RankParams
from .features import FeatureEnvironment, FeatureSchema, TravelContext, build_raw_features
from .model import PresentedRoute, QueryLogEntry
from .search import RouteCandidate

log = logging.getLogger(__name__)

BASELINES = ("Shortest", "Fastest", "LeastTransfer")
_BASELINE_KEYS = {
    "Shortest": lambda c: c.distance_m,
    "Fastest": lambda c: c.duration_s,
    "LeastTransfer": lambda c: c.n_transfers,
}


# ---------------------------------------------------------------------------
# Relevance and NDCG
# ---------------------------------------------------------------------------

def relevance_grades(entry: QueryLogEntry) -> dict[str, int]:
    """Graded relevance for every presented route of one query."""
    grades = {r.route_id: 0 for r in entry.presented_routes}
    if not entry.feedback:
        return grades
    earliest: dict[str, int] = {}
    for fb in entry.feedback:
        if fb.route_id in grades and fb.route_id not in earliest:
            earliest[fb.route_id] = fb.timestamp
    if not earliest:
        return grades
    ordered = sorted(earliest, key=lambda rid: (earliest[rid], rid))
    grades[ordered[0]] = 2
    for rid in ordered[1:]:
        grades[rid] = 1
    return grades


def dcg_at_k(gains: list[float], k: int) -> float:
    return sum(g / math.log2(i + 2) for i, g in enumerate(gains[:k]))


def ndcg_at_k(ranked_ids: list[str], grades: dict[str, int], k: int) -> float:
    """NDCG@k; returns 0.0 when no route is relevant (IDCG = 0)."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    gains = [2.0 ** grades.get(rid, 0) - 1.0 for rid in ranked_ids]
    ideal = sorted((2.0 ** g - 1.0 for g in grades.values()), reverse=True)
    idcg = dcg_at_k(ideal, k)
    if idcg == 0.0:
        return 0.0
    return dcg_at_k(gains, k) / idcg


# ---------------------------------------------------------------------------
# Rankers over logged shortlists
# ---------------------------------------------------------------------------

def _candidates(routes: tuple[PresentedRoute, ...]) -> list[RouteCandidate]:
    return [RouteCandidate.from_dict(r.features) for r in routes]


def baseline_order(routes: tuple[PresentedRoute, ...], method: str) -> list[str]:
    """Route ids sorted ascending by one scalar; ties break by signature."""
    key = _BASELINE_KEYS[method]
    cands = _candidates(routes)
    order = sorted(range(len(cands)), key=lambda i: (key(cands[i]), cands[i].signature))
    return [routes[i].route_id for i in order]


def reranker_order(entry: QueryLogEntry, env: FeatureEnvironment, model: ranker.RankModel) -> list[str]:
    """Route ids in descending model-score order, logged order breaking ties."""
    cands = _candidates(entry.presented_routes)
    context = TravelContext(timestamp=entry.timestamp, origin=entry.origin, destination=entry.destination)
    raw = [build_raw_features(c, cands, context, env) for c in cands]
    scores = model.score_many(model.schema.vectorize_many(raw))
    order = sorted(range(len(cands)), key=lambda i: (-scores[i], i))
    return [entry.presented_routes[i].route_id for i in order]


def evaluate(
    entries: list[QueryLogEntry],
    env: FeatureEnvironment | None = None,
    model: ranker.RankModel | None = None,
    ks: tuple[int, ...] = (1, 3, 5),
) -> dict[str, dict[int, float]]:
    """Mean NDCG@k per ranking method over queries that have feedback."""
    scored = [e for e in entries if e.feedback and e.presented_routes]
    if not scored:
        raise ValueError("no query log entries with feedback to evaluate")
    table: dict[str, dict[int, float]] = {}
    methods: list[tuple[str, callable]] = [
        (m, lambda e, m=m: baseline_order(e.presented_routes, m)) for m in BASELINES
    ]
    if model is not None:
        if env is None:
            raise ValueError("reranker evaluation needs a feature environment")
        methods.append(("Reranker", lambda e: reranker_order(e, env, model)))
    for name, rank_fn in methods:
        sums = {k: 0.0 for k in ks}
        for entry in scored:
            grades = relevance_grades(entry)
            ranked = rank_fn(entry)
            for k in ks:
                sums[k] += ndcg_at_k(ranked, grades, k)
        table[name] = {k: sums[k] / len(scored) for k in ks}
    return table


# ---------------------------------------------------------------------------
# Training from a log
# ---------------------------------------------------------------------------

def split_entries(
    entries: list[QueryLogEntry], holdout_fraction: float, seed: int
) -> tuple[list[QueryLogEntry], list[QueryLogEntry]]:
    """Deterministic query-level train/holdout split."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(entries))
    n_hold = int(round(len(entries) * holdout_fraction))
    hold = set(perm[:n_hold].tolist())
    train = [e for i, e in enumerate(entries) if i not in hold]
    holdout = [e for i, e in enumerate(entries) if i in hold]
    return train, holdout


def prepare_training(
    entries: list[QueryLogEntry], env: FeatureEnvironment, schema: FeatureSchema | None = None
) -> tuple[np.ndarray, list[tuple[int, int]], FeatureSchema]:
    """Instance matrix, preference pairs and a fitted schema from log entries."""
    raw_rows: list[dict] = []
    offsets: list[int] = []
    for entry in entries:
        offsets.append(len(raw_rows))
        cands = _candidates(entry.presented_routes)
        context = TravelContext(timestamp=entry.timestamp, origin=entry.origin, destination=entry.destination)
        raw_rows.extend(build_raw_features(c, cands, context, env) for c in cands)
    if not raw_rows:
        raise ValueError("query log produced no training instances")
    if schema is None:
        schema = FeatureSchema.fit(raw_rows)
    X = schema.vectorize_many(raw_rows)
    pairs = ranker.make_pair_indices(entries, offsets)
    return X, pairs, schema


def train_from_log(
    entries: list[QueryLogEntry],
    env: FeatureEnvironment,
    params: RankParams | None = None,
) -> tuple[ranker.RankModel, dict[str, dict[int, float]]]:
    """Train on a split of the log, report holdout NDCG against baselines."""
    params = params or RankParams()
    train_set, holdout = split_entries(entries, params.holdout_fraction, params.seed)
    if not train_set:
        raise ValueError("empty training split")
    X, pairs, schema = prepare_training(train_set, env)
    t0 = time.perf_counter()
    model = ranker.train(X, pairs, params, schema)
    log.info(
        "trained %d rounds on %d instances / %d pairs in %.1fs",
        params.n_rounds, len(X), len(pairs), time.perf_counter() - t0,
    )
    report = evaluate(holdout or train_set, env, model) if any(e.feedback for e in (holdout or train_set)) else {}
    return model, report


# ---------------------------------------------------------------------------
# Latency benchmark
# ---------------------------------------------------------------------------

@dataclass
class LatencyBucket:
    label: str
    count: int = 0
    total_ms: list[float] = field(default_factory=list)
    routing_ms: list[float] = field(default_factory=list)

    def summary(self) -> dict:
        total = np.array(self.total_ms) if self.total_ms else np.zeros(1)
        routing = np.array(self.routing_ms) if self.routing_ms else np.zeros(1)
        return {
            "bucket": self.label,
            "queries": self.count,
            "total_ms_mean": float(total.mean()),
            "total_ms_p95": float(np.percentile(total, 95)),
            "routing_ms_mean": float(routing.mean()),
            "routing_ms_p95": float(np.percentile(routing, 95)),
        }


def latency_report(
    engine,
    queries: list[tuple],
    bucket_edges_m: tuple[float, ...] = (0.0, 2000.0, 5000.0, 10000.0, float("inf")),
) -> dict:
    """Run queries through the full pipeline, bucketed by straight-line
    origin-destination distance.  Buckets no query falls into are omitted
    and listed under ``empty_buckets``."""
    from .geo import haversine_m

    labels = [
        f"{int(lo)}-{'inf' if math.isinf(hi) else int(hi)}m"
        for lo, hi in zip(bucket_edges_m, bucket_edges_m[1:])
    ]
    buckets = {label: LatencyBucket(label) for label in labels}
    statuses: dict[str, int] = {}
    for origin, dest, ts in queries:
        d = haversine_m(origin, dest)
        idx = 0
        for i, (lo, hi) in enumerate(zip(bucket_edges_m, bucket_edges_m[1:])):
            if lo <= d < hi:
                idx = i
                break
        t0 = time.perf_counter()
        result = engine.query(origin, dest, ts)
        elapsed_ms = (time.perf_counter() - t0) * 1000.0
        statuses[result.status] = statuses.get(result.status, 0) + 1
        b = buckets[labels[idx]]
        b.count += 1
        b.total_ms.append(elapsed_ms)
        b.routing_ms.append(result.timings.routing_s * 1000.0)
    filled = [b.summary() for b in buckets.values() if b.count]
    empty = [label for label, b in buckets.items() if not b.count]
    all_total = [ms for b in buckets.values() for ms in b.total_ms]
    all_routing = [ms for b in buckets.values() for ms in b.routing_ms]
    return {
        "buckets": filled,
        "empty_buckets": empty,
        "statuses": statuses,
        "overall": {
            "queries": len(queries),
            "total_ms_p95": float(np.percentile(all_total, 95)) if all_total else 0.0,
            "routing_ms_p95": float(np.percentile(all_routing, 95)) if all_routing else 0.0,
        },
    }
