"""Route candidate generation.

Per query: a bidirectional shortest-path search runs on each of the three
virtual graphs (forward labels on the graph, reverse labels on the reversed
graph), candidate paths are enumerated per meeting vertex in nondecreasing
cost order, translated into physical route segments, augmented with parallel
same-endpoint edges, then merged with dedup, cycle and transfer-count
filters.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field

import numpy as np

from .binding import BoundStation
from .config import SearchLimits, WeightConfig
from .errors import InconsistentMapping
from .geo import haversine_m
from .kernels import csr_dijkstra
from .ptg import COST_KINDS, CityPTG, CostKind, PhysicalGraph, VirtualGraph

STATUS_OK = "ok"
STATUS_UNREACHABLE = "unreachable"
STATUS_TIME_BUDGET = "time_budget_exceeded"
STATUS_WALK = "walk_only"


@dataclass(frozen=True)
class VirtualRoute:
    nodes: tuple[int, ...]
    cost: float
    cost_kind: CostKind


@dataclass
class SearchResult:
    routes: list[VirtualRoute]
    status: str


@dataclass(frozen=True)
class RouteSegment:
    line: str | None  # None marks a walk leg
    mode: str
    board: str
    alight: str
    intermediate: tuple[str, ...]
    distance_m: float
    duration_s: float
    fare: float


@dataclass
class RouteCandidate:
    segments: tuple[RouteSegment, ...]
    distance_m: float
    duration_s: float
    fare: float
    start_walk_m: float
    end_walk_m: float
    transfer_walk_m: float
    wait_s: float
    n_transfers: int
    provenance: tuple[str, ...]
    signature: str

    @property
    def route_id(self) -> str:
        return hashlib.sha1(self.signature.encode()).hexdigest()[:12]

    def station_sequence(self) -> list[str]:
        seq: list[str] = []
        for i, seg in enumerate(self.segments):
            stations = [seg.board, *seg.intermediate, seg.alight]
            seq.extend(stations if i == 0 else stations[1:])
        return seq

    def mode_sequence(self) -> tuple[str, ...]:
        return tuple(seg.mode for seg in self.segments)

    def to_dict(self) -> dict:
        return {
            "route_id": self.route_id,
            "signature": self.signature,
            "segments": [
                {
                    "line": s.line,
                    "mode": s.mode,
                    "board": s.board,
                    "alight": s.alight,
                    "intermediate": list(s.intermediate),
                    "distance_m": s.distance_m,
                    "duration_s": s.duration_s,
                    "fare": s.fare,
                }
                for s in self.segments
            ],
            "totals": {
                "distance_m": self.distance_m,
                "duration_s": self.duration_s,
                "fare": self.fare,
                "start_walk_m": self.start_walk_m,
                "end_walk_m": self.end_walk_m,
                "transfer_walk_m": self.transfer_walk_m,
                "wait_s": self.wait_s,
                "n_transfers": self.n_transfers,
            },
            "provenance": list(self.provenance),
        }

    @classmethod
    def from_dict(cls, rec: dict) -> "RouteCandidate":
        segs = tuple(
            RouteSegment(
                line=s["line"],
                mode=s["mode"],
                board=s["board"],
                alight=s["alight"],
                intermediate=tuple(s["intermediate"]),
                distance_m=s["distance_m"],
                duration_s=s["duration_s"],
                fare=s["fare"],
            )
            for s in rec["segments"]
        )
        t = rec["totals"]
        return cls(
            segments=segs,
            distance_m=t["distance_m"],
            duration_s=t["duration_s"],
            fare=t["fare"],
            start_walk_m=t["start_walk_m"],
            end_walk_m=t["end_walk_m"],
            transfer_walk_m=t["transfer_walk_m"],
            wait_s=t.get("wait_s", 0.0),
            n_transfers=t["n_transfers"],
            provenance=tuple(rec.get("provenance", ())),
            signature=rec["signature"],
        )


@dataclass
class CandidateSet:
    candidates: list[RouteCandidate]
    status: str
    elapsed_routing_s: float = 0.0


# ---------------------------------------------------------------------------
# Bidirectional search
# ---------------------------------------------------------------------------

def bidirectional_dijkstra(
    g: VirtualGraph,
    sources: list[tuple[int, float]],
    targets: list[tuple[int, float]],
    limits: SearchLimits | None = None,
    deadline: float | None = None,
) -> SearchResult:
    """Meeting-vertex k-best paths between source and target sets.

    The first route is an exact shortest path (initial and terminal costs
    included); subsequent routes are the best paths through the remaining
    meeting vertices, in nondecreasing cost, deduplicated by node sequence.
    """
    if not sources or not targets:
        raise ValueError("sources and targets must be non-empty")
    limits = limits or SearchLimits()
    indptr_f, idx_f, w_f, _ = g.csr(reverse=False)
    indptr_r, idx_r, w_r, _ = g.csr(reverse=True)

    src_nodes = np.array([n for n, _ in sources], dtype=np.int64)
    src_costs = np.array([c for _, c in sources], dtype=np.float64)
    tgt_nodes = np.array([n for n, _ in targets], dtype=np.int64)
    tgt_costs = np.array([c for _, c in targets], dtype=np.float64)

    d_f, parent_f, _ = csr_dijkstra(indptr_f, idx_f, w_f, src_nodes, src_costs)
    d_r, parent_r, _ = csr_dijkstra(indptr_r, idx_r, w_r, tgt_nodes, tgt_costs)

    total = d_f + d_r
    finite = np.flatnonzero(np.isfinite(total))
    if len(finite) == 0:
        return SearchResult([], STATUS_UNREACHABLE)
    # every vertex of one joined path reconstructs the same node sequence;
    # keep only the first of each such run (x duplicates its forward parent
    # p whenever p's reverse parent is x) to avoid rebuilding duplicates
    pf = parent_f[finite]
    has_pf = pf >= 0
    dup = np.zeros(len(finite), dtype=bool)
    dup[has_pf] = parent_r[pf[has_pf]] == finite[has_pf]
    finite = finite[~dup]
    order = finite[np.lexsort((finite, total[finite]))]

    # min edge weight per node pair, for recomputing path costs left to right
    # in the same accumulation order a single-direction search would use
    min_w = g.min_weight()
    src_cost: dict[int, float] = {}
    for node, cost in sources:
        if node not in src_cost or cost < src_cost[node]:
            src_cost[node] = cost
    tgt_cost: dict[int, float] = {}
    for node, cost in targets:
        if node not in tgt_cost or cost < tgt_cost[node]:
            tgt_cost[node] = cost

    routes: list[VirtualRoute] = []
    seen: set[tuple[int, ...]] = set()
    status = STATUS_OK
    for x in order:
        if len(routes) >= limits.max_candidates:
            break
        # a blown budget still returns the best route found so far
        if routes and deadline is not None and time.monotonic() > deadline:
            status = STATUS_TIME_BUDGET
            break
        fwd = []
        u = int(x)
        while u != -1:
            fwd.append(u)
            u = int(parent_f[u])
        fwd.reverse()
        u = int(parent_r[int(x)])
        while u != -1:
            fwd.append(u)
            u = int(parent_r[u])
        nodes = tuple(fwd)
        if nodes in seen:
            continue
        seen.add(nodes)
        cost = src_cost[nodes[0]]
        for a, b in zip(nodes, nodes[1:]):
            cost += min_w[(a, b)]
        cost += tgt_cost[nodes[-1]]
        routes.append(VirtualRoute(nodes=nodes, cost=cost, cost_kind=g.cost_kind))
    routes.sort(key=lambda r: (r.cost, r.nodes))
    return SearchResult(routes, status)


# ---------------------------------------------------------------------------
# Translation and augmentation
# ---------------------------------------------------------------------------

def _line_slice(line, board: str, alight: str) -> tuple[tuple[str, ...], float]:
    """Intermediate stops and ride length between board and alight."""
    try:
        i = line.stops.index(board)
        j = line.stops.index(alight, i + 1)
    except ValueError as exc:
        raise InconsistentMapping(f"line {line.id} does not pass {board} before {alight}") from exc
    return line.stops[i + 1 : j], i, j


def _make_segment(cp: CityPTG, line_id: str, board: str, alight: str) -> RouteSegment:
    line = cp.lines[line_id]
    intermediate, i, j = _line_slice(line, board, alight)
    length = 0.0
    for hop in cp.line_hop_lengths(line_id)[i:j]:
        length += hop
    return RouteSegment(
        line=line_id,
        mode=line.mode.value,
        board=board,
        alight=alight,
        intermediate=intermediate,
        distance_m=length,
        duration_s=length / line.speed_mps,
        fare=line.fare,
    )


def _merge_same_line(segments: list[RouteSegment], cp: CityPTG) -> list[RouteSegment]:
    merged: list[RouteSegment] = []
    for seg in segments:
        if merged and merged[-1].line == seg.line:
            merged[-1] = _make_segment(cp, seg.line, merged[-1].board, seg.alight)
        else:
            merged.append(seg)
    return merged


def finalize_candidate(
    cp: CityPTG,
    segments: list[RouteSegment],
    start_walk_m: float,
    end_walk_m: float,
    config: WeightConfig,
    provenance: tuple[str, ...],
) -> RouteCandidate:
    segments = _merge_same_line(segments, cp)
    n_transfers = max(0, len(segments) - 1)
    wait_s = sum(cp.lines[s.line].headway_s / 2.0 for s in segments)
    ride_m = sum(s.distance_m for s in segments)
    ride_s = sum(s.duration_s for s in segments)
    transfer_walk_m = n_transfers * config.transfer_walk_m
    walk_s = (start_walk_m + end_walk_m + transfer_walk_m) / config.walk_speed_mps
    signature = "|".join(f"{s.line}:{s.board}>{s.alight}" for s in segments)
    return RouteCandidate(
        segments=tuple(segments),
        distance_m=start_walk_m + ride_m + transfer_walk_m + end_walk_m,
        duration_s=ride_s + wait_s + walk_s + n_transfers * config.transfer_penalty_s,
        fare=sum(s.fare for s in segments),
        start_walk_m=start_walk_m,
        end_walk_m=end_walk_m,
        transfer_walk_m=transfer_walk_m,
        wait_s=wait_s,
        n_transfers=n_transfers,
        provenance=provenance,
        signature=signature,
    )


def translate(
    cp: CityPTG,
    gv: VirtualGraph,
    vr: VirtualRoute,
    start_walk_m: float = 0.0,
    end_walk_m: float = 0.0,
    config: WeightConfig | None = None,
) -> RouteCandidate:
    """Collapse maximal same-line virtual runs into physical route segments;
    totals are recomputed from line data, not from the single-kind cost."""
    config = config or WeightConfig()
    nodes = [gv.nodes[i] for i in vr.nodes]
    for v in nodes:
        line = cp.lines.get(v.line)
        if line is None or v.physical not in line.stops:
            raise InconsistentMapping(f"virtual node {v.id} maps to {v.physical} not on line {v.line}")
    segments: list[RouteSegment] = []
    run_start = 0
    for i in range(1, len(nodes) + 1):
        end_of_run = i == len(nodes) or nodes[i].line != nodes[run_start].line
        if end_of_run:
            board, alight = nodes[run_start].physical, nodes[i - 1].physical
            if board != alight:
                segments.append(_make_segment(cp, nodes[run_start].line, board, alight))
            run_start = i
    return finalize_candidate(cp, segments, start_walk_m, end_walk_m, config, (vr.cost_kind.value,))


def augment(cp: CityPTG, route: RouteCandidate, config: WeightConfig | None = None) -> list[RouteCandidate]:
    """One new candidate per parallel physical edge per segment (greedy
    single-segment replacement); the input route is untouched."""
    return _augment_variants(cp, route, config or WeightConfig(), None)[0]


def _augment_variants(
    cp: CityPTG,
    route: RouteCandidate,
    config: WeightConfig,
    skip_signatures,
) -> tuple[list[RouteCandidate], list[str]]:
    """Augmented variants plus the signatures already present in
    ``skip_signatures`` that were recognized without being rebuilt (only
    possible when the swap cannot merge with a neighboring segment)."""
    sig_parts = [f"{s.line}:{s.board}>{s.alight}" for s in route.segments]
    out: list[RouteCandidate] = []
    skipped: list[str] = []
    for i, seg in enumerate(route.segments):
        if seg.line is None:
            continue
        for edge_id in cp.physical.parallel.get((seg.board, seg.alight), ()):
            edge = cp.physical.edges[edge_id]
            if edge.line == seg.line:
                continue
            if skip_signatures is not None:
                merges = (i > 0 and route.segments[i - 1].line == edge.line) or (
                    i + 1 < len(route.segments) and route.segments[i + 1].line == edge.line
                )
                if not merges:
                    sig = "|".join(
                        sig_parts[:i] + [f"{edge.line}:{seg.board}>{seg.alight}"] + sig_parts[i + 1 :]
                    )
                    if sig in skip_signatures:
                        skipped.append(sig)
                        continue
            replaced = list(route.segments)
            replaced[i] = _make_segment(cp, edge.line, seg.board, seg.alight)
            out.append(
                finalize_candidate(
                    cp, replaced, route.start_walk_m, route.end_walk_m, config, route.provenance
                )
            )
    return out, skipped


# ---------------------------------------------------------------------------
# Full candidate generation
# ---------------------------------------------------------------------------

def _walk_cost(meters: float, kind: CostKind, config: WeightConfig) -> float:
    if kind is CostKind.TRAVEL_TIME:
        return meters / config.walk_speed_mps
    return meters  # Distance and WalkDistance both count walking meters


def generate_candidates(
    cp: CityPTG,
    origins: list[BoundStation],
    dests: list[BoundStation],
    limits: SearchLimits | None = None,
    config: WeightConfig | None = None,
    time_budget: bool = True,
) -> CandidateSet:
    """Run the per-cost-kind searches, translate, augment, filter and merge."""
    if not origins or not dests:
        raise ValueError("need at least one origin and one destination binding")
    limits = limits or SearchLimits()
    config = config or WeightConfig()
    t0 = time.monotonic()
    deadline = t0 + limits.max_time_ms / 1000.0 if time_budget else None

    origin_walk = {b.station_id: b.total_distance_m for b in origins}
    dest_walk = {b.station_id: b.total_distance_m for b in dests}
    if set(origin_walk) == set(dest_walk):
        return CandidateSet([], STATUS_WALK, time.monotonic() - t0)

    kept: dict[str, RouteCandidate] = {}
    status = STATUS_OK
    any_reachable = False
    # node sequences that ride the same lines between the same stations all
    # translate to one candidate (same-line runs merge), and the three
    # virtual graphs share node ids; memoize per line-run skeleton so each
    # distinct candidate is built once across sequences and cost kinds
    translated: dict[tuple, list[str]] = {}

    def _skeleton(gv: VirtualGraph, node_ids: tuple[int, ...]) -> tuple:
        runs: list[list[str]] = []
        current = None
        for vid in node_ids:
            v = gv.nodes[vid]
            if v.line != current:
                runs.append([v.line, v.physical, v.physical])
                current = v.line
            else:
                runs[-1][2] = v.physical
        return tuple((line, a, b) for line, a, b in runs)

    def admit(cand: RouteCandidate) -> str | None:
        nonlocal any_reachable
        if not cand.segments:
            return None
        if cand.n_transfers > limits.max_transfers:
            return None
        seq = cand.station_sequence()
        if len(seq) != len(set(seq)):
            return None  # cycle through a repeated physical station
        prev = kept.get(cand.signature)
        if prev is None:
            kept[cand.signature] = cand
        else:
            prev_prov = set(prev.provenance) | set(cand.provenance)
            prev.provenance = tuple(sorted(prev_prov))
        any_reachable = True
        return cand.signature

    for kind in COST_KINDS:
        if len(kept) >= limits.max_candidates:
            break
        # run at least the first cost kind so a blown budget still answers
        if kept and deadline is not None and time.monotonic() > deadline:
            status = STATUS_TIME_BUDGET
            break
        gv = cp.virtuals[kind]
        sources, targets = [], []
        for b in origins:
            for vid in cp.virtual_nodes_at(b.station_id):
                cost = _walk_cost(b.total_distance_m, kind, config)
                if kind is CostKind.TRAVEL_TIME:
                    cost += cp.lines[gv.nodes[vid].line].headway_s / 2.0  # boarding wait
                sources.append((vid, cost))
        for b in dests:
            for vid in cp.virtual_nodes_at(b.station_id):
                targets.append((vid, _walk_cost(b.total_distance_m, kind, config)))
        if not sources or not targets:
            continue
        result = bidirectional_dijkstra(gv, sources, targets, limits, deadline)
        if result.status == STATUS_TIME_BUDGET:
            status = STATUS_TIME_BUDGET
        for vr in result.routes:
            memo_key = _skeleton(gv, vr.nodes)
            prior = translated.get(memo_key)
            if prior is not None:
                for sig in prior:
                    prev = kept.get(sig)
                    if prev is not None:
                        prev.provenance = tuple(sorted(set(prev.provenance) | {kind.value}))
                        any_reachable = True
                continue
            first_station = gv.nodes[vr.nodes[0]].physical
            last_station = gv.nodes[vr.nodes[-1]].physical
            cand = translate(
                cp,
                gv,
                vr,
                start_walk_m=origin_walk.get(first_station, 0.0),
                end_walk_m=dest_walk.get(last_station, 0.0),
                config=config,
            )
            produced = []
            sig = admit(cand)
            if sig is not None:
                produced.append(sig)
            variants, already_kept = _augment_variants(cp, cand, config, kept)
            for aug in variants:
                sig = admit(aug)
                if sig is not None:
                    produced.append(sig)
            for sig in already_kept:
                prev = kept[sig]
                prev.provenance = tuple(sorted(set(prev.provenance) | set(cand.provenance)))
                produced.append(sig)
            translated[memo_key] = produced
            if len(kept) >= limits.max_candidates:
                break

    if not any_reachable and status != STATUS_TIME_BUDGET:
        return CandidateSet([], STATUS_UNREACHABLE, time.monotonic() - t0)
    return CandidateSet(list(kept.values()), status, time.monotonic() - t0)
