"""First-pass ranking: filter inferior candidates, group by transport mode,
sort each group by a weighted cost, emit a diversified 5-7 route shortlist."""

from __future__ import annotations

from dataclasses import dataclass

from .config import CostWeights, FilterRules
from .search import RouteCandidate

GROUP_BUS = "BusOnly"
GROUP_METRO = "MetroOnly"
GROUP_MIXED = "Mixed"
GROUP_OTHER = "Other"

SHORTLIST_RANGE = (5, 7)


def mode_group(candidate: RouteCandidate) -> str:
    modes = {seg.mode for seg in candidate.segments if seg.line is not None}
    if modes == {"Bus"}:
        return GROUP_BUS
    if modes == {"Metro"}:
        return GROUP_METRO
    if len(modes) > 1:
        return GROUP_MIXED
    return GROUP_OTHER


def _segment_set(candidate: RouteCandidate) -> frozenset:
    return frozenset((s.line, s.board, s.alight) for s in candidate.segments)


def jaccard(a: RouteCandidate, b: RouteCandidate) -> float:
    sa, sb = _segment_set(a), _segment_set(b)
    if not sa and not sb:
        return 1.0
    return len(sa & sb) / len(sa | sb)


def filter_inferior(candidates: list[RouteCandidate], rules: FilterRules | None = None) -> list[RouteCandidate]:
    """Drop near-duplicates of cheaper routes, detours and forbidden transfer
    mode patterns; always keeps at least one candidate."""
    if not candidates:
        raise ValueError("candidates must be non-empty")
    rules = rules or FilterRules()
    rules.validate()
    min_dist = min(c.distance_m for c in candidates)

    def forbidden(c: RouteCandidate) -> bool:
        modes = c.mode_sequence()
        for pattern in rules.forbidden_patterns:
            n = len(pattern)
            if any(modes[i : i + n] == tuple(pattern) for i in range(len(modes) - n + 1)):
                return True
        return False

    # candidates riding the same lines in the same order but transferring at
    # different stations are near-duplicates; keep the fastest variant
    by_line_seq: dict[tuple, RouteCandidate] = {}
    for cand in sorted(candidates, key=lambda c: (c.duration_s, c.signature)):
        key = tuple(s.line for s in cand.segments)
        by_line_seq.setdefault(key, cand)

    kept: list[RouteCandidate] = []
    # cheapest first so similarity only ever removes the costlier twin
    for cand in sorted(by_line_seq.values(), key=lambda c: (c.duration_s, c.signature)):
        if cand.distance_m > rules.theta_detour * min_dist:
            continue
        if forbidden(cand):
            continue
        if any(jaccard(cand, k) > rules.theta_sim for k in kept):
            continue
        kept.append(cand)
    if not kept:  # keep-one guarantee
        kept = [min(candidates, key=lambda c: (c.duration_s, c.signature))]
    return kept


@dataclass
class Shortlist:
    candidates: list[RouteCandidate]
    groups: dict[str, list[RouteCandidate]]


def _normalized_cost(candidates: list[RouteCandidate], weights: CostWeights) -> dict[str, float]:
    """Min-max normalize duration/distance/walk across candidates, then weight."""

    def norm(values):
        lo, hi = min(values), max(values)
        if hi == lo:
            return [0.0] * len(values)
        return [(v - lo) / (hi - lo) for v in values]

    durations = norm([c.duration_s for c in candidates])
    distances = norm([c.distance_m for c in candidates])
    walks = norm([c.start_walk_m + c.end_walk_m + c.transfer_walk_m for c in candidates])
    return {
        c.signature: weights.w_time * t + weights.w_dist * d + weights.w_walk * w
        for c, t, d, w in zip(candidates, durations, distances, walks)
    }


def primary_rank(
    candidates: list[RouteCandidate],
    rules: FilterRules | None = None,
    weights: CostWeights | None = None,
    shortlist_range: tuple[int, int] = SHORTLIST_RANGE,
) -> Shortlist:
    if not candidates:
        raise ValueError("candidates must be non-empty")
    weights = weights or CostWeights()
    weights.validate()
    lower, upper = shortlist_range

    kept = filter_inferior(candidates, rules)
    cost = _normalized_cost(kept, weights)

    groups: dict[str, list[RouteCandidate]] = {}
    for cand in kept:
        groups.setdefault(mode_group(cand), []).append(cand)
    for members in groups.values():
        members.sort(key=lambda c: (cost[c.signature], c.signature))
    # groups ordered by their best member's cost
    ordered_groups = sorted(groups, key=lambda g: (cost[groups[g][0].signature], g))

    shortlist: list[RouteCandidate] = []
    # round 1: every group's winner (diversity guarantee, capped at upper)
    for g in ordered_groups:
        if len(shortlist) >= upper:
            break
        shortlist.append(groups[g][0])
    # further rounds: round-robin next-best until the shortlist reaches range
    depth = 1
    while len(shortlist) < lower:
        added = False
        for g in ordered_groups:
            if len(shortlist) >= upper:
                break
            if depth < len(groups[g]):
                shortlist.append(groups[g][depth])
                added = True
                if len(shortlist) >= lower:
                    break
        if not added:
            break
        depth += 1
    return Shortlist(candidates=shortlist, groups=groups)
