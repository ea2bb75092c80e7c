"""First-pass ranking: inferior-candidate filtering, grouping, shortlisting."""

import time

import pytest

from polestar.config import CostWeights, FilterRules
from polestar.primary import (
    GROUP_BUS,
    GROUP_METRO,
    GROUP_MIXED,
    SHORTLIST_RANGE,
    filter_inferior,
    jaccard,
    mode_group,
    primary_rank,
)
from polestar.search import RouteCandidate, RouteSegment


def make_candidate(
    lines,
    duration_s,
    distance_m=5000.0,
    fare=3.0,
    walk=(50.0, 50.0, 0.0),
    modes=None,
    stations=None,
):
    """Candidate with one segment per line; stations default to a chain."""
    modes = modes or ["Bus"] * len(lines)
    stations = stations or [f"s{i}" for i in range(len(lines) + 1)]
    segs = tuple(
        RouteSegment(
            line=line,
            mode=mode,
            board=stations[i],
            alight=stations[i + 1],
            intermediate=(),
            distance_m=distance_m / len(lines),
            duration_s=duration_s / len(lines),
            fare=fare / len(lines),
        )
        for i, (line, mode) in enumerate(zip(lines, modes))
    )
    return RouteCandidate(
        segments=segs,
        distance_m=distance_m,
        duration_s=duration_s,
        fare=fare,
        start_walk_m=walk[0],
        end_walk_m=walk[1],
        transfer_walk_m=walk[2],
        wait_s=120.0,
        n_transfers=len(lines) - 1,
        provenance=("Distance",),
        signature="|".join(f"{l}:{stations[i]}>{stations[i+1]}" for i, l in enumerate(lines)),
    )


def test_mode_groups():
    assert mode_group(make_candidate(["B1"], 600)) == GROUP_BUS
    assert mode_group(make_candidate(["M1"], 600, modes=["Metro"])) == GROUP_METRO
    assert mode_group(make_candidate(["B1", "M1"], 900, modes=["Bus", "Metro"])) == GROUP_MIXED


def test_jaccard_identical_and_disjoint():
    a = make_candidate(["B1"], 600)
    b = make_candidate(["B1"], 700)  # same segment set (line, board, alight)
    c = make_candidate(["B2"], 600, stations=["x0", "x1"])
    assert jaccard(a, b) == 1.0
    assert jaccard(a, c) == 0.0


def test_filter_rejects_empty():
    with pytest.raises(ValueError):
        filter_inferior([])


def test_filter_drops_costlier_near_duplicate():
    # ten segments, nine shared -> Jaccard 9/11 > 0.8
    base_st = [f"s{i}" for i in range(11)]
    lines = [f"B{i}" for i in range(10)]
    a = make_candidate(lines, 1000, stations=base_st)
    b_lines = lines[:9] + ["B99"]
    b = make_candidate(b_lines, 1400, stations=base_st)
    assert jaccard(a, b) > 0.8
    kept = filter_inferior([a, b])
    assert [c.signature for c in kept] == [a.signature]


def test_filter_drops_detours():
    short = make_candidate(["B1"], 600, distance_m=1000.0)
    detour = make_candidate(["B2"], 500, distance_m=2500.0, stations=["x0", "x1"])
    kept = filter_inferior([short, detour])
    assert [c.signature for c in kept] == [short.signature]


def test_filter_drops_metro_bus_metro():
    bad = make_candidate(["M1", "B1", "M2"], 1200, modes=["Metro", "Bus", "Metro"])
    ok = make_candidate(["B9"], 900, stations=["y0", "y1"])
    kept = filter_inferior([bad, ok])
    assert [c.signature for c in kept] == [ok.signature]


def test_filter_keeps_at_least_one():
    only = make_candidate(["M1", "B1", "M2"], 1200, modes=["Metro", "Bus", "Metro"])
    kept = filter_inferior([only])
    assert kept == [only]


def test_filter_same_line_sequence_keeps_fastest_variant():
    # same lines ridden in the same order, different transfer stations
    fast = make_candidate(["B1", "B2"], 900, stations=["a", "m1", "z"])
    slow = make_candidate(["B1", "B2"], 1100, stations=["a", "m2", "z"])
    kept = filter_inferior([slow, fast])
    assert [c.signature for c in kept] == [fast.signature]


def test_primary_rank_rejects_empty():
    with pytest.raises(ValueError):
        primary_rank([])


def _sixty_candidates():
    candidates = []
    for i in range(20):
        candidates.append(
            make_candidate([f"B{i}"], 900 + 37 * i, distance_m=4000 + 40 * i,
                           stations=[f"b{i}", f"b{i}x"])
        )
    for i in range(20):
        candidates.append(
            make_candidate([f"M{i}"], 800 + 23 * i, distance_m=4200 + 35 * i,
                           modes=["Metro"], stations=[f"m{i}", f"m{i}x"])
        )
    for i in range(20):
        candidates.append(
            make_candidate([f"B{i}", f"M{i}"], 1000 + 17 * i, distance_m=4100 + 30 * i,
                           modes=["Bus", "Metro"], stations=[f"c{i}", f"c{i}m", f"c{i}x"])
        )
    return candidates


def test_sixty_candidates_reduce_to_shortlist_with_all_groups():
    candidates = _sixty_candidates()
    t0 = time.perf_counter()
    shortlist = primary_rank(candidates)
    elapsed = time.perf_counter() - t0
    lower, upper = SHORTLIST_RANGE
    assert lower <= len(shortlist.candidates) <= upper
    surviving_groups = set(shortlist.groups)
    assert {mode_group(c) for c in shortlist.candidates} == surviving_groups
    assert surviving_groups == {GROUP_BUS, GROUP_METRO, GROUP_MIXED}
    assert elapsed < 0.1


def test_shortlist_signatures_unique_and_deterministic():
    candidates = _sixty_candidates()
    runs = [primary_rank(list(candidates)) for _ in range(3)]
    sigs = [c.signature for c in runs[0].candidates]
    assert len(sigs) == len(set(sigs))
    for r in runs[1:]:
        assert [c.signature for c in r.candidates] == sigs


def test_group_winner_is_first_of_each_group():
    shortlist = primary_rank(_sixty_candidates())
    for group, members in shortlist.groups.items():
        assert members[0] in shortlist.candidates


def test_weighted_cost_ordering_within_group():
    # two bus routes identical except duration: faster one ranks first
    fast = make_candidate(["B1"], 600, stations=["a", "b"])
    slow = make_candidate(["B2"], 1200, stations=["c", "d"])
    filler = make_candidate(["M1"], 900, modes=["Metro"], stations=["e", "f"])
    shortlist = primary_rank([slow, fast, filler], weights=CostWeights(w_time=1.0, w_dist=0.0, w_walk=0.0))
    bus_members = shortlist.groups[GROUP_BUS]
    assert [c.signature for c in bus_members] == [fast.signature, slow.signature]


def test_custom_rules_respected():
    # with a permissive similarity threshold nothing is dropped for overlap
    base_st = [f"s{i}" for i in range(11)]
    a = make_candidate([f"B{i}" for i in range(10)], 1000, stations=base_st)
    b = make_candidate([f"B{i}" for i in range(9)] + ["B99"], 1400, stations=base_st)
    kept = filter_inferior([a, b], FilterRules(theta_sim=1.0))
    assert len(kept) == 2
