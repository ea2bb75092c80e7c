"""Synthetic city and query-log generators: determinism and planted signals."""

from polestar.ptg import dataset_fingerprint
from polestar.synth import (
    BASE_TS,
    is_rush_hour,
    planted_utility,
    synth_city,
    synth_query_log,
)

from .test_primary import make_candidate


def test_city_is_deterministic_per_seed():
    a = synth_city(n_stations=25, n_lines=8, seed=42)
    b = synth_city(n_stations=25, n_lines=8, seed=42)
    assert dataset_fingerprint({a.city: a}) == dataset_fingerprint({b.city: b})
    c = synth_city(n_stations=25, n_lines=8, seed=43)
    assert dataset_fingerprint({a.city: a}) != dataset_fingerprint({c.city: c})


def test_city_shape():
    ds = synth_city(n_stations=36, n_lines=10, seed=1)
    assert len(ds.stations) == 36
    assert len(ds.lines) == 10
    for line in ds.lines.values():
        assert len(line.stops) >= 3
        for stop in line.stops:
            assert stop in ds.stations
    road_ids = {i.id for i in ds.road.intersections}
    for seg in ds.road.segments:
        assert seg.from_id in road_ids and seg.to_id in road_ids
    assert len(ds.weather) == 7 * 8  # 7 days, one record per 3 hours
    for poi in ds.pois:
        assert any(s.id == poi.projected_segment for s in ds.road.segments)


def test_is_rush_hour():
    assert is_rush_hour(BASE_TS + 8 * 3600)
    assert is_rush_hour(BASE_TS + 18 * 3600)
    assert not is_rush_hour(BASE_TS + 12 * 3600)
    assert not is_rush_hour(BASE_TS + 2 * 3600)


def test_planted_utility_regimes():
    fast_far = make_candidate(["B1"], 600, distance_m=9000.0, fare=6.0, stations=["a", "b"])
    slow_near = make_candidate(["B2"], 1800, distance_m=3000.0, fare=6.0, stations=["c", "d"])
    cheap_transfer = make_candidate(
        ["B3", "B4"], 700, distance_m=3500.0, fare=2.0, stations=["e", "f", "g"]
    )
    rush = BASE_TS + 8 * 3600  # Monday morning
    weekday_noon = BASE_TS + 12 * 3600
    weekend_noon = BASE_TS + 5 * 86400 + 12 * 3600  # Saturday
    # rush: pure ETA
    assert planted_utility(fast_far, rush) > planted_utility(slow_near, rush)
    # weekend: pure distance
    assert planted_utility(slow_near, weekend_noon) > planted_utility(fast_far, weekend_noon)
    # weekday off-peak: transfer count dominates fare dominates distance
    assert planted_utility(slow_near, weekday_noon) > planted_utility(cheap_transfer, weekday_noon)
    cheap_direct = make_candidate(["B5"], 1200, distance_m=8000.0, fare=2.0, stations=["h", "i"])
    assert planted_utility(cheap_direct, weekday_noon) > planted_utility(slow_near, weekday_noon)


def test_query_log_deterministic(grid_engine):
    a = synth_query_log(grid_engine, 30, seed=11)
    b = synth_query_log(grid_engine, 30, seed=11)
    assert a == b
    c = synth_query_log(grid_engine, 30, seed=12)
    assert a != c


def test_query_log_entries_well_formed(grid_engine):
    entries = synth_query_log(grid_engine, 40, seed=3)
    assert len(entries) == 40
    for e in entries:
        assert len(e.presented_routes) >= 2
        ids = {r.route_id for r in e.presented_routes}
        for fb in e.feedback:
            assert fb.route_id in ids
            assert fb.timestamp > e.timestamp


def test_zero_epsilon_feedback_is_argmax_utility(grid_engine):
    from polestar.search import RouteCandidate

    entries = synth_query_log(
        grid_engine, 40, seed=7, epsilon=0.0, no_feedback_fraction=0.0
    )
    for e in entries:
        cands = [RouteCandidate.from_dict(r.features) for r in e.presented_routes]
        utilities = [planted_utility(c, e.timestamp) for c in cands]
        best = max(range(len(cands)), key=lambda i: (utilities[i], -i))
        first = min(e.feedback, key=lambda fb: fb.timestamp)
        assert first.route_id == e.presented_routes[best].route_id


def test_rush_feedback_mostly_fastest(grid_engine):
    """At epsilon 0.05 nearly all rush-hour feedback lands on the minimum-ETA
    shortlist member."""
    from polestar.search import RouteCandidate

    entries = synth_query_log(
        grid_engine, 1000, seed=2, epsilon=0.05, no_feedback_fraction=0.0, rush_fraction=1.0
    )
    # weekend queries stay off-peak even at rush_fraction 1.0, so roughly
    # seven in ten queries land in a rush window
    rush_entries = [e for e in entries if is_rush_hour(e.timestamp) and e.feedback]
    assert len(rush_entries) >= 600
    hits = 0
    for e in rush_entries:
        cands = [RouteCandidate.from_dict(r.features) for r in e.presented_routes]
        min_eta = min(c.duration_s for c in cands)
        first = min(e.feedback, key=lambda fb: fb.timestamp)
        chosen = next(c for c, r in zip(cands, e.presented_routes) if r.route_id == first.route_id)
        hits += int(chosen.duration_s == min_eta)
    assert hits / len(rush_entries) >= 0.95


def test_no_feedback_fraction_respected(grid_engine):
    entries = synth_query_log(grid_engine, 200, seed=5, no_feedback_fraction=0.5)
    silent = sum(1 for e in entries if not e.feedback)
    assert 0.35 <= silent / len(entries) <= 0.65
