"""Geographic primitives: distances, projections, grid index."""

import math

import pytest
from hypothesis import given, strategies as st

from polestar.geo import (
    EARTH_RADIUS_M,
    GeoPoint,
    GridIndex,
    LocalProjection,
    haversine_m,
    polyline_length_m,
    project_point_to_segment,
)

from .conftest import BASE_LAT, meters, pt


def test_geopoint_validation():
    with pytest.raises(ValueError):
        GeoPoint(91.0, 0.0)
    with pytest.raises(ValueError):
        GeoPoint(0.0, -181.0)
    GeoPoint(90.0, 180.0)  # boundary values are legal


def test_haversine_zero_and_symmetry():
    a, b = pt(0, 0), pt(300, 400)
    assert haversine_m(a, a) == 0.0
    assert haversine_m(a, b) == haversine_m(b, a)


def test_haversine_one_degree_latitude():
    # one degree of latitude is R * pi/180 regardless of longitude
    a = GeoPoint(10.0, 30.0)
    b = GeoPoint(11.0, 30.0)
    expected = EARTH_RADIUS_M * math.pi / 180.0
    assert haversine_m(a, b) == pytest.approx(expected, rel=1e-12)


def test_haversine_local_offsets():
    # points laid out 300 m apart via the meter-offset helper measure ~300 m
    assert haversine_m(pt(0, 0), pt(300, 0)) == pytest.approx(300.0, rel=2e-3)
    assert haversine_m(pt(0, 0), pt(0, 300)) == pytest.approx(300.0, rel=2e-3)


def test_polyline_length():
    points = [pt(0, 0), pt(300, 0), pt(300, 400)]
    expected = haversine_m(points[0], points[1]) + haversine_m(points[1], points[2])
    assert polyline_length_m(points) == expected
    assert polyline_length_m([pt(0, 0)]) == 0.0


def test_local_projection_matches_haversine_at_city_scale():
    proj = LocalProjection(pt(0, 0))
    a, b = pt(120, 80), pt(900, 640)
    assert proj.distance_m(a, b) == pytest.approx(haversine_m(a, b), rel=1e-4)


def test_project_point_to_segment_interior():
    proj = LocalProjection(pt(0, 0))
    a, b = pt(0, 0), pt(1000, 0)
    d, offset = project_point_to_segment(proj, pt(400, 30), a, b)
    assert d == pytest.approx(30.0, abs=0.2)
    assert offset == pytest.approx(400.0, abs=0.5)


def test_project_point_to_segment_clamps_to_endpoints():
    proj = LocalProjection(pt(0, 0))
    a, b = pt(0, 0), pt(1000, 0)
    d, offset = project_point_to_segment(proj, pt(-200, 50), a, b)
    assert offset == 0.0
    assert d == pytest.approx(math.hypot(200, 50), rel=2e-3)
    d, offset = project_point_to_segment(proj, pt(1300, 0), a, b)
    assert offset == pytest.approx(meters(a, b), rel=1e-6)


def test_project_point_degenerate_segment():
    proj = LocalProjection(pt(0, 0))
    a = pt(100, 100)
    d, offset = project_point_to_segment(proj, pt(130, 140), a, a)
    assert offset == 0.0
    assert d == pytest.approx(50.0, rel=2e-3)


def test_grid_index_rejects_bad_cell_size():
    with pytest.raises(ValueError):
        GridIndex(pt(0, 0), 0.0)


def test_grid_index_membership():
    grid = GridIndex(pt(0, 0), 500.0)
    grid.add("a", pt(100, 100))
    grid.add("b", pt(2600, 2600))
    near = grid.members_near(pt(120, 90), 200.0)
    assert "a" in near and "b" not in near
    # large radius reaches the distant member too
    assert set(grid.members_near(pt(120, 90), 4000.0)) == {"a", "b"}


def test_grid_index_one_cell_per_point():
    grid = GridIndex(pt(0, 0), 500.0)
    cell = grid.add("x", pt(499, 499))
    assert sum(members.count("x") for members in grid.cells.values()) == 1
    assert grid.cells[cell] == ["x"]


@given(
    st.floats(min_value=-2000, max_value=2000),
    st.floats(min_value=-2000, max_value=2000),
    st.floats(min_value=-2000, max_value=2000),
    st.floats(min_value=-2000, max_value=2000),
)
def test_haversine_triangle_inequality(x1, y1, x2, y2):
    a, b, mid = pt(x1, y1), pt(x2, y2), pt((x1 + x2) / 2, (y1 + y2) / 2)
    assert haversine_m(a, mid) + haversine_m(mid, b) >= haversine_m(a, b) - 1e-6


@given(st.floats(min_value=-3000, max_value=3000), st.floats(min_value=-3000, max_value=3000))
def test_projection_roundtrip_consistency(east, north):
    proj = LocalProjection(GeoPoint(BASE_LAT, 121.40))
    p = pt(east, north)
    x, y = proj.to_xy(p)
    assert x == pytest.approx(east, rel=2e-3, abs=0.5)
    assert y == pytest.approx(north, rel=2e-3, abs=0.5)
