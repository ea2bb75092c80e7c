"""Shared fixtures: a small worked-example city, a road-vs-Euclidean
counterexample network, and a mid-size synthetic grid engine."""

from __future__ import annotations

import math

import pytest

from polestar.binding import build_station_cache
from polestar.config import EngineConfig, WeightConfig
from polestar.engine import Engine
from polestar.geo import GeoPoint
from polestar.model import (
    CityDataset,
    PhysicalStation,
    RoadIntersection,
    RoadNetwork,
    RoadSegment,
    TransportLine,
    TransportMode,
)
from polestar.ptg import compile_ptg
from polestar.synth import synth_city

BASE_LAT = 31.20
BASE_LON = 121.40


def pt(east_m: float, north_m: float) -> GeoPoint:
    """Local meter offsets from the fixture origin."""
    return GeoPoint(
        BASE_LAT + north_m / 111320.0,
        BASE_LON + east_m / (111320.0 * math.cos(math.radians(BASE_LAT))),
    )


def meters(a: GeoPoint, b: GeoPoint) -> float:
    from polestar.geo import haversine_m

    return haversine_m(a, b)


def _station(sid: str, p: GeoPoint, city: str = "figtown") -> PhysicalStation:
    return PhysicalStation(id=sid, location=p, name=sid.upper(), city=city)


def _line(lid: str, mode: TransportMode, stops, headway=600.0, speed=8.0, fare=3.0):
    return TransportLine(
        id=lid, mode=mode, stops=tuple(stops), headway_s=headway, speed_mps=speed,
        fare=fare, service_window=(0, 1440),
    )


def worked_example_dataset() -> CityDataset:
    """Six stations, three lines; the smallest city where candidate
    generation, augmentation and dedup all have work to do.

    L1: p1 -> p5 -> p6 (the direct line)
    L2: p4 -> p2 -> p5 -> p6 (shares the p5->p6 stretch with L1)
    L3: p1 -> p2 -> p3 (feeder into L2 at p2)
    """
    stations = {
        "p1": _station("p1", pt(0, 0)),
        "p2": _station("p2", pt(500, 0)),
        "p3": _station("p3", pt(1000, 0)),
        "p4": _station("p4", pt(0, 600)),
        "p5": _station("p5", pt(500, 300)),
        "p6": _station("p6", pt(1100, 300)),
    }
    lines = {
        "L1": _line("L1", TransportMode.BUS, ("p1", "p5", "p6"), headway=600, speed=7.0, fare=2.0),
        "L2": _line("L2", TransportMode.BUS, ("p4", "p2", "p5", "p6"), headway=480, speed=8.0, fare=3.0),
        "L3": _line("L3", TransportMode.METRO, ("p1", "p2", "p3"), headway=300, speed=14.0, fare=5.0),
    }
    # two east-west streets (y=0, y=300) with connectors at x=0, 500, 1100
    nodes = {}
    for i, x in enumerate((0, 500, 1000, 1100)):
        nodes[f"a{i}"] = RoadIntersection(id=f"a{i}", location=pt(x, 0))
    for i, x in enumerate((0, 500, 1100)):
        nodes[f"b{i}"] = RoadIntersection(id=f"b{i}", location=pt(x, 300))
    nodes["c0"] = RoadIntersection(id="c0", location=pt(0, 600))

    def seg(sid, u, v):
        return RoadSegment(
            id=sid, from_id=u, to_id=v, length_m=meters(nodes[u].location, nodes[v].location),
            bidirectional=True,
        )

    segments = (
        seg("sa0", "a0", "a1"), seg("sa1", "a1", "a2"), seg("sa2", "a2", "a3"),
        seg("sb0", "b0", "b1"), seg("sb1", "b1", "b2"),
        seg("sv0", "a0", "b0"), seg("sv1", "a1", "b1"), seg("sv2", "a3", "b2"),
        seg("sv3", "b0", "c0"),
    )
    road = RoadNetwork(intersections=tuple(nodes.values()), segments=segments)
    return CityDataset(city="figtown", stations=stations, lines=lines, road=road)


def detour_road_network():
    """A query point between two streets that only connect via a long
    detour; the Euclidean-nearest station is road-far.

    Street A runs along y=0, street B along y=265; the only link is an
    x=1000 connector with a declared length of 800 m (a footbridge ramp).
    Station near_b sits 250 m north of the query (road distance 1825 m);
    station on_a sits 300 m east on the query's own street (road 310 m).
    """
    nodes = {
        "x0": RoadIntersection(id="x0", location=pt(0, 0)),
        "x1": RoadIntersection(id="x1", location=pt(500, 0)),
        "x2": RoadIntersection(id="x2", location=pt(1000, 0)),
        "y0": RoadIntersection(id="y0", location=pt(0, 265)),
        "y1": RoadIntersection(id="y1", location=pt(1000, 265)),
        "z0": RoadIntersection(id="z0", location=pt(0, -80)),
        "z1": RoadIntersection(id="z1", location=pt(1000, -80)),
    }

    def seg(sid, u, v, length=None):
        return RoadSegment(
            id=sid, from_id=u, to_id=v,
            length_m=length if length is not None else meters(nodes[u].location, nodes[v].location),
            bidirectional=True,
        )

    segments = (
        seg("ra0", "x0", "x1"),
        seg("ra1", "x1", "x2"),
        seg("rb", "y0", "y1"),
        seg("rz", "z0", "z1"),  # decoy service road keeping street B out of the entry set
        seg("bridge", "x2", "y1", length=800.0),
    )
    road = RoadNetwork(intersections=tuple(nodes.values()), segments=segments)
    stations = [
        _station("near_b", pt(500, 250), city="detourville"),
        _station("on_a", pt(800, 0), city="detourville"),
    ]
    query = pt(500, 10)
    return road, stations, query


@pytest.fixture(scope="session")
def fig_city() -> CityDataset:
    return worked_example_dataset()


@pytest.fixture(scope="session")
def fig_ptg(fig_city):
    return compile_ptg({fig_city.city: fig_city}, WeightConfig())


@pytest.fixture(scope="session")
def fig_engine(fig_city, fig_ptg):
    cache = build_station_cache(fig_city.road, list(fig_city.stations.values()), fig_city.pois)
    return Engine(fig_city, fig_ptg, cache, None, EngineConfig(deterministic=True))


@pytest.fixture(scope="session")
def grid_engine():
    """A 49-station synthetic grid city with no reranking model."""
    ds = synth_city(n_stations=49, n_lines=18, seed=5)
    ptg = compile_ptg({ds.city: ds}, WeightConfig())
    serving = sorted({s for ln in ds.lines.values() for s in ln.stops})
    cache = build_station_cache(ds.road, [ds.stations[s] for s in serving], ds.pois)
    return Engine(ds, ptg, cache, None, EngineConfig(deterministic=True))
