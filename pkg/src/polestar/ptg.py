"""Compile city datasets into the routing graph bundle.

Each city yields one physical multigraph (stations connected by per-line
edges, including skip-stop edges between every ordered stop pair) and three
virtual graphs over (station, line) nodes, one per cost kind.  The three
virtual graphs share one topology; only edge weights differ.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .binio import read_artifact, write_artifact
from .config import WeightConfig
from .errors import NegativeWeight
from .geo import GeoPoint, haversine_m
from .model import CityDataset, PhysicalStation, TransportLine, TransportMode

PTG_MAGIC = b"PTG1"
PTG_VERSION = 1

RIDE = 0
TRANSFER = 1


class CostKind(enum.Enum):
    DISTANCE = "Distance"
    TRAVEL_TIME = "TravelTime"
    WALK_DISTANCE = "WalkDistance"


COST_KINDS = (CostKind.DISTANCE, CostKind.TRAVEL_TIME, CostKind.WALK_DISTANCE)


@dataclass(frozen=True)
class PhysicalEdge:
    id: int
    origin: str
    dest: str
    line: str
    hops: int  # intermediate stops skipped
    length_m: float


@dataclass
class PhysicalGraph:
    stations: dict[str, PhysicalStation]
    edges: list[PhysicalEdge]
    out_edges: dict[str, list[int]] = field(default_factory=dict)  # origin station -> edge ids
    parallel: dict[tuple[str, str], list[int]] = field(default_factory=dict)  # (origin, dest) -> edge ids

    def reindex(self):
        self.out_edges = {}
        self.parallel = {}
        for e in self.edges:
            self.out_edges.setdefault(e.origin, []).append(e.id)
            self.parallel.setdefault((e.origin, e.dest), []).append(e.id)


@dataclass(frozen=True)
class VirtualStation:
    id: int
    physical: str
    line: str


@dataclass
class VirtualGraph:
    cost_kind: CostKind
    nodes: list[VirtualStation]
    edge_src: np.ndarray  # int32
    edge_dst: np.ndarray  # int32
    edge_kind: np.ndarray  # uint8, RIDE or TRANSFER
    edge_phys: np.ndarray  # int32, physical edge id for ride edges, -1 for transfers
    weights: np.ndarray  # float64
    station_map: dict[int, str]
    # CSR caches built on demand (forward and reversed), shared by searches.
    _csr: tuple | None = None
    _csr_rev: tuple | None = None
    _min_weight: dict | None = None

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def min_weight(self) -> dict:
        """Minimum edge weight per (src, dst) pair; parallel edges collapsed."""
        if self._min_weight is None:
            table: dict[tuple[int, int], float] = {}
            for s, d, w in zip(self.edge_src, self.edge_dst, self.weights):
                key = (int(s), int(d))
                w = float(w)
                if key not in table or w < table[key]:
                    table[key] = w
            self._min_weight = table
        return self._min_weight

    def csr(self, reverse: bool = False):
        cached = self._csr_rev if reverse else self._csr
        if cached is None:
            src = self.edge_dst if reverse else self.edge_src
            dst = self.edge_src if reverse else self.edge_dst
            order = np.argsort(src, kind="stable")
            indptr = np.zeros(self.n_nodes + 1, dtype=np.int64)
            np.add.at(indptr, src + 1, 1)
            np.cumsum(indptr, out=indptr)
            cached = (
                indptr,
                dst[order].astype(np.int32),
                self.weights[order].astype(np.float64),
                order.astype(np.int64),  # edge permutation, maps CSR position -> edge id
            )
            if reverse:
                self._csr_rev = cached
            else:
                self._csr = cached
        return cached


@dataclass
class CityPTG:
    city: str
    physical: PhysicalGraph
    virtuals: dict[CostKind, VirtualGraph]
    lines: dict[str, TransportLine]
    node_index: dict[tuple[str, str], int] = field(default_factory=dict)  # (station, line) -> virtual id
    _line_hops: dict[str, list[float]] = field(default_factory=dict, repr=False)
    _station_vnodes: dict[str, list[int]] | None = field(default=None, repr=False)

    def virtual_nodes_at(self, station_id: str) -> list[int]:
        if self._station_vnodes is None:
            table: dict[str, list[int]] = {}
            any_vg = next(iter(self.virtuals.values()))
            for v in any_vg.nodes:
                table.setdefault(v.physical, []).append(v.id)
            self._station_vnodes = table
        return self._station_vnodes.get(station_id, [])

    def line_hop_lengths(self, line_id: str) -> list[float]:
        """Consecutive-stop distances of one line, computed once per line."""
        hops = self._line_hops.get(line_id)
        if hops is None:
            stops = self.lines[line_id].stops
            station = self.physical.stations
            hops = [
                haversine_m(station[a].location, station[b].location)
                for a, b in zip(stops, stops[1:])
            ]
            self._line_hops[line_id] = hops
        return hops


@dataclass
class PTG:
    cities: dict[str, CityPTG]
    dataset_hash: str
    built_at: int
    weight_config: WeightConfig


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def build_physical_graph(dataset: CityDataset, config: WeightConfig | None = None) -> PhysicalGraph:
    """One edge per ordered stop pair of every line (downstream pairs, not
    just consecutive); parallel edges from different lines preserved."""
    config = config or WeightConfig()
    edges: list[PhysicalEdge] = []
    for line in dataset.lines.values():
        stops = line.stops
        hop_len = [
            haversine_m(dataset.station(stops[i]).location, dataset.station(stops[i + 1]).location)
            for i in range(len(stops) - 1)
        ]
        max_skip = config.max_skip if config.max_skip > 0 else len(stops)
        for i in range(len(stops)):
            for j in range(i + 1, min(len(stops), i + 1 + max_skip)):
                if stops[i] == stops[j]:
                    continue  # loop line revisiting a stop
                edges.append(
                    PhysicalEdge(
                        id=len(edges),
                        origin=stops[i],
                        dest=stops[j],
                        line=line.id,
                        hops=j - i - 1,
                        # summed per hop (not prefix differences) so parallel
                        # edges over the same stations get identical lengths
                        length_m=sum(hop_len[i:j]),
                    )
                )
    graph = PhysicalGraph(stations=dict(dataset.stations), edges=edges)
    graph.reindex()
    return graph


def _edge_weight(kind: CostKind, edge_kind: int, length_m: float, line: TransportLine | None, config: WeightConfig) -> float:
    if edge_kind == RIDE:
        if kind is CostKind.DISTANCE:
            return length_m
        if kind is CostKind.TRAVEL_TIME:
            return length_m / line.speed_mps
        return 0.0  # riding involves no walking
    # transfer edge; `line` is the boarded line
    if kind is CostKind.DISTANCE:
        return 0.0
    if kind is CostKind.TRAVEL_TIME:
        return config.transfer_penalty_s + line.headway_s / 2.0
    return config.transfer_walk_m


def _virtual_topology(physical: PhysicalGraph, dataset: CityDataset):
    """Shared node and edge structure for all three cost kinds."""
    nodes: list[VirtualStation] = []
    node_index: dict[tuple[str, str], int] = {}
    for line in dataset.lines.values():
        for stop in line.stops:
            key = (stop, line.id)
            if key not in node_index:
                node_index[key] = len(nodes)
                nodes.append(VirtualStation(id=len(nodes), physical=stop, line=line.id))

    src, dst, kinds, phys = [], [], [], []
    for e in physical.edges:
        src.append(node_index[(e.origin, e.line)])
        dst.append(node_index[(e.dest, e.line)])
        kinds.append(RIDE)
        phys.append(e.id)

    by_station: dict[str, list[int]] = {}
    for v in nodes:
        by_station.setdefault(v.physical, []).append(v.id)
    for station, vids in by_station.items():
        for a in vids:
            for b in vids:
                if a == b:
                    continue
                src.append(a)
                dst.append(b)
                kinds.append(TRANSFER)
                phys.append(-1)

    return (
        nodes,
        node_index,
        np.array(src, dtype=np.int32),
        np.array(dst, dtype=np.int32),
        np.array(kinds, dtype=np.uint8),
        np.array(phys, dtype=np.int32),
    )


def build_virtual_graph(
    physical: PhysicalGraph, dataset: CityDataset, cost_kind: CostKind, config: WeightConfig | None = None
) -> VirtualGraph:
    config = config or WeightConfig()
    nodes, node_index, src, dst, kinds, phys = _virtual_topology(physical, dataset)
    weights = np.empty(len(src), dtype=np.float64)
    for i in range(len(src)):
        if kinds[i] == RIDE:
            edge = physical.edges[phys[i]]
            weights[i] = _edge_weight(cost_kind, RIDE, edge.length_m, dataset.lines[edge.line], config)
        else:
            boarded = dataset.lines[nodes[dst[i]].line]
            weights[i] = _edge_weight(cost_kind, TRANSFER, 0.0, boarded, config)
        if weights[i] < 0:
            raise NegativeWeight(f"edge {i} of {cost_kind.value} graph has weight {weights[i]}")
    return VirtualGraph(
        cost_kind=cost_kind,
        nodes=nodes,
        edge_src=src,
        edge_dst=dst,
        edge_kind=kinds,
        edge_phys=phys,
        weights=weights,
        station_map={v.id: v.physical for v in nodes},
    )


def compile_city(dataset: CityDataset, config: WeightConfig | None = None) -> CityPTG:
    config = config or WeightConfig()
    config.validate()
    physical = build_physical_graph(dataset, config)
    nodes, node_index, src, dst, kinds, phys = _virtual_topology(physical, dataset)

    virtuals: dict[CostKind, VirtualGraph] = {}
    station_map = {v.id: v.physical for v in nodes}
    for cost_kind in COST_KINDS:
        weights = np.empty(len(src), dtype=np.float64)
        for i in range(len(src)):
            if kinds[i] == RIDE:
                edge = physical.edges[phys[i]]
                line = dataset.lines[edge.line]
                weights[i] = _edge_weight(cost_kind, RIDE, edge.length_m, line, config)
            else:
                boarded = dataset.lines[nodes[dst[i]].line]
                weights[i] = _edge_weight(cost_kind, TRANSFER, 0.0, boarded, config)
            if weights[i] < 0:
                raise NegativeWeight(f"edge {i} of {cost_kind.value} graph has weight {weights[i]}")
        virtuals[cost_kind] = VirtualGraph(
            cost_kind=cost_kind,
            nodes=nodes,
            edge_src=src,
            edge_dst=dst,
            edge_kind=kinds,
            edge_phys=phys,
            weights=weights,
            station_map=station_map,
        )
    return CityPTG(
        city=dataset.city,
        physical=physical,
        virtuals=virtuals,
        lines=dict(dataset.lines),
        node_index=node_index,
    )


def dataset_fingerprint(datasets: dict[str, CityDataset]) -> str:
    digest = hashlib.sha256()
    for city in sorted(datasets):
        ds = datasets[city]
        payload = {
            "city": city,
            "stations": [[s.id, s.location.lat, s.location.lon] for s in ds.stations.values()],
            "lines": [
                [l.id, l.mode.value, list(l.stops), l.headway_s, l.speed_mps, l.fare, list(l.service_window)]
                for l in ds.lines.values()
            ],
        }
        digest.update(json.dumps(payload, sort_keys=True).encode())
    return digest.hexdigest()


def compile_ptg(datasets: dict[str, CityDataset], config: WeightConfig | None = None, built_at: int = 0) -> PTG:
    """Compile every city; pure given (datasets, config, built_at)."""
    config = config or WeightConfig()
    cities = {city: compile_city(ds, config) for city, ds in sorted(datasets.items())}
    return PTG(
        cities=cities,
        dataset_hash=dataset_fingerprint(datasets),
        built_at=built_at,
        weight_config=config,
    )


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def save_ptg(ptg: PTG, path: str) -> None:
    header = {
        "dataset_hash": ptg.dataset_hash,
        "built_at": ptg.built_at,
        "weight_config": {
            "transfer_walk_m": ptg.weight_config.transfer_walk_m,
            "transfer_penalty_s": ptg.weight_config.transfer_penalty_s,
            "walk_speed_mps": ptg.weight_config.walk_speed_mps,
            "max_skip": ptg.weight_config.max_skip,
            "nearby_transfers": ptg.weight_config.nearby_transfers,
        },
        "cities": [],
    }
    arrays: dict[str, np.ndarray] = {}
    for city, cp in ptg.cities.items():
        station_ids = list(cp.physical.stations)
        station_pos = {sid: i for i, sid in enumerate(station_ids)}
        line_ids = list(cp.lines)
        line_pos = {lid: i for i, lid in enumerate(line_ids)}
        header["cities"].append(
            {
                "city": city,
                "station_ids": station_ids,
                "station_names": [cp.physical.stations[s].name for s in station_ids],
                "line_ids": line_ids,
                "lines": [
                    {
                        "mode": cp.lines[l].mode.value,
                        "stops": [station_pos[s] for s in cp.lines[l].stops],
                        "headway_s": cp.lines[l].headway_s,
                        "speed_mps": cp.lines[l].speed_mps,
                        "fare": cp.lines[l].fare,
                        "service_window": list(cp.lines[l].service_window),
                    }
                    for l in line_ids
                ],
            }
        )
        pfx = f"{city}."
        arrays[pfx + "station_lat"] = np.array([cp.physical.stations[s].location.lat for s in station_ids])
        arrays[pfx + "station_lon"] = np.array([cp.physical.stations[s].location.lon for s in station_ids])
        arrays[pfx + "edge_origin"] = np.array([station_pos[e.origin] for e in cp.physical.edges], dtype=np.int32)
        arrays[pfx + "edge_dest"] = np.array([station_pos[e.dest] for e in cp.physical.edges], dtype=np.int32)
        arrays[pfx + "edge_line"] = np.array([line_pos[e.line] for e in cp.physical.edges], dtype=np.int32)
        arrays[pfx + "edge_hops"] = np.array([e.hops for e in cp.physical.edges], dtype=np.int32)
        arrays[pfx + "edge_length"] = np.array([e.length_m for e in cp.physical.edges])
        any_vg = next(iter(cp.virtuals.values()))
        arrays[pfx + "vnode_station"] = np.array([station_pos[v.physical] for v in any_vg.nodes], dtype=np.int32)
        arrays[pfx + "vnode_line"] = np.array([line_pos[v.line] for v in any_vg.nodes], dtype=np.int32)
        arrays[pfx + "vedge_src"] = any_vg.edge_src
        arrays[pfx + "vedge_dst"] = any_vg.edge_dst
        arrays[pfx + "vedge_kind"] = any_vg.edge_kind
        arrays[pfx + "vedge_phys"] = any_vg.edge_phys
        for kind in COST_KINDS:
            arrays[pfx + f"weights.{kind.value}"] = cp.virtuals[kind].weights
    write_artifact(path, PTG_MAGIC, PTG_VERSION, header, arrays)


def load_ptg(path: str) -> PTG:
    header, arrays = read_artifact(path, PTG_MAGIC, PTG_VERSION)
    wc = WeightConfig(**header["weight_config"])
    cities: dict[str, CityPTG] = {}
    for centry in header["cities"]:
        city = centry["city"]
        pfx = f"{city}."
        station_ids = centry["station_ids"]
        stations = {
            sid: PhysicalStation(
                id=sid,
                location=GeoPoint(float(arrays[pfx + "station_lat"][i]), float(arrays[pfx + "station_lon"][i])),
                name=centry["station_names"][i],
                city=city,
            )
            for i, sid in enumerate(station_ids)
        }
        line_ids = centry["line_ids"]
        lines = {
            lid: TransportLine(
                id=lid,
                mode=TransportMode(lrec["mode"]),
                stops=tuple(station_ids[i] for i in lrec["stops"]),
                headway_s=lrec["headway_s"],
                speed_mps=lrec["speed_mps"],
                fare=lrec["fare"],
                service_window=tuple(lrec["service_window"]),
            )
            for lid, lrec in zip(line_ids, centry["lines"])
        }
        edges = [
            PhysicalEdge(
                id=i,
                origin=station_ids[arrays[pfx + "edge_origin"][i]],
                dest=station_ids[arrays[pfx + "edge_dest"][i]],
                line=line_ids[arrays[pfx + "edge_line"][i]],
                hops=int(arrays[pfx + "edge_hops"][i]),
                length_m=float(arrays[pfx + "edge_length"][i]),
            )
            for i in range(len(arrays[pfx + "edge_origin"]))
        ]
        physical = PhysicalGraph(stations=stations, edges=edges)
        physical.reindex()
        nodes = [
            VirtualStation(
                id=i,
                physical=station_ids[arrays[pfx + "vnode_station"][i]],
                line=line_ids[arrays[pfx + "vnode_line"][i]],
            )
            for i in range(len(arrays[pfx + "vnode_station"]))
        ]
        station_map = {v.id: v.physical for v in nodes}
        virtuals = {
            kind: VirtualGraph(
                cost_kind=kind,
                nodes=nodes,
                edge_src=arrays[pfx + "vedge_src"],
                edge_dst=arrays[pfx + "vedge_dst"],
                edge_kind=arrays[pfx + "vedge_kind"],
                edge_phys=arrays[pfx + "vedge_phys"],
                weights=arrays[pfx + f"weights.{kind.value}"],
                station_map=station_map,
            )
            for kind in COST_KINDS
        }
        cities[city] = CityPTG(
            city=city,
            physical=physical,
            virtuals=virtuals,
            lines=lines,
            node_index={(v.physical, v.line): v.id for v in nodes},
        )
    return PTG(cities=cities, dataset_hash=header["dataset_hash"], built_at=header["built_at"], weight_config=wc)


def ptg_equal(a: PTG, b: PTG) -> bool:
    """Structural equality, used by round-trip tests."""
    if set(a.cities) != set(b.cities) or a.dataset_hash != b.dataset_hash:
        return False
    for city in a.cities:
        ca, cb = a.cities[city], b.cities[city]
        if ca.physical.edges != cb.physical.edges or set(ca.physical.stations) != set(cb.physical.stations):
            return False
        if ca.lines != cb.lines:
            return False
        for kind in COST_KINDS:
            va, vb = ca.virtuals[kind], cb.virtuals[kind]
            if va.nodes != vb.nodes:
                return False
            for fa, fb in (
                (va.edge_src, vb.edge_src),
                (va.edge_dst, vb.edge_dst),
                (va.edge_kind, vb.edge_kind),
                (va.edge_phys, vb.edge_phys),
                (va.weights, vb.weights),
            ):
                if not np.array_equal(fa, fb):
                    return False
    return True
