"""Compare the compiled Dijkstra kernel against the pure-Python fallback.

Builds a synthetic city's travel-time virtual graph, runs both kernels from
the same source sets, checks that the distance arrays agree bit for bit,
and prints per-run timings.

Usage: python3 benchmarks/bench_kernels.py [--stations N] [--lines N]
"""

import argparse
import statistics
import time

import numpy as np

from polestar.config import WeightConfig
from polestar.kernels import _pykernel
from polestar.ptg import CostKind, compile_ptg
from polestar.synth import synth_city

try:
    from polestar.kernels import _ckernel
except ImportError:
    _ckernel = None


def run(kernel, gv, sources, repeats):
    indptr, indices, weights, _ = gv.csr()
    times, dists = [], []
    for src_nodes, src_costs in sources:
        t0 = time.perf_counter()
        for _ in range(repeats):
            dist, _, _ = kernel(indptr, indices, weights, src_nodes, src_costs)
        times.append((time.perf_counter() - t0) / repeats)
        dists.append(dist)
    return times, dists


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--stations", type=int, default=2000)
    parser.add_argument("--lines", type=int, default=120)
    parser.add_argument("--seed", type=int, default=17)
    parser.add_argument("--queries", type=int, default=10)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    ds = synth_city(n_stations=args.stations, n_lines=args.lines, seed=args.seed)
    cp = compile_ptg({ds.city: ds}, WeightConfig(max_skip=4)).cities[ds.city]
    gv = cp.virtuals[CostKind.TRAVEL_TIME]
    print(f"graph: {gv.n_nodes} nodes, {len(gv.edge_src)} edges")

    rng = np.random.default_rng(0)
    sources = []
    for _ in range(args.queries):
        k = int(rng.integers(1, 4))
        nodes = rng.integers(0, gv.n_nodes, size=k).astype(np.int64)
        costs = rng.uniform(0, 300, size=k)
        sources.append((nodes, costs))

    py_times, py_dists = run(_pykernel.csr_dijkstra, gv, sources, 1)
    print(f"python   mean {statistics.mean(py_times) * 1000:8.2f} ms/run")

    if _ckernel is None:
        print("compiled kernel not built; skipping comparison")
        return
    c_times, c_dists = run(_ckernel.csr_dijkstra, gv, sources, args.repeats)
    print(f"compiled mean {statistics.mean(c_times) * 1000:8.2f} ms/run")
    print(f"speedup  {statistics.mean(py_times) / statistics.mean(c_times):8.1f}x")
    for a, b in zip(py_dists, c_dists):
        np.testing.assert_array_equal(a, b)
    print("distance arrays identical across kernels")


if __name__ == "__main__":
    main()
