"""Pure-Python Dijkstra kernel; reference semantics for the compiled one."""

from __future__ import annotations

import heapq
import math

import numpy as np


def csr_dijkstra(indptr, indices, weights, src_nodes, src_costs, cutoff=math.inf):
    """Multi-source Dijkstra over a CSR graph.

    Returns ``(dist, parent, parent_pos)`` where ``parent[v]`` is the
    predecessor node (-1 for sources/unreached) and ``parent_pos[v]`` the CSR
    position of the edge that settled ``v``.  Nodes beyond ``cutoff`` keep
    ``inf``.  Paths compare by (distance, edge count), so among equal-cost
    paths the one with fewer edges wins; remaining ties settle in node id
    order, matching the compiled kernel exactly.
    """
    n = len(indptr) - 1
    dist = np.full(n, math.inf)
    hops = np.full(n, np.iinfo(np.int64).max, dtype=np.int64)
    parent = np.full(n, -1, dtype=np.int64)
    parent_pos = np.full(n, -1, dtype=np.int64)
    done = np.zeros(n, dtype=bool)
    heap = []
    for node, cost in zip(src_nodes, src_costs):
        node = int(node)
        cost = float(cost)
        if (cost, 0) < (dist[node], hops[node]):
            dist[node] = cost
            hops[node] = 0
            heapq.heappush(heap, (cost, 0, node))
    while heap:
        d, h, u = heapq.heappop(heap)
        if done[u] or (d, h) > (dist[u], hops[u]):
            continue
        done[u] = True
        for pos in range(indptr[u], indptr[u + 1]):
            v = int(indices[pos])
            nd = d + float(weights[pos])
            if nd > cutoff:
                continue
            nh = h + 1
            if (nd, nh) < (dist[v], hops[v]):
                dist[v] = nd
                hops[v] = nh
                parent[v] = u
                parent_pos[v] = pos
                heapq.heappush(heap, (nd, nh, v))
    return dist, parent, parent_pos
