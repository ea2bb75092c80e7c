"""Independent reference implementations used as test oracles.

These are deliberately naive (dict adjacency, textbook algorithms) and were
written before the corresponding library code was tested against them.  Keep
them frozen; if an oracle and the library disagree, the library is wrong
until proven otherwise.
"""

from __future__ import annotations

import heapq
import math


def dijkstra_ref(adj: dict, sources: dict) -> dict:
    """Textbook Dijkstra over a dict-of-dicts adjacency.

    ``adj[u][v]`` is the edge weight; parallel edges must be pre-collapsed to
    their minimum.  ``sources`` maps start node -> initial cost.  Returns the
    settled distance map.
    """
    dist = dict(sources)
    heap = [(c, u) for u, c in sources.items()]
    heapq.heapify(heap)
    done = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done or d > dist.get(u, math.inf):
            continue
        done.add(u)
        for v, w in adj.get(u, {}).items():
            nd = d + w
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def shortest_cost_ref(adj: dict, sources: dict, targets: dict) -> float:
    """Best source-to-target cost including initial and terminal costs."""
    dist = dijkstra_ref(adj, sources)
    best = math.inf
    for t, extra in targets.items():
        if t in dist:
            best = min(best, dist[t] + extra)
    return best


def ndcg_ref(grades_in_rank_order: list[int], k: int) -> float:
    """NDCG@k from the graded relevance of a ranking, gain 2^g - 1."""
    dcg = sum((2.0 ** g - 1.0) / math.log2(i + 2) for i, g in enumerate(grades_in_rank_order[:k]))
    ideal = sorted(grades_in_rank_order, reverse=True)
    idcg = sum((2.0 ** g - 1.0) / math.log2(i + 2) for i, g in enumerate(ideal[:k]))
    return dcg / idcg if idcg > 0 else 0.0


def pair_loss_ref(f1: float, f2: float, tau: float) -> float:
    h = max(0.0, tau - (f1 - f2))
    return 0.5 * h * h
