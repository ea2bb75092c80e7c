# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled Dijkstra kernel. Semantics mirror _pykernel.csr_dijkstra exactly:
paths compare by (distance, edge count) so equal-cost paths with fewer edges
win; remaining ties settle in node id order and relaxation is strict."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef inline bint _less(double da, long ha, long na, double db, long hb, long nb) nogil:
    if da != db:
        return da < db
    if ha != hb:
        return ha < hb
    return na < nb


def csr_dijkstra(indptr, indices, weights, src_nodes, src_costs, cutoff=None):
    cdef cnp.int64_t[::1] c_indptr = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef cnp.int32_t[::1] c_indices = np.ascontiguousarray(indices, dtype=np.int32)
    cdef double[::1] c_weights = np.ascontiguousarray(weights, dtype=np.float64)
    cdef cnp.int64_t[::1] c_src = np.ascontiguousarray(src_nodes, dtype=np.int64)
    cdef double[::1] c_src_cost = np.ascontiguousarray(src_costs, dtype=np.float64)
    cdef double c_cutoff = np.inf if cutoff is None else float(cutoff)

    cdef Py_ssize_t n = c_indptr.shape[0] - 1
    cdef Py_ssize_t m = c_indices.shape[0]

    dist_arr = np.full(n, np.inf, dtype=np.float64)
    parent_arr = np.full(n, -1, dtype=np.int64)
    ppos_arr = np.full(n, -1, dtype=np.int64)
    done_arr = np.zeros(n, dtype=np.uint8)
    hops_arr = np.full(n, np.iinfo(np.int64).max, dtype=np.int64)
    cdef double[::1] dist = dist_arr
    cdef cnp.int64_t[::1] parent = parent_arr
    cdef cnp.int64_t[::1] ppos = ppos_arr
    cdef cnp.uint8_t[::1] done = done_arr
    cdef cnp.int64_t[::1] hops = hops_arr

    # binary heap; worst case one push per source plus one per edge relaxation
    cdef Py_ssize_t cap = m + c_src.shape[0] + 1
    heap_key_arr = np.empty(cap, dtype=np.float64)
    heap_hop_arr = np.empty(cap, dtype=np.int64)
    heap_val_arr = np.empty(cap, dtype=np.int64)
    cdef double[::1] hkey = heap_key_arr
    cdef cnp.int64_t[::1] hhop = heap_hop_arr
    cdef cnp.int64_t[::1] hval = heap_val_arr
    cdef Py_ssize_t hsize = 0

    cdef Py_ssize_t i, j, child, pos
    cdef long u, v, h, nh, vh
    cdef double d, nd, key

    with nogil:
        for i in range(c_src.shape[0]):
            u = c_src[i]
            d = c_src_cost[i]
            if d < dist[u] or (d == dist[u] and 0 < hops[u]):
                dist[u] = d
                hops[u] = 0
                # sift up
                j = hsize
                hsize += 1
                while j > 0 and _less(d, 0, u, hkey[(j - 1) >> 1], hhop[(j - 1) >> 1], hval[(j - 1) >> 1]):
                    hkey[j] = hkey[(j - 1) >> 1]
                    hhop[j] = hhop[(j - 1) >> 1]
                    hval[j] = hval[(j - 1) >> 1]
                    j = (j - 1) >> 1
                hkey[j] = d
                hhop[j] = 0
                hval[j] = u

        while hsize > 0:
            d = hkey[0]
            h = hhop[0]
            u = hval[0]
            # pop: move last to root, sift down
            hsize -= 1
            key = hkey[hsize]
            vh = hhop[hsize]
            v = hval[hsize]
            j = 0
            while True:
                child = 2 * j + 1
                if child >= hsize:
                    break
                if child + 1 < hsize and _less(hkey[child + 1], hhop[child + 1], hval[child + 1], hkey[child], hhop[child], hval[child]):
                    child += 1
                if _less(hkey[child], hhop[child], hval[child], key, vh, v):
                    hkey[j] = hkey[child]
                    hhop[j] = hhop[child]
                    hval[j] = hval[child]
                    j = child
                else:
                    break
            if hsize > 0:
                hkey[j] = key
                hhop[j] = vh
                hval[j] = v

            if done[u] or d > dist[u] or (d == dist[u] and h > hops[u]):
                continue
            done[u] = 1
            for pos in range(c_indptr[u], c_indptr[u + 1]):
                v = c_indices[pos]
                nd = d + c_weights[pos]
                if nd > c_cutoff:
                    continue
                nh = h + 1
                if nd < dist[v] or (nd == dist[v] and nh < hops[v]):
                    dist[v] = nd
                    hops[v] = nh
                    parent[v] = u
                    ppos[v] = pos
                    # push
                    j = hsize
                    hsize += 1
                    while j > 0 and _less(nd, nh, v, hkey[(j - 1) >> 1], hhop[(j - 1) >> 1], hval[(j - 1) >> 1]):
                        hkey[j] = hkey[(j - 1) >> 1]
                        hhop[j] = hhop[(j - 1) >> 1]
                        hval[j] = hval[(j - 1) >> 1]
                        j = (j - 1) >> 1
                    hkey[j] = nd
                    hhop[j] = nh
                    hval[j] = v

    return dist_arr, parent_arr, ppos_arr
