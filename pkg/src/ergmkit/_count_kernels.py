"""Numba kernels for exact ordered-map counting on dense adjacency matrices.

Counts maps tau: [k] -> [n] (not necessarily injective) sending every
template edge to an edge of the big graph, with optional pinned positions
and up to two excluded big-graph vertices for the unpinned positions.
"""

import numpy as np
from numba import njit

U1 = np.uint64(1)
M1 = np.uint64(0x5555555555555555)
M2 = np.uint64(0x3333333333333333)
M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
H01 = np.uint64(0x0101010101010101)


@njit(cache=True, inline="always")
def _popcnt(x):
    x = x - ((x >> U1) & M1)
    x = (x & M2) + ((x >> np.uint64(2)) & M2)
    x = (x + (x >> np.uint64(4))) & M4
    return (x * H01) >> np.uint64(56)


@njit(cache=True, nogil=True)
def pinned_two_rest_edge(rows, n, nwords, wa, wb, xa, xb, out):
    """out[u, v] = #{(w, x): A[w, x] = 1, w adjacent to u/v per (wa, wb),
    x adjacent to u/v per (xa, xb)}; w and x range over all vertices,
    coincidences self-filter through the zero diagonal."""
    full = ~np.uint64(0)
    maskx = np.empty(nwords, np.uint64)
    for u in range(n):
        ru = rows[u]
        for v in range(n):
            if v == u:
                continue
            rv = rows[v]
            for t in range(nwords):
                m = full
                if xa:
                    m &= ru[t]
                if xb:
                    m &= rv[t]
                maskx[t] = m
            total = np.int64(0)
            for w in range(n):
                if wa and not (ru[w >> 6] >> np.uint64(w & 63)) & U1:
                    continue
                if wb and not (rv[w >> 6] >> np.uint64(w & 63)) & U1:
                    continue
                rw = rows[w]
                c = np.uint64(0)
                for t in range(nwords):
                    c += _popcnt(rw[t] & maskx[t])
                total += np.int64(c)
            out[u, v] = total


@njit(cache=True)
def count_maps(adj, parent_ptr, parent_idx, pinned_val, excl0, excl1, n, k):
    """Iterative backtracking count.

    adj         : (n, n) uint8 dense adjacency
    parent_ptr  : int64 (k+1,) CSR pointers into parent_idx
    parent_idx  : int64, earlier positions each level must be adjacent to
    pinned_val  : int64 (k,), forced vertex per level or -1 if free
    excl0/excl1 : vertices forbidden at free levels, -1 to disable
    """
    assign = np.empty(k, np.int64)
    cur = np.empty(k, np.int64)
    count = 0
    t = 0
    cur[0] = -1
    while t >= 0:
        found = False
        if pinned_val[t] >= 0:
            if cur[t] == -1:
                c = pinned_val[t]
                ok = True
                for pi in range(parent_ptr[t], parent_ptr[t + 1]):
                    if adj[assign[parent_idx[pi]], c] == 0:
                        ok = False
                        break
                cur[t] = c if ok else n
                found = ok
        else:
            c = cur[t] + 1
            while c < n:
                if c != excl0 and c != excl1:
                    ok = True
                    for pi in range(parent_ptr[t], parent_ptr[t + 1]):
                        if adj[assign[parent_idx[pi]], c] == 0:
                            ok = False
                            break
                    if ok:
                        break
                c += 1
            cur[t] = c
            found = c < n
        if not found:
            t -= 1
            continue
        assign[t] = cur[t]
        if t == k - 1:
            count += 1
            if pinned_val[t] >= 0:
                t -= 1
        else:
            t += 1
            cur[t] = -1
    return count


@njit(cache=True)
def count_maps_batch_states(states, n, npairs, pair_u, pair_v,
                            parent_ptr, parent_idx, k):
    """Ordered-map counts of one template over many edge-bitmask states.

    states  : int64 array of edge bitmasks (bit i = pair i present)
    pair_u/pair_v : decode tables, pair i = (pair_u[i], pair_v[i])
    Returns an int64 array of counts, one per state.
    """
    out = np.empty(states.shape[0], np.int64)
    adj = np.zeros((n, n), np.uint8)
    pins = np.full(k, -1, np.int64)
    for s in range(states.shape[0]):
        for i in range(npairs):
            b = np.uint8(1) if (states[s] >> i) & 1 else np.uint8(0)
            adj[pair_u[i], pair_v[i]] = b
            adj[pair_v[i], pair_u[i]] = b
        out[s] = count_maps(adj, parent_ptr, parent_idx, pins, -1, -1, n, k)
    return out
