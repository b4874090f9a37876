"""Numba kernels for the single-edge-update chains.

State lives in bit-packed rows (uint64 words) plus a degree vector; the
conditional update probability is assembled from per-template coefficient
tables so one kernel serves every edge/star/triangle model. Codegrees are
recomputed per step by row AND + popcount, which keeps the amortized step
cost at O(n / 64) words; maintaining a dense codegree matrix was measured
at two orders of magnitude slower because of the O(n) scattered writes per
accepted flip.

Template coefficient encoding (prepared by dynamics.py):
    ttype 0: constant contribution, arg += coef          (single edge, 2*beta)
    ttype 1: star with tk leaves,   arg += coef * ((d_u+1)^k - d_u^k + ...)
    ttype 2: triangle,              arg += coef * codegree(u, v)
"""

import numpy as np
from numba import njit, uint64

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


@njit(cache=True, inline="always")
def _decode_pair(idx):
    v = np.int64((1.0 + np.sqrt(1.0 + 8.0 * np.float64(idx))) * 0.5)
    while v * (v - 1) // 2 > idx:
        v -= 1
    while v * (v + 1) // 2 <= idx:
        v += 1
    u = idx - v * (v - 1) // 2
    return u, v


@njit(cache=True, inline="always")
def _sigmoid(x):
    if x >= 0.0:
        return 1.0 / (1.0 + np.exp(-x))
    e = np.exp(x)
    return e / (1.0 + e)


@njit(cache=True, inline="always")
def _get_bit(rows, u, v):
    return (rows[u, v >> 6] >> np.uint64(v & 63)) & U1


@njit(cache=True, inline="always")
def _codegree(rows, nwords, u, v):
    c = uint64(0)
    for w in range(nwords):
        c += _popcnt(rows[u, w] & rows[v, w])
    return np.int64(c)


@njit(cache=True, inline="always")
def _cond_arg(rows, deg, nwords, n, ttype, tk, tcoef, u, v, bit):
    arg = 0.0
    codeg = np.int64(-1)
    du = np.float64(deg[u] - bit)
    dv = np.float64(deg[v] - bit)
    for i in range(ttype.shape[0]):
        t = ttype[i]
        if t == 0:
            arg += tcoef[i]
        elif t == 1:
            k = tk[i]
            arg += tcoef[i] * ((du + 1.0) ** k - du**k + (dv + 1.0) ** k - dv**k)
        else:
            if codeg < 0:
                codeg = _codegree(rows, nwords, u, v)
            arg += tcoef[i] * np.float64(codeg)
    return arg


@njit(cache=True, inline="always")
def _apply_bit(rows, deg, u, v, old, new):
    if new != old:
        rows[u, v >> 6] ^= U1 << np.uint64(v & 63)
        rows[v, u >> 6] ^= U1 << np.uint64(u & 63)
        if new:
            deg[u] += 1
            deg[v] += 1
        else:
            deg[u] -= 1
            deg[v] -= 1
        return True
    return False


@njit(cache=True, nogil=True)
def glauber_chunk(rows, deg, n, nwords, ttype, tk, tcoef, edge_idx, unif, m):
    """Run len(edge_idx) single-edge updates in place; returns updated edge
    count. The new bit is 1 iff the uniform is strictly below the conditional
    (ties resolve to 0)."""
    for t in range(edge_idx.shape[0]):
        u, v = _decode_pair(edge_idx[t])
        bit = np.int64(_get_bit(rows, u, v))
        arg = _cond_arg(rows, deg, nwords, n, ttype, tk, tcoef, u, v, bit)
        new = np.int64(1) if unif[t] < _sigmoid(arg) else np.int64(0)
        if _apply_bit(rows, deg, u, v, bit, new):
            m += new - bit
    return m


@njit(cache=True, nogil=True)
def coupled_chunk(rows_a, deg_a, rows_b, deg_b, n, nwords,
                  ttype, tk, tcoef, edge_idx, unif,
                  m_a, m_b, dh, bad, viol_events):
    """Shared-randomness update of two chains of the same model.

    dh is the running Hamming distance between the edge sets, bad the
    running count of pairs where chain a holds an edge chain b lacks (so
    bad == 0 certifies a is edgewise below b), and viol_events the
    cumulative count of steps that left the updated pair in that violating
    state. Returns (m_a, m_b, dh, bad, viol_events, coalesce_t) with
    coalesce_t the in-chunk index at which dh first hit zero, or -1.
    """
    coalesce_t = np.int64(-1)
    for t in range(edge_idx.shape[0]):
        u, v = _decode_pair(edge_idx[t])
        bit_a = np.int64(_get_bit(rows_a, u, v))
        bit_b = np.int64(_get_bit(rows_b, u, v))
        arg_a = _cond_arg(rows_a, deg_a, nwords, n, ttype, tk, tcoef, u, v, bit_a)
        arg_b = _cond_arg(rows_b, deg_b, nwords, n, ttype, tk, tcoef, u, v, bit_b)
        new_a = np.int64(1) if unif[t] < _sigmoid(arg_a) else np.int64(0)
        new_b = np.int64(1) if unif[t] < _sigmoid(arg_b) else np.int64(0)
        dh += (np.int64(1) if new_a != new_b else np.int64(0)) - (
            np.int64(1) if bit_a != bit_b else np.int64(0)
        )
        if new_a == 1 and new_b == 0:
            viol_events += 1
        bad += (np.int64(1) if (new_a == 1 and new_b == 0) else np.int64(0)) - (
            np.int64(1) if (bit_a == 1 and bit_b == 0) else np.int64(0)
        )
        if _apply_bit(rows_a, deg_a, u, v, bit_a, new_a):
            m_a += new_a - bit_a
        if _apply_bit(rows_b, deg_b, u, v, bit_b, new_b):
            m_b += new_b - bit_b
        if dh == 0 and coalesce_t < 0:
            coalesce_t = t
    return m_a, m_b, dh, bad, viol_events, coalesce_t


@njit(cache=True, nogil=True)
def conditional_args_all_pairs(rows, deg, n, nwords, ttype, tk, tcoef, out):
    """Conditional-probability argument for every unordered pair, written
    into the (n, n) array out (symmetric, diagonal untouched)."""
    for u in range(n):
        for v in range(u + 1, n):
            bit = np.int64(_get_bit(rows, u, v))
            arg = _cond_arg(rows, deg, nwords, n, ttype, tk, tcoef, u, v, bit)
            out[u, v] = arg
            out[v, u] = arg
