"""Homomorphism densities, single-flip density increments, and their fast paths.

Densities count maps that need not be injective, exactly as the cell-measure
integral implies; template vertices mapped to coincident big-graph vertices
contribute nothing whenever a template edge joins them (zero diagonal).

The single-flip increment of a density is independent of the flipped bit
itself. The general evaluator decomposes the maps that touch the flipped
pair {u, v} by the exact preimages (P, Q) of u and v among the template
vertices: each admissible (P, Q) yields a collapsed two-pinned template
whose maps avoid {u, v}, countable either per pair (backtracking) or for
all pairs at once (tensor contraction plus a Mobius correction that removes
the maps straying back into {u, v}).
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._count_kernels import count_maps, pinned_two_rest_edge
from .graph import Graph, edge_index
from .templates import TemplateGraph

# Negative-control switch: deliberately corrupts the triangle fast path so the
# validation suite can demonstrate that the delta-equivalence oracle catches a
# broken fast path. Never enable outside that check.
_CORRUPT_FAST_PATH = bool(int(os.environ.get("ERGMKIT_CORRUPT_FAST_PATH", "0")))


def _as_dense(x) -> np.ndarray:
    if isinstance(x, Graph):
        return x.to_dense()
    return np.asarray(x, dtype=np.uint8)


# -- backtracking plumbing -------------------------------------------------


def _backtrack_arrays(k: int, edges, pinned: dict[int, int]):
    """Order template vertices (pinned first, then neighbors-first) and build
    CSR parent constraints for the counting kernel."""
    adj = [set() for _ in range(k)]
    for i, j in edges:
        adj[i].add(j)
        adj[j].add(i)
    order = sorted(pinned)
    placed = set(order)
    while len(order) < k:
        best, best_links = -1, -1
        for cand in range(k):
            if cand in placed:
                continue
            links = len(adj[cand] & placed)
            if links > best_links or (links == best_links and cand < best):
                best, best_links = cand, links
        order.append(best)
        placed.add(best)
    pos_of = {vtx: t for t, vtx in enumerate(order)}
    ptr = [0]
    idx = []
    for t, vtx in enumerate(order):
        for nb in sorted(adj[vtx]):
            if pos_of[nb] < t:
                idx.append(pos_of[nb])
        ptr.append(len(idx))
    pinned_val = np.full(k, -1, dtype=np.int64)
    for vtx, val in pinned.items():
        pinned_val[pos_of[vtx]] = val
    return (
        np.asarray(ptr, dtype=np.int64),
        np.asarray(idx, dtype=np.int64),
        pinned_val,
    )


def _count(adj: np.ndarray, k: int, edges, pinned: dict[int, int] | None = None,
           excluded=()) -> int:
    pinned = pinned or {}
    ptr, idx, pinned_val = _backtrack_arrays(k, tuple(edges), pinned)
    ex = list(excluded) + [-1, -1]
    n = adj.shape[0]
    return int(count_maps(adj, ptr, idx, pinned_val, ex[0], ex[1], n, k))


# -- densities ---------------------------------------------------------------


def hom_count(H: TemplateGraph, X) -> int:
    """Number of edge-preserving maps [k] -> [n] (ordered, non-injective)."""
    adj = _as_dense(X)
    if H.edge_count == 1:
        # isolated template vertices are free: factor n each
        return int(adj.sum()) * int(adj.shape[0]) ** (H.k - 2)
    if _is_star(H):
        k = _star_leaves(H)
        deg = adj.sum(axis=1).astype(np.int64)
        return sum(int(d) ** k for d in deg)
    if _is_cycle(H):
        a = adj.astype(np.float64)
        return int(round(np.trace(np.linalg.matrix_power(a, H.k))))
    return _count(adj, H.k, H.edges)


def hom_density(H: TemplateGraph, X) -> float:
    """t(H, X): hom_count normalized by n^k."""
    adj = _as_dense(X)
    n = adj.shape[0]
    return hom_count(H, adj) / float(n) ** H.k


def _is_star(H: TemplateGraph) -> bool:
    if H.edge_count != H.k - 1 or H.k < 2:
        return False
    degs = sorted(H.degrees)
    return degs[-1] == H.k - 1 and all(d == 1 for d in degs[:-1])


def _star_leaves(H: TemplateGraph) -> int:
    return H.k - 1


def _is_triangle(H: TemplateGraph) -> bool:
    return H.k == 3 and H.edge_count == 3


def _is_cycle(H: TemplateGraph) -> bool:
    return (
        H.k >= 3
        and H.edge_count == H.k
        and all(d == 2 for d in H.degrees)
        and H.is_connected()
    )


# -- (P, Q) decomposition ----------------------------------------------------


@dataclass(frozen=True)
class _PQTerm:
    P: frozenset
    Q: frozenset
    cross: frozenset          # template edges between P and Q
    rest: tuple               # remaining template vertices
    a_edges: frozenset        # rest vertices tied to the u-side pin
    b_edges: frozenset        # rest vertices tied to the v-side pin
    rest_edges: frozenset     # template edges within rest


@lru_cache(maxsize=256)
def _pq_terms(k: int, edges: tuple) -> tuple:
    """All ordered pairs of disjoint nonempty independent sets of the template,
    with their collapsed-template data."""
    eset = set(edges)

    def independent(s):
        return all((min(a, b), max(a, b)) not in eset for a, b in itertools.combinations(s, 2))

    verts = list(range(k))
    terms = []
    for pr in range(1, 1 << k):
        P = frozenset(i for i in verts if pr >> i & 1)
        if not independent(P):
            continue
        rest0 = [i for i in verts if i not in P]
        for qr in range(1, 1 << len(rest0)):
            Q = frozenset(rest0[i] for i in range(len(rest0)) if qr >> i & 1)
            if not independent(Q):
                continue
            cross = frozenset(e for e in edges if (e[0] in P and e[1] in Q) or (e[0] in Q and e[1] in P))
            rest = tuple(i for i in verts if i not in P and i not in Q)
            rset = set(rest)
            a_edges = frozenset(l for l in rest if any((min(p, l), max(p, l)) in eset for p in P))
            b_edges = frozenset(l for l in rest if any((min(q, l), max(q, l)) in eset for q in Q))
            rest_edges = frozenset(e for e in edges if e[0] in rset and e[1] in rset)
            terms.append(_PQTerm(P, Q, cross, rest, a_edges, b_edges, rest_edges))
    return tuple(terms)


def _collapsed_count(term: _PQTerm, adj: np.ndarray, u: int, v: int) -> int:
    """Maps of the collapsed template with the two pins at (u, v), rest
    avoiding both."""
    rest_pos = {l: 2 + i for i, l in enumerate(term.rest)}
    k = 2 + len(term.rest)
    edges = []
    for l in term.a_edges:
        edges.append((0, rest_pos[l]))
    for l in term.b_edges:
        edges.append((1, rest_pos[l]))
    for (a, b) in term.rest_edges:
        edges.append(tuple(sorted((rest_pos[a], rest_pos[b]))))
    return _count(adj, k, sorted(set(edges)), pinned={0: u, 1: v}, excluded=(u, v))


def _pack_rows(adj: np.ndarray) -> np.ndarray:
    n = adj.shape[0]
    nwords = (n + 63) // 64
    packed = np.packbits(adj, axis=1, bitorder="little")
    padded = np.zeros((n, nwords * 8), dtype=np.uint8)
    padded[:, : packed.shape[1]] = packed
    return padded.view(np.uint64).reshape(n, nwords)


def _one_rest_matrix(adj: np.ndarray, wa: bool, wb: bool, memo: dict) -> np.ndarray:
    key = ("r1", wa, wb)
    if key in memo:
        return memo[key]
    n = adj.shape[0]
    a = adj.astype(np.float64)
    if wa and wb:
        out = a @ a
    elif wa:
        out = np.repeat(a.sum(axis=1)[:, None], n, axis=1)
    elif wb:
        out = np.repeat(a.sum(axis=1)[None, :], n, axis=0)
    else:
        out = np.full((n, n), float(n))
    memo[key] = out
    return out


def _collapsed_pair_matrix(term: _PQTerm, adj: np.ndarray, rows: np.ndarray,
                           memo: dict) -> np.ndarray:
    """Unrestricted two-pinned map counts of the collapsed template, for all
    vertex pairs at once. Up to two free vertices this reduces to degree
    broadcasts, one matrix product, or a popcount sweep over bit rows;
    larger collapses fall back to a tensor contraction. Exact in float64
    for the sizes this package targets."""
    n = adj.shape[0]
    r = len(term.rest)
    if r == 0:
        return np.ones((n, n))
    if r == 1:
        l = term.rest[0]
        return _one_rest_matrix(adj, l in term.a_edges, l in term.b_edges, memo)
    if r == 2:
        l1, l2 = term.rest
        f1 = (l1 in term.a_edges, l1 in term.b_edges)
        f2 = (l2 in term.a_edges, l2 in term.b_edges)
        if not term.rest_edges:
            return _one_rest_matrix(adj, *f1, memo) * _one_rest_matrix(adj, *f2, memo)
        key = ("r2", tuple(sorted((f1, f2))))
        if key in memo:
            return memo[key]
        out = np.zeros((n, n))
        pinned_two_rest_edge(rows, n, rows.shape[1], f1[0], f1[1], f2[0], f2[1], out)
        memo[key] = out
        return out
    return _einsum_pair_matrix(term, adj)


def _einsum_pair_matrix(term: _PQTerm, adj: np.ndarray) -> np.ndarray:
    n = adj.shape[0]
    a = adj.astype(np.float64)
    subs = "abcdef"
    operands, specs = [], []
    used = set()
    for l in sorted(term.a_edges):
        specs.append("u" + subs[term.rest.index(l)])
        operands.append(a)
        used.update(("u", subs[term.rest.index(l)]))
    for l in sorted(term.b_edges):
        specs.append("v" + subs[term.rest.index(l)])
        operands.append(a)
        used.update(("v", subs[term.rest.index(l)]))
    for (x, y) in sorted(term.rest_edges):
        sx, sy = subs[term.rest.index(x)], subs[term.rest.index(y)]
        specs.append(sx + sy)
        operands.append(a)
        used.update((sx, sy))
    ones = np.ones(n, dtype=np.float64)
    for axis in ("u", "v"):
        if axis not in used:
            specs.append(axis)
            operands.append(ones)
    for i in range(len(term.rest)):
        if subs[i] not in used:
            specs.append(subs[i])
            operands.append(ones)
    return np.einsum(",".join(specs) + "->uv", *operands, optimize=True)


def delta_matrix(H: TemplateGraph, X) -> np.ndarray:
    """Single-flip density increment for every unordered pair, as a symmetric
    matrix (diagonal zero). Entry (u, v) equals delta_hom(H, X, (u, v))."""
    adj = _as_dense(X)
    n = adj.shape[0]
    nf = float(n)
    if H.edge_count == 1:
        out = np.full((n, n), 2.0 / nf**2)
        np.fill_diagonal(out, 0.0)
        return out
    if _is_triangle(H):
        a = adj.astype(np.float64)
        codeg = a @ a
        bump = 1e-6 if _CORRUPT_FAST_PATH else 0.0
        out = (6.0 + bump) * codeg / nf**3
        np.fill_diagonal(out, 0.0)
        return out
    if _is_star(H):
        k = _star_leaves(H)
        deg = adj.sum(axis=1, dtype=np.float64)
        dprime = deg[:, None] - adj  # degree not counting the flipped pair
        grow = (dprime + 1.0) ** k - dprime**k
        out = (grow + grow.T) / nf ** (k + 1)
        np.fill_diagonal(out, 0.0)
        return out
    if H.k > 6:
        raise ValueError("all-pairs deltas support templates with at most 6 vertices")
    terms = _pq_terms(H.k, H.edges)
    af = adj.astype(np.float64)
    rows = _pack_rows(adj)
    memo: dict = {}
    order = sorted(range(len(terms)), key=lambda i: -(len(terms[i].P) + len(terms[i].Q)))
    N = {}
    for ti in order:
        t = terms[ti]
        M = _collapsed_pair_matrix(t, adj, rows, memo)
        for tj in range(len(terms)):
            s = terms[tj]
            if tj == ti or not (s.P >= t.P and s.Q >= t.Q):
                continue
            corr = N[tj]
            if s.cross - t.cross:
                corr = corr * af
            M = M - corr
        N[ti] = M
    total = np.zeros((n, n))
    for ti, t in enumerate(terms):
        if t.cross:
            total += N[ti]
    out = total / nf**H.k
    np.fill_diagonal(out, 0.0)
    return out


def delta_hom(H: TemplateGraph, X, e) -> float:
    """Density increment of adding the pair e = (u, v), independent of the
    current bit at e: t(H, X with e) - t(H, X without e)."""
    adj = _as_dense(X)
    n = adj.shape[0]
    u, v = e
    if u == v:
        raise ValueError("pair must join two distinct vertices")
    nf = float(n)
    if H.edge_count == 1:
        return 2.0 / nf**2
    if _is_triangle(H):
        codeg = int(np.dot(adj[u].astype(np.int64), adj[v].astype(np.int64)))
        bump = 1e-6 if _CORRUPT_FAST_PATH else 0.0
        return (6.0 + bump) * codeg / nf**3
    if _is_star(H):
        k = _star_leaves(H)
        du = int(adj[u].sum()) - int(adj[u, v])
        dv = int(adj[v].sum()) - int(adj[u, v])
        return (float((du + 1) ** k - du**k + (dv + 1) ** k - dv**k)) / nf ** (k + 1)
    total = 0
    for t in _pq_terms(H.k, H.edges):
        if t.cross:
            total += _collapsed_count(t, adj, u, v)
    return total / nf**H.k


def effective_density(H: TemplateGraph, X, e) -> float:
    """Ambient edge density as seen by pair e through template H: the
    (|E|-1)-th root of the normalized density increment. Zero increments map
    to zero. Templates with a single edge are rejected (undefined exponent)."""
    if H.edge_count < 2:
        raise ValueError("effective density needs a template with at least 2 edges")
    adj = _as_dense(X)
    n = adj.shape[0]
    d = delta_hom(H, adj, e)
    base = n * n * d / (2.0 * H.edge_count)
    if base <= 0.0:
        return 0.0
    return base ** (1.0 / (H.edge_count - 1))


def effective_density_matrix(H: TemplateGraph, X) -> np.ndarray:
    if H.edge_count < 2:
        raise ValueError("effective density needs a template with at least 2 edges")
    adj = _as_dense(X)
    n = adj.shape[0]
    base = n * n * delta_matrix(H, adj) / (2.0 * H.edge_count)
    out = np.where(base > 0.0, base, 0.0) ** (1.0 / (H.edge_count - 1))
    np.fill_diagonal(out, 0.0)
    return out


# -- restricted (vertex-pinned) densities -----------------------------------


def restricted_hom_density(H: TemplateGraph, X, u: int) -> float:
    """Density of maps whose image contains vertex u: all maps minus the maps
    avoiding u, normalized by n^k."""
    adj = _as_dense(X)
    n = adj.shape[0]
    total = _count(adj, H.k, H.edges)
    avoiding = _count(adj, H.k, H.edges, excluded=(u,))
    return (total - avoiding) / float(n) ** H.k


def vertex_density_surrogate(H: TemplateGraph, X, u: int) -> float:
    """Sum over template positions of the density pinned at u; upper bound on
    restricted_hom_density with gap at most k^3 / n^2."""
    adj = _as_dense(X)
    n = adj.shape[0]
    total = 0
    for l in range(H.k):
        total += _count(adj, H.k, H.edges, pinned={l: u})
    return total / float(n) ** H.k


def degree_profile_density(H: TemplateGraph, p_u: float, p: float) -> float:
    """Single-vertex mean-field value n * N_G(X; u) for a graph near the
    constant-p graphon: sum over the degree sequence of p_u^d p^(|E|-d)."""
    return sum(p_u**d * p ** (H.edge_count - d) for d in H.degrees)


def approx_delta(H: TemplateGraph, n: int, p_star: float, p_uv: float) -> float:
    """Main term of the density increment for a graph whose degrees sit at
    p_star and whose pair (u, v) has normalized codegree p_uv:
    (2/n^2) * sum over template edges of (p_uv / p_star^2)^d_ij * p_star^(|E|-1).
    """
    if not 0.0 < p_star < 1.0:
        raise ValueError("p_star must be interior to (0, 1)")
    s = 0.0
    for (i, j) in H.edges:
        s += (p_uv / p_star**2) ** H.d_ij[(i, j)]
    return 2.0 / n**2 * s * p_star ** (H.edge_count - 1)
