"""Concentration statistics for chain states: degrees, codegrees, effective
densities over a template family, cut distances, exception sets, and the
codegree-drift statistic whose concentration certifies the fixed point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cutnorm import (
    N_EXACT_CUT,
    cut_distance_bounds_const,
    deviation_kernel,
    exact_cut_norm,
    greedy_cut_lower,
    mask_vertex_set,
    spectral_cut_upper,
)
from .dynamics import conditional_matrix
from .graph import Graph
from .homcounts import _as_dense, effective_density_matrix
from .model import ModelParams
from .templates import TemplateFamily


def normalized_degree(X, u: int) -> float:
    adj = _as_dense(X)
    return float(adj[u].sum()) / adj.shape[0]


def normalized_degrees(X) -> np.ndarray:
    adj = _as_dense(X)
    return adj.sum(axis=1, dtype=np.float64) / adj.shape[0]


def normalized_codegree(X, u: int, v: int) -> float:
    """Common-neighbor count of u and v over n (the normalized wedge count)."""
    if u == v:
        raise ValueError("normalized codegree needs two distinct vertices")
    adj = _as_dense(X)
    return float(np.dot(adj[u].astype(np.int64), adj[v].astype(np.int64))) / adj.shape[0]


def codegree_matrix(X) -> np.ndarray:
    adj = _as_dense(X).astype(np.float64)
    out = adj @ adj
    np.fill_diagonal(out, 0.0)
    return out


def effective_density_extrema(X, family: TemplateFamily) -> tuple[float, float]:
    """Extrema of the per-pair effective density over every pair and every
    family template."""
    adj = _as_dense(X)
    n = adj.shape[0]
    off = ~np.eye(n, dtype=bool)
    r_min, r_max = np.inf, -np.inf
    for H in family:
        r = effective_density_matrix(H, adj)[off]
        r_min = min(r_min, float(r.min()))
        r_max = max(r_max, float(r.max()))
    return r_min, r_max


def in_density_band(X, p_star: float, eps: float, family: TemplateFamily) -> bool:
    """True iff every pair's effective density, over the whole family, lies
    within eps of p_star (the region where the monotone coupling contracts)."""
    r_min, r_max = effective_density_extrema(X, family)
    return p_star - eps <= r_min and r_max <= p_star + eps


def cut_distance_const(X, p: float, mode: str = "exact",
                       rng: np.random.Generator | None = None, starts: int = 32):
    """Cut distance to the constant-p graphon: exact value, or a
    (lower, upper) bracket in bounds mode."""
    if mode == "exact":
        return exact_cut_norm(deviation_kernel(X, p))
    if mode == "bounds":
        return cut_distance_bounds_const(X, p, rng=rng, starts=starts)
    raise ValueError("mode must be 'exact' or 'bounds'")


def restricted_cut_distance(X, S, p: float, mode: str = "exact",
                            rng: np.random.Generator | None = None, starts: int = 32):
    """Cut distance after replacing the rows and columns of S by the constant
    p, measured against the constant-p graphon."""
    K = mask_vertex_set(deviation_kernel(X, p), S)
    if mode == "exact":
        return exact_cut_norm(K)
    if mode == "bounds":
        if rng is None:
            rng = np.random.default_rng(0)
        return greedy_cut_lower(K, rng, starts), spectral_cut_upper(K)
    raise ValueError("mode must be 'exact' or 'bounds'")


def degree_exception_set(X, p: float, delta: float, dhat: float) -> np.ndarray:
    """Vertices whose normalized degree strays from p by more than
    2 * dhat / delta; at most delta * n of them whenever dhat bounds the true
    cut distance from above."""
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must lie in (0, 1]")
    pu = normalized_degrees(X)
    return np.flatnonzero(np.abs(pu - p) > 2.0 * dhat / delta)


def codegree_drift_matrix(model: ModelParams, X) -> np.ndarray:
    """For every pair (u, v): the normalized codegree minus the average of
    its one-step conditional regression targets,
    p_uv - (1/2n) sum_w (phi_uw X_vw + phi_vw X_uw)."""
    adj = _as_dense(X).astype(np.float64)
    n = adj.shape[0]
    phi = conditional_matrix(model, adj)
    np.fill_diagonal(phi, 0.0)
    target = phi @ adj  # (u, v) entry: sum_w phi_uw X_wv
    drift = codegree_matrix(adj) / n - (target + target.T) / (2.0 * n)
    np.fill_diagonal(drift, 0.0)
    return drift


def codegree_drift(model: ModelParams, X, u: int, v: int) -> float:
    if u == v:
        raise ValueError("codegree drift needs two distinct vertices")
    adj = _as_dense(X)
    n = adj.shape[0]
    from .dynamics import conditional_prob

    s = 0.0
    for w in range(n):
        if w == u or w == v:
            continue
        if adj[v, w]:
            s += conditional_prob(model, adj, (u, w))
        if adj[u, w]:
            s += conditional_prob(model, adj, (v, w))
    return normalized_codegree(adj, u, v) - s / (2.0 * n)


@dataclass(frozen=True)
class CavityStatistics:
    """Extrema separating the tagged vertex 0 from the bulk.

    bulk_min/bulk_max: over bulk degrees (u != 0) and effective densities of
    pairs not touching vertex 0. tagged_min/tagged_max: over the tagged
    degree p_0 and the ratios p_{0u} / p_ref.
    """

    bulk_min: float
    bulk_max: float
    tagged_min: float
    tagged_max: float


def cavity_statistics(X, family: TemplateFamily, p_ref: float) -> CavityStatistics:
    """Bulk and tagged-vertex extrema; the tagged vertex is vertex 0.

    Bulk statistics are taken on the subgraph induced by vertices 1..n-1
    (degrees and effective densities of that subgraph), so rewiring vertex
    0's edges can only move the tagged block: the tagged degree p_0 and the
    normalized tagged codegrees p_{0u} / p_ref.
    """
    if p_ref <= 0:
        raise ValueError("p_ref must be positive")
    adj = _as_dense(X)
    n = adj.shape[0]
    bulk = np.ascontiguousarray(adj[1:, 1:])
    nb = n - 1
    pu_bulk = bulk.sum(axis=1, dtype=np.float64) / nb
    off = ~np.eye(nb, dtype=bool)
    r_min, r_max = np.inf, -np.inf
    for H in family:
        vals = effective_density_matrix(H, bulk)[off]
        r_min = min(r_min, float(vals.min()))
        r_max = max(r_max, float(vals.max()))
    bulk_min = min(float(pu_bulk.min()), r_min)
    bulk_max = max(float(pu_bulk.max()), r_max)
    p0 = adj[0].sum(dtype=np.float64) / n
    cod0 = (adj[0:1].astype(np.float64) @ adj)[0] / n  # p_{0u} for every u
    ratios = cod0[1:] / p_ref
    tagged_min = min(p0, float(ratios.min()))
    tagged_max = max(p0, float(ratios.max()))
    return CavityStatistics(bulk_min, bulk_max, tagged_min, tagged_max)


@dataclass(frozen=True)
class ConcentrationReport:
    p_u: np.ndarray
    p_uv_max_dev: float        # max |p_uv - p_star^2| over pairs
    p_uv_min_dev: float
    codegree_exception_count: int
    r_min: float
    r_max: float
    band_member: bool          # [r_min, r_max] within [p_star - eps, p_star + eps]
    cut_lower: float
    cut_upper: float           # equal when the exact value is computed
    cavity: CavityStatistics | None


def concentration_report(X, p_star: float, eps: float, family: TemplateFamily,
                         rng: np.random.Generator | None = None,
                         codegree_tol: float | None = None,
                         p_ref: float | None = None) -> ConcentrationReport:
    """Full diagnostic sweep of one sample."""
    adj = _as_dense(X)
    n = adj.shape[0]
    pu = normalized_degrees(adj)
    cod = codegree_matrix(adj) / n
    off = ~np.eye(n, dtype=bool)
    dev = cod - p_star**2
    tol = codegree_tol if codegree_tol is not None else eps
    exc = int((np.abs(dev[off]) > tol).sum() // 2)
    r_min, r_max = effective_density_extrema(adj, family)
    member = p_star - eps <= r_min and r_max <= p_star + eps
    if n <= N_EXACT_CUT:
        d = exact_cut_norm(deviation_kernel(adj, p_star))
        lo = hi = d
    else:
        lo, hi = cut_distance_bounds_const(adj, p_star, rng=rng)
    cav = cavity_statistics(adj, family, p_ref) if p_ref else None
    return ConcentrationReport(
        p_u=pu,
        p_uv_max_dev=float(dev[off].max()),
        p_uv_min_dev=float(dev[off].min()),
        codegree_exception_count=exc,
        r_min=r_min,
        r_max=r_max,
        band_member=member,
        cut_lower=lo,
        cut_upper=hi,
        cavity=cav,
    )
