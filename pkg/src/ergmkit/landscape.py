"""Scalar landscape analysis: the variational free energy, its maxima, the
mean-field update curve and its fixed points, and the temperature-regime call.

The free energy of an ambient density p is sum_i beta_i p^|E_i| minus the
(negated, halved) binary entropy. Its non-degenerate local maxima coincide
with the stable fixed points of the mean-field single-edge update
probability; the number and degeneracy of the maxima decide the regime:
one non-degenerate maximum mixes fast, several mix exponentially slowly,
and a vanishing second derivative is the critical case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .model import ModelParams, triangle_model

GRID_SIZE = 4096
GRID_MARGIN = 1e-9      # the entropy term has infinite slope at the endpoints
ROOT_TOL = 1e-12
TOL_DEGENERATE = 1e-6   # |L''| below this is treated as a vanishing second derivative
TOL_GLOBAL = 1e-9       # maxima within this of the best value are all global
TOL_MATCH = 1e-8        # maxima <-> fixed point matching
TOL_DISTINCT = 1e-6     # fixed points closer than this count as the same point


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def entropy_term(p: float) -> float:
    """(1/2) p log p + (1/2)(1-p) log(1-p), continuously extended to 0 and 1."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if p == 0.0 or p == 1.0:
        return 0.0
    return 0.5 * (p * math.log(p) + (1.0 - p) * math.log(1.0 - p))


def free_energy(model: ModelParams, p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    return sum(b * p**ec for b, ec in zip(model.beta, model.edge_counts())) - entropy_term(p)


def free_energy_d1(model: ModelParams, p: float) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError("derivative needs p interior to (0, 1)")
    poly = sum(b * ec * p ** (ec - 1) for b, ec in zip(model.beta, model.edge_counts()))
    return poly - 0.5 * math.log(p / (1.0 - p))


def free_energy_d2(model: ModelParams, p: float) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError("derivative needs p interior to (0, 1)")
    poly = sum(
        b * ec * (ec - 1) * p ** (ec - 2)
        for b, ec in zip(model.beta, model.edge_counts())
        if ec >= 2
    )
    return poly - 0.5 / (p * (1.0 - p))


def mean_field_update(model: ModelParams, p: float) -> float:
    """Idealized single-edge update probability at ambient density p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    arg = sum(2.0 * b * ec * p ** (ec - 1) for b, ec in zip(model.beta, model.edge_counts()))
    return sigmoid(arg)


def mean_field_update_d1(model: ModelParams, p: float) -> float:
    arg = sum(2.0 * b * ec * p ** (ec - 1) for b, ec in zip(model.beta, model.edge_counts()))
    inner = sum(
        2.0 * b * ec * (ec - 1) * p ** (ec - 2)
        for b, ec in zip(model.beta, model.edge_counts())
        if ec >= 2
    )
    s = sigmoid(arg)
    return s * (1.0 - s) * inner


class Regime(Enum):
    HIGH = "High"
    LOW = "Low"
    CRITICAL = "Critical"


@dataclass(frozen=True)
class Maximum:
    p: float
    value: float
    second_deriv: float
    is_global: bool
    is_degenerate: bool


@dataclass(frozen=True)
class FixedPoint:
    p: float
    slope: float
    stable: bool


@dataclass(frozen=True)
class LandscapeReport:
    maxima: tuple[Maximum, ...]
    fixed_points: tuple[FixedPoint, ...]
    regime: Regime
    endpoint_supremum: bool  # set when the boundary beats every interior maximum


def _bisect(f, lo: float, hi: float, tol: float = ROOT_TOL) -> float:
    flo = f(lo)
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0.0) == (flo > 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _scan_roots(f, lo: float, hi: float, grid_size: int, tol: float) -> list[float]:
    xs = [lo + (hi - lo) * i / (grid_size - 1) for i in range(grid_size)]
    vals = [f(x) for x in xs]
    roots = []
    for i in range(len(xs) - 1):
        a, b = vals[i], vals[i + 1]
        if a == 0.0:
            roots.append(xs[i])
        elif (a > 0.0) != (b > 0.0):
            roots.append(_bisect(f, xs[i], xs[i + 1], tol))
    if vals[-1] == 0.0:
        roots.append(xs[-1])
    return roots


def find_local_maxima(model: ModelParams, grid_size: int = GRID_SIZE,
                      tol: float = ROOT_TOL) -> tuple[tuple[Maximum, ...], bool]:
    """Interior local maxima of the free energy, plus an endpoint flag.

    Scans sign changes of the first derivative on a uniform interior grid,
    refines each bracket by bisection, and keeps stationary points whose
    second derivative is below the degeneracy tolerance (clear minima are
    dropped; near-flat stationary points stay, flagged degenerate).
    """
    if grid_size < 64:
        raise ValueError("grid_size must be at least 64")
    lo, hi = GRID_MARGIN, 1.0 - GRID_MARGIN
    roots = _scan_roots(lambda p: free_energy_d1(model, p), lo, hi, grid_size, tol)
    cands = []
    for p in roots:
        d2 = free_energy_d2(model, p)
        if d2 < TOL_DEGENERATE:
            cands.append((p, free_energy(model, p), d2))
    best = max((v for _, v, _ in cands), default=-math.inf)
    maxima = tuple(
        Maximum(p, v, d2, is_global=(best - v) <= TOL_GLOBAL,
                is_degenerate=abs(d2) < TOL_DEGENERATE)
        for p, v, d2 in cands
    )
    boundary = max(free_energy(model, 0.0), free_energy(model, 1.0))
    endpoint_supremum = boundary > best + TOL_GLOBAL
    return maxima, endpoint_supremum


def find_fixed_points(model: ModelParams, grid_size: int = GRID_SIZE,
                      tol: float = ROOT_TOL) -> tuple[FixedPoint, ...]:
    """All sign-change solutions of mean_field_update(p) = p on [0, 1]."""
    roots = _scan_roots(
        lambda p: mean_field_update(model, p) - p, 0.0, 1.0, grid_size, tol
    )
    out = []
    for p in roots:
        slope = mean_field_update_d1(model, p)
        out.append(FixedPoint(p, slope, stable=slope < 1.0))
    return tuple(out)


def classify_regime(maxima, tol_degenerate: float = TOL_DEGENERATE) -> Regime:
    if any(abs(m.second_deriv) < tol_degenerate for m in maxima):
        return Regime.CRITICAL
    if len(maxima) == 1:
        return Regime.HIGH
    return Regime.LOW


def landscape_report(model: ModelParams, grid_size: int = GRID_SIZE,
                     tol: float = ROOT_TOL) -> LandscapeReport:
    maxima, endpoint = find_local_maxima(model, grid_size, tol)
    fps = find_fixed_points(model, grid_size, tol)
    return LandscapeReport(maxima, fps, classify_regime(maxima), endpoint)


# -- the two-density triangle construction ----------------------------------


class ExampleConditionError(ValueError):
    """Raised when the supplied coefficients do not produce the two-density
    metastable structure; the message names the failed condition."""


@dataclass(frozen=True)
class TwoDensitySolution:
    p1: float            # global maximizer (bulk density)
    p2: float            # secondary local maximizer
    q: float             # tagged-vertex density: fixed point of the cross update
    f_prime_p1: float
    g_prime_q: float


def solve_two_density_point(beta0: float, beta1: float,
                            grid_size: int = 200_000) -> TwoDensitySolution:
    """For the edge+triangle model, find the bulk density p1 (global maximizer),
    the secondary maximizer p2, and a distinct stable fixed point q of
    g(x) = sigmoid(2 beta0 + 6 beta1 x p1), the update probability of an edge
    between a tagged vertex of density q and the bulk.

    Raises ExampleConditionError naming the first failed condition:
      1. the self-consistent update curve must have exactly three fixed points
         (two stable maxima and one unstable crossing);
      2. g must have a stable fixed point distinct from p1 and p2;
      3. both stability slopes must be below one.
    """
    model = triangle_model(beta0, beta1)
    fps = find_fixed_points(model, grid_size)
    if len(fps) != 3:
        raise ExampleConditionError(
            f"condition 1 failed: update curve has {len(fps)} fixed point(s), need 3"
        )
    maxima, _ = find_local_maxima(model, grid_size)
    nondeg = [m for m in maxima if not m.is_degenerate]
    if len(nondeg) != 2:
        raise ExampleConditionError(
            f"condition 1 failed: {len(nondeg)} non-degenerate maxima, need 2"
        )
    p1 = max(nondeg, key=lambda m: m.value).p
    p2 = min(nondeg, key=lambda m: m.value).p

    def g(x):
        return sigmoid(2.0 * beta0 + 6.0 * beta1 * x * p1)

    def g_d1(x):
        s = g(x)
        return s * (1.0 - s) * 6.0 * beta1 * p1

    qroots = _scan_roots(lambda x: g(x) - x, 0.0, 1.0, grid_size, ROOT_TOL)
    q = None
    for r in qroots:
        if g_d1(r) < 1.0 and abs(r - p1) > TOL_DISTINCT and abs(r - p2) > TOL_DISTINCT:
            q = r
            break
    if q is None:
        raise ExampleConditionError(
            "condition 2 failed: no stable fixed point of the cross update "
            "distinct from the two maximizers"
        )
    f_prime = mean_field_update_d1(model, p1)
    g_prime = g_d1(q)
    if not (f_prime < 1.0 and g_prime < 1.0):
        raise ExampleConditionError(
            f"condition 3 failed: stability slopes f'={f_prime:.6g}, g'={g_prime:.6g}"
        )
    return TwoDensitySolution(p1, p2, q, f_prime, g_prime)
