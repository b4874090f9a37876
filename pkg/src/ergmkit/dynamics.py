"""Single-edge-update chains, couplings, and trajectory running.

Each step picks one unordered pair uniformly and resamples its bit from the
conditional law of the measure given every other edge; the conditional is
computed from single-flip density increments, never from the full
Hamiltonian, so it is independent of the current bit by construction and
reversibility is automatic.

Chains whose templates are all edges, stars, or triangles run inside a
compiled kernel on bit-packed rows (row AND + popcount per step); other
templates fall back to a per-step Python loop meant for small sizes.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from . import _chain_kernels as ck
from .graph import (
    Graph,
    complete_graph,
    dominates,
    edge_pair,
    n_pairs,
    new_empty,
    sample_gnp,
)
from .homcounts import _is_star, _is_triangle, _star_leaves, delta_hom, delta_matrix
from .landscape import sigmoid
from .model import ModelParams
from .rng import make_rng

_CHUNK = 1 << 20
_DEBUG_CACHES = bool(int(os.environ.get("ERGMKIT_DEBUG_CACHES", "0")))


# -- conditional update probabilities ---------------------------------------


def hamiltonian_flip_arg(model: ModelParams, X, e) -> float:
    """sum_i n^2 beta_i * (single-flip density increment of template i)."""
    if isinstance(X, Graph) and kernel_tables(model, X.n) is not None:
        return _packed_flip_arg(model, X, e)
    n = X.n if isinstance(X, Graph) else np.asarray(X).shape[0]
    return sum(
        n * n * b * delta_hom(t, X, e)
        for b, t in zip(model.beta, model.all_templates())
    )


def _packed_flip_arg(model: ModelParams, g: Graph, e) -> float:
    u, v = e
    bit = 1 if g.has_edge(u, v) else 0
    arg = 0.0
    codeg = None
    for b, t in zip(model.beta, model.all_templates()):
        if t.edge_count == 1:
            arg += 2.0 * b
        elif _is_star(t):
            k = _star_leaves(t)
            du = g.degree(u) - bit
            dv = g.degree(v) - bit
            arg += b * ((du + 1) ** k - du**k + (dv + 1) ** k - dv**k) / float(g.n) ** (k - 1)
        elif _is_triangle(t):
            if codeg is None:
                codeg = g.codegree(u, v)
            arg += 6.0 * b * codeg / g.n
        else:  # pragma: no cover - kernel_tables gate keeps us out of here
            arg += g.n * g.n * b * delta_hom(t, g, e)
    return arg


def conditional_prob(model: ModelParams, X, e) -> float:
    """Probability that the resampled bit at pair e is 1, given all other
    edges. A function of the off-e graph only."""
    return sigmoid(hamiltonian_flip_arg(model, X, e))


def conditional_matrix(model: ModelParams, X) -> np.ndarray:
    """Conditional update probability for every pair at once (diagonal zero)."""
    if isinstance(X, Graph):
        n = X.n
    else:
        n = np.asarray(X).shape[0]
    arg = np.zeros((n, n))
    for b, t in zip(model.beta, model.all_templates()):
        if b != 0.0:
            arg += n * n * b * delta_matrix(t, X)
    out = np.empty_like(arg)
    np.negative(np.abs(arg), out=out)
    np.exp(out, out=out)
    out /= 1.0 + out
    pos = arg > 0
    out[pos] = 1.0 - out[pos]
    np.fill_diagonal(out, 0.0)
    return out


def kernel_tables(model: ModelParams, n: int):
    """Per-template coefficient tables for the compiled stepping kernel, or
    None when some template has no kernel fast path."""
    ttype, tk, tcoef = [], [], []
    for b, t in zip(model.beta, model.all_templates()):
        if t.edge_count == 1:
            ttype.append(0)
            tk.append(0)
            tcoef.append(2.0 * b)
        elif _is_star(t):
            k = _star_leaves(t)
            ttype.append(1)
            tk.append(k)
            tcoef.append(b * float(n) ** (1 - k))
        elif _is_triangle(t):
            ttype.append(2)
            tk.append(0)
            tcoef.append(6.0 * b / n)
        else:
            return None
    return (
        np.asarray(ttype, dtype=np.int64),
        np.asarray(tk, dtype=np.int64),
        np.asarray(tcoef, dtype=np.float64),
    )


# -- chain state -------------------------------------------------------------


@dataclass
class ChainState:
    """A chain: graph, model, seeded stream, and the degree cache.

    Single-owner: step it from one thread only. Replicas should use
    consecutive stream ids of the same seed.
    """

    graph: Graph
    model: ModelParams
    rng: np.random.Generator
    seed: int | None = None
    stream: int | None = None
    step: int = 0
    degrees: np.ndarray = field(init=False)

    def __post_init__(self):
        self.degrees = self.graph.degrees()

    def check_caches(self):
        assert np.array_equal(self.degrees, self.graph.degrees()), "degree cache stale"


def make_chain(model: ModelParams, x0: Graph, seed: int, stream: int = 0) -> ChainState:
    return ChainState(x0, model, make_rng(seed, stream), seed=seed, stream=stream)


def glauber_step(state: ChainState) -> ChainState:
    """One update, drawn as (pair index, uniform) from the state's stream."""
    g = state.graph
    idx = int(state.rng.integers(0, n_pairs(g.n)))
    u0 = float(state.rng.random())
    u, v = edge_pair(idx)
    prob = conditional_prob(state.model, g, (u, v))
    new = 1 if u0 < prob else 0
    old = 1 if g.has_edge(u, v) else 0
    if new != old:
        g.flip_edge(u, v)
        state.degrees[u] += new - old
        state.degrees[v] += new - old
    state.step += 1
    if _DEBUG_CACHES:
        state.check_caches()
    return state


def _run_kernel_steps(state: ChainState, steps: int, tables) -> None:
    """Advance the chain by `steps` updates inside the compiled kernel."""
    g = state.graph
    ttype, tk, tcoef = tables
    done = 0
    m = g.m
    while done < steps:
        c = min(_CHUNK, steps - done)
        idx = state.rng.integers(0, n_pairs(g.n), size=c).astype(np.int64)
        unif = state.rng.random(c)
        m = int(
            ck.glauber_chunk(
                g.rows, state.degrees, g.n, g.nwords, ttype, tk, tcoef, idx, unif, m
            )
        )
        done += c
    state.step += steps
    g.resync_from_rows()
    assert g.m == m, "edge count drifted between kernel and graph"
    if _DEBUG_CACHES:
        state.check_caches()


def advance(state: ChainState, steps: int) -> ChainState:
    """Run `steps` updates, using the kernel when the model supports it."""
    tables = kernel_tables(state.model, state.graph.n)
    if tables is not None:
        _run_kernel_steps(state, steps, tables)
    else:
        for _ in range(steps):
            glauber_step(state)
    return state


# -- trajectory running with observers ---------------------------------------


class ObserverError(RuntimeError):
    pass


@dataclass
class ChainReport:
    steps: np.ndarray
    series: dict[str, np.ndarray]
    final: Graph
    total_steps: int


def run_chain(model: ModelParams, x0: Graph, T: int, rng: np.random.Generator,
              observers=None, stride: int | None = None,
              seed: int | None = None, stream: int | None = None) -> ChainReport:
    """Run T updates from x0, observing every `stride` steps (and at step 0).

    observers maps a name to a callable taking a read-only Graph and
    returning a float or a dict of floats. An observer exception aborts the
    run with the failing name and step attached.
    """
    if T < 0:
        raise ValueError("T must be nonnegative")
    observers = observers or {}
    stride = stride or max(T, 1)
    state = ChainState(x0.copy(), model, rng, seed=seed, stream=stream)
    sample_steps = list(range(0, T + 1, stride))
    rows: list[dict] = []

    def observe(t):
        rec = {}
        for name, fn in observers.items():
            try:
                val = fn(state.graph)
            except Exception as exc:
                raise ObserverError(f"observer {name!r} failed at step {t}: {exc}") from exc
            if isinstance(val, dict):
                rec.update({f"{name}.{k}": float(v) for k, v in val.items()})
            else:
                rec[name] = float(val)
        rows.append(rec)

    observe(0)
    done = 0
    for target in sample_steps[1:]:
        advance(state, target - done)
        done = target
        observe(target)
    if done < T:
        advance(state, T - done)
    cols: dict[str, np.ndarray] = {}
    for key in rows[0]:
        cols[key] = np.array([r[key] for r in rows])
    return ChainReport(
        steps=np.asarray(sample_steps, dtype=np.int64),
        series=cols,
        final=state.graph,
        total_steps=T,
    )


# -- monotone coupling --------------------------------------------------------


@dataclass
class CoupledPair:
    lower: ChainState
    upper: ChainState
    ordered: bool = True


def monotone_pair_step(pair: CoupledPair, rng: np.random.Generator) -> CoupledPair:
    """Shared pair index and shared uniform; each side sets its bit to 1 iff
    the uniform is strictly below its own conditional."""
    gl, gu = pair.lower.graph, pair.upper.graph
    idx = int(rng.integers(0, n_pairs(gl.n)))
    u0 = float(rng.random())
    a, b = edge_pair(idx)
    for st in (pair.lower, pair.upper):
        g = st.graph
        prob = conditional_prob(st.model, g, (a, b))
        new = 1 if u0 < prob else 0
        old = 1 if g.has_edge(a, b) else 0
        if new != old:
            g.flip_edge(a, b)
            st.degrees[a] += new - old
            st.degrees[b] += new - old
        st.step += 1
    if pair.ordered and not dominates(gl, gu):
        pair.ordered = False
    return pair


@dataclass
class CoupledRunResult:
    steps: int
    coalesced: bool
    order_violations: int
    hamming: int


def run_coupled(model: ModelParams, lower: Graph, upper: Graph, steps: int,
                rng: np.random.Generator, stop_on_coalescence: bool = False) -> CoupledRunResult:
    """Kernel-backed monotone coupling of two chains from the given states.

    Tracks the Hamming distance between edge sets and the number of pairs
    where the lower chain holds an edge the upper one lacks (zero means the
    order was preserved throughout, given an ordered start).
    """
    tables = kernel_tables(model, lower.n)
    if tables is None:
        raise ValueError("coupled kernel needs edge/star/triangle templates")
    if lower.n != upper.n:
        raise ValueError("coupled chains need equal vertex counts")
    ttype, tk, tcoef = tables
    gl, gu = lower, upper
    deg_l, deg_u = gl.degrees(), gu.degrees()
    dh = int(np.bitwise_count(gl.rows ^ gu.rows).sum()) // 2
    bad = int(np.bitwise_count(gl.rows & ~gu.rows).sum()) // 2
    viol = 0
    m_l, m_u = gl.m, gu.m
    done = 0
    coalesced_at = -1
    while done < steps:
        c = min(_CHUNK, steps - done)
        idx = rng.integers(0, n_pairs(gl.n), size=c).astype(np.int64)
        unif = rng.random(c)
        m_l, m_u, dh, bad, viol, ct = ck.coupled_chunk(
            gl.rows, deg_l, gu.rows, deg_u, gl.n, gl.nwords,
            ttype, tk, tcoef, idx, unif,
            m_l, m_u, dh, bad, viol,
        )
        done += c
        if ct >= 0 and coalesced_at < 0:
            coalesced_at = done - c + int(ct) + 1
            if stop_on_coalescence:
                break
    gl.resync_from_rows()
    gu.resync_from_rows()
    return CoupledRunResult(
        steps=coalesced_at if (stop_on_coalescence and coalesced_at > 0) else done,
        coalesced=coalesced_at > 0,
        order_violations=int(viol),
        hamming=int(dh),
    )


def coalescence_time(model: ModelParams, n: int, rng: np.random.Generator,
                     cap: int) -> int | None:
    """Steps until the monotone coupling started from (empty, complete)
    coalesces, or None if the cap is hit first."""
    lower, upper = new_empty(n), complete_graph(n)
    tables = kernel_tables(model, n)
    if tables is None:
        pair = CoupledPair(
            ChainState(lower, model, rng), ChainState(upper, model, rng)
        )
        for t in range(cap):
            monotone_pair_step(pair, rng)
            if pair.lower.graph == pair.upper.graph:
                return t + 1
        return None
    ttype, tk, tcoef = tables
    deg_l, deg_u = lower.degrees(), upper.degrees()
    dh = n_pairs(n)
    bad = 0
    viol = 0
    m_l, m_u = 0, upper.m
    done = 0
    chunk = 4 * n_pairs(n)  # doubling schedule keeps draws cheap near coalescence
    while done < cap:
        c = min(chunk, cap - done)
        idx = rng.integers(0, n_pairs(n), size=c).astype(np.int64)
        unif = rng.random(c)
        m_l, m_u, dh, bad, viol, ct = ck.coupled_chunk(
            lower.rows, deg_l, upper.rows, deg_u, n, lower.nwords,
            ttype, tk, tcoef, idx, unif, m_l, m_u, dh, bad, viol,
        )
        if ct >= 0:
            return done + int(ct) + 1
        done += c
        chunk = min(chunk * 2, _CHUNK)
    return None


# -- sandwich construction ----------------------------------------------------


@dataclass
class SandwichSample:
    under: Graph
    center: Graph
    over: Graph
    ok: bool


def sandwich_sample(model: ModelParams, p_star: float, eps: float, eta: float,
                    rng: np.random.Generator, x0: Graph | None = None,
                    n: int | None = None, burn_steps: int | None = None) -> SandwichSample:
    """One sequential sweep placing a chain sample between two product samples.

    The center graph starts from a burned-in chain (stand-in for the measure
    conditioned on the cut-metric ball of radius eta around p_star) and has
    every pair re-sampled once, in linear order, from its conditional; the
    under/over graphs take the same shared uniform against the thresholds
    p_star -/+ eps, which makes them product samples at those densities.
    ok reports whether every conditional stayed inside the threshold band,
    in which case under <= center <= over edgewise by construction.
    """
    if x0 is None:
        if n is None:
            raise ValueError("need x0 or n")
        x0 = sample_gnp(n, p_star, rng)
        burn = burn_steps if burn_steps is not None else 10 * n_pairs(n)
        st = ChainState(x0, model, rng)
        advance(st, burn)
        x0 = st.graph
    g = x0.copy()
    nv = g.n
    under, over = new_empty(nv), new_empty(nv)
    lo, hi = p_star - eps, p_star + eps
    ok = True
    unifs = rng.random(n_pairs(nv))
    for i in range(n_pairs(nv)):
        u, v = edge_pair(i)
        q = conditional_prob(model, g, (u, v))
        if not (lo <= q <= hi):
            ok = False
        g.set_edge(u, v, 1 if unifs[i] < q else 0)
        under.set_edge(u, v, 1 if unifs[i] < lo else 0)
        over.set_edge(u, v, 1 if unifs[i] < hi else 0)
    return SandwichSample(under=under, center=g, over=over, ok=ok)


# -- restricted chain (exact ball membership) ---------------------------------


def restricted_glauber_step(state: ChainState, p_star: float, eta: float) -> ChainState:
    """One update of the chain for the measure conditioned on the cut-metric
    ball of radius eta around the constant p_star.

    Needs exact ball membership, so the graph must be small enough for the
    exact cut-distance enumeration. Proposals leaving the ball are rejected;
    from outside the ball the flip is taken with probability one.
    """
    from .cutnorm import exact_cut_distance_const, N_EXACT_CUT

    g = state.graph
    if g.n > N_EXACT_CUT:
        raise ValueError(f"exact ball membership needs n <= {N_EXACT_CUT}")
    idx = int(state.rng.integers(0, n_pairs(g.n)))
    u0 = float(state.rng.random())
    u, v = edge_pair(idx)
    inside_now = exact_cut_distance_const(g, p_star) <= eta
    arg = hamiltonian_flip_arg(state.model, g, (u, v))
    adding = not g.has_edge(u, v)
    g.flip_edge(u, v)
    inside_flipped = exact_cut_distance_const(g, p_star) <= eta
    if not inside_now:
        accept = True  # zero-probability current state: move with probability 1
    elif not inside_flipped:
        accept = False
    else:
        move_prob = sigmoid(arg) if adding else sigmoid(-arg)
        accept = u0 < move_prob
    if not accept:
        g.flip_edge(u, v)  # undo proposal
    else:
        d = 1 if adding else -1
        state.degrees[u] += d
        state.degrees[v] += d
    state.step += 1
    return state
