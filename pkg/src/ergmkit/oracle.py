"""Ground truth at tiny sizes: the exact measure over all graphs, the exact
one-step kernel (full and ball-restricted), total-variation curves, and
detailed-balance verification.

States are edge bitmasks in the canonical linear pair order, so state
arithmetic is bit arithmetic. The kernel is never materialized; one
application costs O(states * pairs).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._count_kernels import count_maps_batch_states
from .cutnorm import deviation_kernel, exact_cut_norm
from .graph import Graph, edge_index, edge_pair, from_dense, n_pairs
from .homcounts import _backtrack_arrays
from .model import ModelParams

N_EXACT_MAX = 6  # 2^15 states; anything larger is not an oracle any more


@dataclass
class ExactDistribution:
    n: int
    probs: np.ndarray  # indexed by edge bitmask

    def check(self, tol: float = 1e-12):
        assert (self.probs >= 0).all()
        assert abs(self.probs.sum() - 1.0) <= tol


def state_to_graph(n: int, state: int) -> Graph:
    dense = np.zeros((n, n), dtype=np.uint8)
    for i in range(n_pairs(n)):
        if state >> i & 1:
            u, v = edge_pair(i)
            dense[u, v] = dense[v, u] = 1
    return from_dense(dense)


def graph_to_state(g: Graph) -> int:
    state = 0
    for i in range(n_pairs(g.n)):
        if g.tri[i >> 3] >> (i & 7) & 1:
            state |= 1 << i
    return state


def state_hamiltonians(model: ModelParams, n: int) -> np.ndarray:
    """H(x) = sum_i n^2 beta_i t(G_i, x) for every edge-bitmask state x."""
    if n > N_EXACT_MAX:
        raise ValueError(f"exact enumeration needs n <= {N_EXACT_MAX}")
    N = n_pairs(n)
    states = np.arange(1 << N, dtype=np.int64)
    pair_u = np.array([edge_pair(i)[0] for i in range(N)], dtype=np.int64)
    pair_v = np.array([edge_pair(i)[1] for i in range(N)], dtype=np.int64)
    H = np.zeros(states.shape[0])
    for b, t in zip(model.beta, model.all_templates()):
        if b == 0.0:
            continue
        if t.edge_count == 1:
            counts = (
                2.0
                * np.bitwise_count(states.astype(np.uint64)).astype(np.float64)
                * float(n) ** (t.k - 2)
            )
        else:
            ptr, idx, _ = _backtrack_arrays(t.k, t.edges, {})
            counts = count_maps_batch_states(
                states, n, N, pair_u, pair_v, ptr, idx, t.k
            ).astype(np.float64)
        H += n * n * b * counts / float(n) ** t.k
    return H


_kernel_cache: dict = {}


class ExactKernel:
    """Exact single-edge-update kernel for a model at size n, optionally
    restricted to the cut-metric ball of radius eta around constant p_star."""

    def __init__(self, model: ModelParams, n: int, ball: tuple[float, float] | None = None):
        self.n = n
        self.N = n_pairs(n)
        self.H = state_hamiltonians(model, n)
        self.states = np.arange(1 << self.N, dtype=np.int64)
        self.inside = None
        if ball is not None:
            p_star, eta = ball
            flags = np.empty(self.states.shape[0], dtype=bool)
            for x in self.states:
                g = state_to_graph(n, int(x))
                flags[x] = exact_cut_norm(deviation_kernel(g, p_star)) <= eta
            if not flags.any():
                raise ValueError("ball contains no graph at this size")
            self.inside = flags

    def measure(self) -> ExactDistribution:
        """The normalized Gibbs measure (conditioned on the ball if set)."""
        w = self.H - self.H.max()
        probs = np.exp(w)
        if self.inside is not None:
            probs = probs * self.inside
        probs /= probs.sum()
        return ExactDistribution(self.n, probs)

    def apply(self, dist: ExactDistribution) -> ExactDistribution:
        """One exact kernel step: nu'(y) = sum_x nu(x] P(x, y)."""
        if dist.n != self.n:
            raise ValueError("distribution size does not match the kernel")
        nu = dist.probs
        size = nu.shape[0]
        out = np.zeros(size)
        states = self.states
        if self.inside is None:
            for e in range(self.N):
                mask = 1 << e
                x1 = states | mask
                x0 = states & ~mask
                q1 = _sigmoid_vec(self.H[x1] - self.H[x0])
                out += np.bincount(x1, weights=nu * q1, minlength=size)
                out += np.bincount(x0, weights=nu * (1.0 - q1), minlength=size)
        else:
            inside = self.inside
            for e in range(self.N):
                mask = 1 << e
                xf = states ^ mask
                ratio = _sigmoid_vec(self.H[xf] - self.H[states])
                move = np.where(
                    inside[states],
                    np.where(inside[xf], ratio, 0.0),
                    1.0,  # zero-probability state: flip with probability one
                )
                out += np.bincount(xf, weights=nu * move, minlength=size)
                out += np.bincount(states, weights=nu * (1.0 - move), minlength=size)
        return ExactDistribution(self.n, out / self.N)

    def detailed_balance_violation(self, perturb: float = 0.0) -> float:
        """Max over single-flip pairs of |mu(x)P(x,y) - mu(y)P(y,x)|.

        perturb shifts every conditional by a constant and is the negative
        control: a correct kernel yields violations at rounding level only.
        """
        mu = self.measure().probs
        worst = 0.0
        states = self.states
        for e in range(self.N):
            mask = 1 << e
            bit0 = (states & mask) == 0
            x0 = states[bit0]
            x1 = x0 | mask
            q1 = _sigmoid_vec(self.H[x1] - self.H[x0]) + perturb
            flow = np.abs(mu[x0] * q1 - mu[x1] * (1.0 - q1)) / self.N
            worst = max(worst, float(flow.max()))
        return worst


def _sigmoid_vec(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    neg = x < 0
    out[~neg] = 1.0 / (1.0 + np.exp(-x[~neg]))
    ex = np.exp(x[neg])
    out[neg] = ex / (1.0 + ex)
    return out


def exact_kernel(model: ModelParams, n: int, ball=None) -> ExactKernel:
    key = (model, n, ball)
    if key not in _kernel_cache:
        _kernel_cache[key] = ExactKernel(model, n, ball)
    return _kernel_cache[key]


def enumerate_measure(model: ModelParams, n: int | None = None) -> ExactDistribution:
    """exp(H) per state, normalized; the only place the partition function
    is ever computed."""
    size = n if n is not None else model.n
    return exact_kernel(model, size).measure()


def transition_apply(model: ModelParams, dist: ExactDistribution,
                     ball=None) -> ExactDistribution:
    return exact_kernel(model, dist.n, ball).apply(dist)


def exact_tv(a: ExactDistribution, b: ExactDistribution) -> float:
    if a.n != b.n:
        raise ValueError("distributions must share the vertex count")
    return 0.5 * float(np.abs(a.probs - b.probs).sum())


def verify_detailed_balance(model: ModelParams, n: int, perturb: float = 0.0) -> float:
    return exact_kernel(model, n).detailed_balance_violation(perturb)


def gnp_distribution(n: int, p: float) -> ExactDistribution:
    """The product measure over states: each pair present independently."""
    N = n_pairs(n)
    states = np.arange(1 << N, dtype=np.uint64)
    ones = np.bitwise_count(states).astype(np.float64)
    if p in (0.0, 1.0):
        probs = np.where(ones == (N * p), 1.0, 0.0)
    else:
        probs = np.exp(ones * np.log(p) + (N - ones) * np.log1p(-p))
    return ExactDistribution(n, probs / probs.sum())


def point_mass(n: int, state: int) -> ExactDistribution:
    probs = np.zeros(1 << n_pairs(n))
    probs[state] = 1.0
    return ExactDistribution(n, probs)


def permute_distribution(dist: ExactDistribution, perm) -> ExactDistribution:
    """Push the distribution through a vertex relabeling."""
    n = dist.n
    N = n_pairs(n)
    perm = list(perm)
    bitmap = np.zeros(N, dtype=np.int64)
    for i in range(N):
        u, v = edge_pair(i)
        bitmap[i] = edge_index(perm[u], perm[v])
    states = np.arange(1 << N, dtype=np.int64)
    target = np.zeros_like(states)
    for i in range(N):
        target |= ((states >> i) & 1) << bitmap[i]
    out = np.zeros_like(dist.probs)
    out[target] = dist.probs[states]
    return ExactDistribution(n, out)
