import itertools

import numpy as np
import pytest

from ergmkit.graph import complete_graph, from_edges, new_empty, sample_gnp
from ergmkit.homcounts import (
    approx_delta,
    delta_hom,
    delta_matrix,
    effective_density,
    effective_density_matrix,
    hom_count,
    hom_density,
    restricted_hom_density,
    vertex_density_surrogate,
)
from ergmkit.templates import default_family, make_template

from conftest import rng_for

EDGE = make_template("edge")
TRI = make_template("triangle")
TWO_STAR = make_template("two_star")


def nested_loop_triangle_density(dense):
    # independent O(n^3) oracle
    n = dense.shape[0]
    a = dense.astype(np.int64)
    count = 0
    for i in range(n):
        for j in range(n):
            if a[i, j]:
                count += int(np.dot(a[i], a[j]))
    return count / float(n) ** 3


def test_density_edge_formula():
    rng = rng_for(20)
    g = sample_gnp(17, 0.5, rng)
    assert hom_density(EDGE, g) == pytest.approx(2 * g.m / 17**2, abs=1e-15)


def test_density_triangle_k3():
    assert hom_density(TRI, complete_graph(3)) == pytest.approx(6 / 27, abs=1e-15)


def test_density_triangle_vs_nested_loop():
    g = sample_gnp(30, 0.4, rng_for(21))
    want = nested_loop_triangle_density(g.to_dense())
    assert hom_density(TRI, g) == pytest.approx(want, abs=1e-12)


def test_density_star_and_cycle_closed_forms():
    g = sample_gnp(25, 0.45, rng_for(22))
    deg = g.degrees()
    s3 = make_template("k_star:3")
    assert hom_density(s3, g) == pytest.approx(float((deg**3).sum()) / 25.0**4, abs=1e-12)
    c4 = make_template("cycle:4")
    a = g.to_dense().astype(float)
    assert hom_density(c4, g) == pytest.approx(np.trace(a @ a @ a @ a) / 25.0**4, abs=1e-12)


def test_delta_edge_constant():
    g = sample_gnp(9, 0.5, rng_for(23))
    for e in [(0, 1), (3, 7)]:
        assert delta_hom(EDGE, g, e) == pytest.approx(2 / 81, abs=1e-16)


def test_delta_triangle_path():
    g = from_edges(3, [(0, 2), (1, 2)])  # path u - w - v
    assert delta_hom(TRI, g, (0, 1)) == pytest.approx(2 / 9, abs=1e-15)


def test_delta_matches_bruteforce_difference():
    rng = rng_for(24)
    fam = list(default_family(4)) + [
        EDGE, make_template("k_star:3"), make_template("cycle:5"),
        make_template({"k": 5, "edges": [[0, 1], [2, 3], [3, 4], [2, 4]]}),
    ]
    for trial in range(120):
        n = int(rng.integers(5, 14))
        H = fam[trial % len(fam)]
        g = sample_gnp(n, float(rng.random()), rng)
        u, v = rng.choice(n, 2, replace=False)
        e = (int(u), int(v))
        gp = g.copy()
        gp.set_edge(*e, 1)
        gm = g.copy()
        gm.set_edge(*e, 0)
        want = hom_density(H, gp) - hom_density(H, gm)
        assert delta_hom(H, g, e) == pytest.approx(want, abs=1e-12)
        dm = delta_matrix(H, g)
        assert dm[e] == pytest.approx(want, abs=1e-12)
        assert np.allclose(dm, dm.T, atol=1e-12)


def test_delta_independent_of_current_bit():
    rng = rng_for(25)
    for H in (TRI, TWO_STAR, make_template("cycle:4")):
        g = sample_gnp(12, 0.5, rng)
        for _ in range(10):
            u, v = rng.choice(12, 2, replace=False)
            e = (int(u), int(v))
            before = delta_hom(H, g, e)
            g.flip_edge(*e)
            assert delta_hom(H, g, e) == pytest.approx(before, abs=1e-15)


def test_density_monotone_under_edge_addition():
    rng = rng_for(26)
    for H in default_family(4):
        g = sample_gnp(10, 0.3, rng)
        d0 = hom_density(H, g)
        u, v = 1, 7
        g.set_edge(u, v, 1)
        assert hom_density(H, g) >= d0 - 1e-15


def test_effective_density_triangle_closed_form():
    rng = rng_for(27)
    g = sample_gnp(15, 0.5, rng)
    for _ in range(10):
        u, v = rng.choice(15, 2, replace=False)
        c = g.codegree(int(u), int(v))
        assert effective_density(TRI, g, (int(u), int(v))) == pytest.approx(
            np.sqrt(c / 15), abs=1e-13
        )
    assert effective_density(TRI, new_empty(6), (0, 1)) == 0.0
    with pytest.raises(ValueError):
        effective_density(EDGE, g, (0, 1))


def test_effective_density_concentration_gnp():
    # binomial-codegree derivation at n=400, p=0.5: the extreme pair over
    # all ~80k pairs deviates by about 4.8 sd(p_uv)/(2p) ~ 0.11, so the
    # union-bound band certified at the 1% level is +-0.13 (the naive
    # per-pair band +-0.05 is exceeded by the maximum in almost every trial)
    n, p = 400, 0.5
    for trial in range(5):
        g = sample_gnp(n, p, rng_for(280 + trial))
        r = effective_density_matrix(TRI, g)
        off = ~np.eye(n, dtype=bool)
        assert np.abs(r[off] - p).max() <= 0.13


def test_restricted_density_isolated_vertex():
    g = from_edges(5, [(1, 2), (2, 3)])
    assert restricted_hom_density(TRI, g, 0) == 0.0
    assert restricted_hom_density(TWO_STAR, g, 0) == 0.0


def test_restricted_density_k4_bruteforce():
    g = complete_graph(4)
    dense = g.to_dense()
    count = 0
    for tau in itertools.product(range(4), repeat=3):
        if 1 in tau and all(dense[tau[i], tau[j]] for i, j in TRI.edges):
            count += 1
    assert restricted_hom_density(TRI, g, 1) == pytest.approx(count / 64, abs=1e-15)
    assert count == 18  # 24 ordered triangle maps minus 6 avoiding the vertex


def test_surrogate_bound_and_order():
    rng = rng_for(29)
    for trial in range(40):
        n = int(rng.integers(5, 12))
        H = list(default_family(4))[trial % 8]
        g = sample_gnp(n, float(rng.random()), rng)
        u = int(rng.integers(n))
        exact = restricted_hom_density(H, g, u)
        surro = vertex_density_surrogate(H, g, u)
        assert -1e-14 <= surro - exact <= H.k**3 / n**2 + 1e-14
        total = hom_density(H, g)
        assert exact <= total + 1e-14


def test_restricted_sum_sandwich():
    rng = rng_for(30)
    for trial in range(20):
        n = int(rng.integers(4, 9))
        H = (TRI, TWO_STAR)[trial % 2]
        g = sample_gnp(n, float(rng.random()), rng)
        total = hom_density(H, g)
        per_vertex = [restricted_hom_density(H, g, u) for u in range(n)]
        assert sum(per_vertex) >= total - 1e-12
        assert max(per_vertex) <= total + 1e-12


def test_single_vertex_decomposition_bound():
    # near a constant graphon, the vertex-restricted density is a degree
    # polynomial up to |V||E| d/n + |V|^3/n^2 with d the exact cut distance
    from ergmkit.cutnorm import exact_cut_distance_const
    from ergmkit.homcounts import degree_profile_density

    rng = rng_for(31)
    p = 0.5
    for trial in range(10):
        n = 12
        g = sample_gnp(n, p, rng)
        d = exact_cut_distance_const(g, p)
        for H in (TRI, TWO_STAR, make_template("cycle:4")):
            for u in range(0, n, 4):
                got = restricted_hom_density(H, g, u)
                poly = degree_profile_density(H, g.degree(u) / n, p) / n
                bound = H.k * H.edge_count * d / n + H.k**3 / n**2
                assert abs(got - poly) <= bound + 1e-12


def test_approx_delta_formulas():
    assert approx_delta(EDGE, 50, 0.3, 0.2) == pytest.approx(2 / 2500, abs=1e-15)
    p = 0.4
    assert approx_delta(TRI, 100, p, p * p) == pytest.approx(6 * p * p / 100**2, abs=1e-15)
    with pytest.raises(ValueError):
        approx_delta(TRI, 10, 0.0, 0.1)


def test_approx_delta_vs_exact_monte_carlo():
    n, p = 200, 0.5
    g = sample_gnp(n, p, rng_for(32))
    rng = rng_for(33)
    # triangle: the main term with measured p_uv reproduces the exact
    # increment identically (single common-neighbor exponent)
    for _ in range(20):
        u, v = rng.choice(n, 2, replace=False)
        e = (int(u), int(v))
        puv = g.codegree(*e) / n
        assert approx_delta(TRI, n, p, puv) == pytest.approx(
            delta_hom(TRI, g, e), rel=1e-12
        )
    # two-star: within 20% of the scale 2|E|p/n^2 for nearly all pairs
    target = 0.2 * (2 * 2 * p / n**2)
    good = 0
    trials = 200
    for _ in range(trials):
        u, v = rng.choice(n, 2, replace=False)
        e = (int(u), int(v))
        puv = g.codegree(*e) / n
        diff = abs(approx_delta(TWO_STAR, n, p, puv) - delta_hom(TWO_STAR, g, e))
        good += diff <= target
    assert good >= 0.95 * trials
