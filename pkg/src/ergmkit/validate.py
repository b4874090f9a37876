"""Release-gate validation: every randomized oracle in one pass/fail table.

Each check pits a production path against an independent ground truth:
brute-force enumeration, closed forms, finite differences, exact tiny-size
kernels, or frozen high-precision constants. The negative controls verify
the harness itself can catch a corrupted fast path and a corrupted
conditional.
"""

from __future__ import annotations

import itertools
import math
import os
import subprocess
import sys
import time

import numpy as np

from .cutnorm import deviation_kernel, exact_cut_norm, naive_cut_norm
from .diagnostics import (
    codegree_drift,
    codegree_drift_matrix,
    cut_distance_const,
    restricted_cut_distance,
)
from .dynamics import coalescence_time, run_coupled, sandwich_sample
from .graph import complete_graph, new_empty, sample_gnp, snapshot_read, snapshot_write
from .homcounts import delta_hom, hom_density
from .landscape import (
    find_fixed_points,
    find_local_maxima,
    free_energy,
    free_energy_d1,
    mean_field_update,
    mean_field_update_d1,
    sigmoid,
    solve_two_density_point,
)
from .model import ModelParams, edge_model, triangle_model
from .oracle import (
    enumerate_measure,
    exact_kernel,
    exact_tv,
    gnp_distribution,
    verify_detailed_balance,
)
from .rng import make_rng
from .templates import make_template

# frozen by the pre-build bisection oracle (50-digit bisection)
TWO_DENSITY_P1 = 0.9997739607124451878
TWO_DENSITY_P2 = 0.026821405176543805482
TWO_DENSITY_Q = 0.044554300947563996211

HIGH_TEMP_EDGE_TRIANGLE = (-0.35, 0.12)  # unique interior maximum near 0.352


def _random_template(rng) -> object:
    k = int(rng.integers(2, 6))
    pairs = list(itertools.combinations(range(k), 2))
    while True:
        mask = rng.random(len(pairs)) < 0.5
        edges = [pairs[i] for i in range(len(pairs)) if mask[i]]
        if edges:
            return make_template({"k": k, "edges": edges})


def check_gnp_moments(seed, fast):
    reps = 2000 if fast else 10000
    rng = make_rng(seed, 1)
    ms = np.array([sample_gnp(100, 0.5, rng).m for _ in range(reps)], dtype=np.float64)
    mean = 4950 * 0.5
    sd = math.sqrt(4950 * 0.25)
    z = abs(ms.mean() - mean) / (sd / math.sqrt(reps))
    return z <= 3.0, f"z={z:.2f} over {reps} replicas"


def check_snapshot_roundtrip(seed, fast):
    rng = make_rng(seed, 2)
    for _ in range(100):
        n = int(rng.integers(1, 40))
        g = sample_gnp(n, float(rng.random()), rng)
        if snapshot_read(snapshot_write(g)) != g:
            return False, f"round trip failed at n={n}"
    return True, "100 round trips"


def check_codegree_bruteforce(seed, fast):
    rng = make_rng(seed, 3)
    g = sample_gnp(50, 0.3, rng)
    dense = g.to_dense()
    for u in range(50):
        for v in range(u + 1, 50):
            want = sum(int(dense[u, w]) and int(dense[v, w]) for w in range(50))
            if g.codegree(u, v) != want:
                return False, f"codegree mismatch at ({u},{v})"
    return True, "all pairs of G(50,0.3)"


def check_delta_equivalence(seed, fast, cases=None):
    rng = make_rng(seed, 4)
    cases = cases or (300 if fast else 1000)
    worst = 0.0
    fixed = [make_template(s) for s in
             ("edge", "two_star", "triangle", "k_star:3", "k_star:4", "cycle:4", "cycle:5")]
    for c in range(cases):
        n = int(rng.integers(5, 21))
        H = fixed[c % len(fixed)] if c % 2 == 0 else _random_template(rng)
        g = sample_gnp(n, float(rng.random()), rng)
        u, v = rng.choice(n, 2, replace=False)
        e = (int(u), int(v))
        got = delta_hom(H, g, e)
        gp = g.copy()
        gp.set_edge(*e, 1)
        gm = g.copy()
        gm.set_edge(*e, 0)
        want = hom_density(H, gp) - hom_density(H, gm)
        worst = max(worst, abs(got - want))
    return worst <= 1e-12, f"max |incremental - brute| = {worst:.2e} over {cases} cases"


def check_landscape_consistency(seed, fast):
    rng = make_rng(seed, 5)
    trials = 40 if fast else 100
    worst_fd, worst_fix, worst_slope = 0.0, 0.0, 0.0
    for _ in range(trials):
        K = int(rng.integers(0, 3))
        temps = tuple(("two_star", "triangle")[int(rng.integers(0, 2))] for _ in range(K))
        beta = (float(rng.uniform(-3, 3)),) + tuple(float(rng.uniform(0, 3)) for _ in range(K))
        model = ModelParams(beta, temps)
        for _ in range(5):
            p = float(rng.uniform(0.05, 0.95))
            h = 1e-6
            fd = (free_energy(model, p + h) - free_energy(model, p - h)) / (2 * h)
            worst_fd = max(worst_fd, abs(fd - free_energy_d1(model, p)))
        maxima, _ = find_local_maxima(model)
        for m in maxima:
            if m.is_degenerate:
                continue
            worst_fix = max(worst_fix, abs(mean_field_update(model, m.p) - m.p))
            worst_slope = max(worst_slope, mean_field_update_d1(model, m.p) - 1.0)
    ok = worst_fd <= 1e-6 and worst_fix <= 1e-8 and worst_slope <= 1e-8
    return ok, (f"fd={worst_fd:.1e} fixpoint={worst_fix:.1e} "
                f"slope_excess={worst_slope:.1e} over {trials} draws")


def check_two_density_point(seed, fast):
    sol = solve_two_density_point(-1.8, 2.0)
    errs = (abs(sol.p1 - TWO_DENSITY_P1), abs(sol.p2 - TWO_DENSITY_P2),
            abs(sol.q - TWO_DENSITY_Q))
    ok = max(errs) <= 1e-9 and sol.f_prime_p1 < 1.0 and sol.g_prime_q < 1.0
    return ok, f"errors vs frozen bisection values: {['%.1e' % e for e in errs]}"


def check_edge_only_product_law(seed, fast):
    mu = enumerate_measure(edge_model(-0.5), 4)
    tv = exact_tv(mu, gnp_distribution(4, sigmoid(-1.0)))
    return tv <= 1e-10, f"TV={tv:.2e}"


def check_detailed_balance(seed, fast):
    v = verify_detailed_balance(triangle_model(-1.8, 2.0), 4)
    v_edge = verify_detailed_balance(edge_model(-0.5), 4)
    bad = verify_detailed_balance(triangle_model(-1.8, 2.0), 4, perturb=1e-3)
    ok = v <= 1e-12 and v_edge <= 1e-13 and bad > 1e-4
    return ok, f"violation={v:.1e}, corrupted control={bad:.1e}"


def check_corrupt_fast_path_control(seed, fast):
    """The delta-equivalence oracle must fail under the corruption flag."""
    code = (
        "import numpy as np\n"
        "from ergmkit.validate import check_delta_equivalence\n"
        "ok, msg = check_delta_equivalence(0, True, cases=40)\n"
        "raise SystemExit(0 if not ok else 1)\n"
    )
    env = dict(os.environ, ERGMKIT_CORRUPT_FAST_PATH="1")
    proc = subprocess.run([sys.executable, "-c", code], env=env,
                          capture_output=True, text=True)
    return proc.returncode == 0, "corrupted build detected" if proc.returncode == 0 \
        else f"corruption NOT detected: {proc.stderr[-200:]}"


def check_exact_tv_curve(seed, fast):
    n = 4 if fast else 5
    model = ModelParams(HIGH_TEMP_EDGE_TRIANGLE, ("triangle",), n=n)
    maxima, _ = find_local_maxima(model)
    p_star = [m for m in maxima if m.is_global][0].p
    mu = enumerate_measure(model, n)
    ker = exact_kernel(model, n)
    dist = gnp_distribution(n, p_star)
    N = n * (n - 1) // 2
    delta = 1e-4
    horizon = int(20 * N * math.log(N / delta)) + 1
    prev = math.inf
    hit = None
    for t in range(horizon):
        tv = exact_tv(dist, mu)
        if tv > prev + 1e-12:
            return False, f"TV increased at t={t}"
        prev = tv
        if tv <= delta:
            hit = t
            break
        dist = ker.apply(dist)
    if hit is None:
        return False, "TV never reached the target within the budget"
    C = hit / (N * math.log(N / delta))
    return C <= 20.0, f"hit at t={hit}, fitted C={C:.2f}"


def check_restricted_stationarity(seed, fast):
    n = 4
    model = triangle_model(-0.5, 0.3, n=n)
    ker = exact_kernel(model, n, ball=(0.4, 0.3))
    mu_ball = ker.measure()
    out = ker.apply(mu_ball)
    tv = exact_tv(out, mu_ball)
    return tv <= 1e-12, f"TV(mu_ball P, mu_ball)={tv:.1e}"


def check_order_preservation(seed, fast):
    n = 50
    model = ModelParams((-0.35, 0.12), ("triangle",), n=n)
    rng = make_rng(seed, 6)
    lower = sample_gnp(n, 0.2, rng)
    upper = lower.copy()
    for _ in range(200):  # add edges to get a strictly ordered pair
        u, v = rng.choice(n, 2, replace=False)
        upper.set_edge(int(u), int(v), 1)
    steps = 20000 if fast else 100000
    res = run_coupled(model, lower, upper, steps, rng)
    return res.order_violations == 0, f"{steps} coupled steps, {res.order_violations} violations"


def check_coupon_collector(seed, fast):
    n, N = 8, 28
    reps = 60 if fast else 200
    model = edge_model(0.0, n=n)
    times = [coalescence_time(model, n, make_rng(seed, 100 + r), 10**6)
             for r in range(reps)]
    mean = N * sum(1.0 / i for i in range(1, N + 1))
    var = N * N * sum(1.0 / i**2 for i in range(1, N + 1)) - mean
    z = abs(np.mean(times) - mean) / math.sqrt(var / reps)
    return z <= 3.0, f"sample mean {np.mean(times):.1f} vs {mean:.1f}, z={z:.2f}"


def check_cutnorm_oracles(seed, fast):
    rng = make_rng(seed, 7)
    trials = 30 if fast else 100
    for t in range(trials):
        g = sample_gnp(7, float(rng.random()), rng)
        p = float(rng.random())
        K = deviation_kernel(g, p)
        if abs(exact_cut_norm(K) - naive_cut_norm(K)) > 1e-12:
            return False, f"exact != naive at trial {t}"
    for t in range(10 if fast else 30):
        g = sample_gnp(12, float(rng.random()), rng)
        p = float(rng.random())
        lo, hi = cut_distance_const(g, p, mode="bounds", rng=make_rng(seed, 600 + t))
        exact = cut_distance_const(g, p, mode="exact")
        if not (lo <= exact + 1e-12 and exact <= hi + 1e-12):
            return False, f"bounds fail to bracket at trial {t}"
    return True, f"{trials} exact-vs-naive, bracket checks"


def check_domination_cut_bound(seed, fast):
    rng = make_rng(seed, 8)
    trials = 50 if fast else 200
    for t in range(trials):
        n = int(rng.integers(4, 11))
        y = sample_gnp(n, float(rng.random() * 0.5), rng)
        x = y.copy()
        for _ in range(n):  # y <= x <= z by construction
            u, v = rng.choice(n, 2, replace=False)
            x.set_edge(int(u), int(v), 1)
        z = x.copy()
        for _ in range(n):
            u, v = rng.choice(n, 2, replace=False)
            z.set_edge(int(u), int(v), 1)
        p = float(rng.random())
        dx = cut_distance_const(x, p, mode="exact")
        dy = cut_distance_const(y, p, mode="exact")
        dz = cut_distance_const(z, p, mode="exact")
        if dx > max(dy, dz) + 1e-12:
            return False, f"domination bound violated at trial {t}"
        # restricted-metric sandwich
        S = list(rng.choice(n, size=min(2, n), replace=False))
        d = cut_distance_const(x, p, mode="exact")
        dS = restricted_cut_distance(x, S, p, mode="exact")
        s = len(S)
        if not (d - s * (2 * n - s) / n**2 - 1e-12 <= dS <= d + 1e-12):
            return False, f"restricted sandwich violated at trial {t}"
    return True, f"{trials} random chains"


def check_sandwich_rate(seed, fast):
    model = ModelParams(HIGH_TEMP_EDGE_TRIANGLE, ("triangle",), n=64)
    maxima, _ = find_local_maxima(model)
    p_star = [m for m in maxima if m.is_global][0].p
    reps = 20 if fast else 100
    ok_count = 0
    from .graph import dominates

    for r in range(reps):
        s = sandwich_sample(model, p_star, 0.15, 0.05, make_rng(seed, 900 + r), n=64,
                            burn_steps=5 * 64 * 63 // 2)
        if s.ok:
            ok_count += 1
            if not (dominates(s.under, s.center) and dominates(s.center, s.over)):
                return False, "ok sample violated the sandwich order"
    rate = ok_count / reps
    return rate >= 0.95, f"ok rate {rate:.2f} over {reps} sweeps"


def check_drift_agreement(seed, fast):
    rng = make_rng(seed, 9)
    model = ModelParams((-0.35, 0.12), ("triangle",))
    worst = 0.0
    for t in range(5):
        n = int(rng.integers(8, 14))
        g = sample_gnp(n, float(rng.random()), rng)
        fast_mat = codegree_drift_matrix(model, g)
        for _ in range(4):
            u, v = rng.choice(n, 2, replace=False)
            slow = codegree_drift(model, g, int(u), int(v))
            worst = max(worst, abs(slow - fast_mat[int(u), int(v)]))
    return worst <= 1e-12, f"max |fast - slow| = {worst:.1e}"


CHECKS = [
    ("gnp_binomial_moments", check_gnp_moments),
    ("snapshot_roundtrip", check_snapshot_roundtrip),
    ("codegree_bruteforce", check_codegree_bruteforce),
    ("delta_equivalence", check_delta_equivalence),
    ("landscape_consistency", check_landscape_consistency),
    ("two_density_point", check_two_density_point),
    ("edge_only_product_law", check_edge_only_product_law),
    ("detailed_balance", check_detailed_balance),
    ("corrupt_fast_path_control", check_corrupt_fast_path_control),
    ("exact_tv_curve", check_exact_tv_curve),
    ("restricted_stationarity", check_restricted_stationarity),
    ("order_preservation", check_order_preservation),
    ("coupon_collector", check_coupon_collector),
    ("cutnorm_oracles", check_cutnorm_oracles),
    ("domination_cut_bound", check_domination_cut_bound),
    ("sandwich_rate", check_sandwich_rate),
    ("codegree_drift_agreement", check_drift_agreement),
]


def run_validation_suite(seed: int = 0, fast: bool = False):
    rows = []
    all_ok = True
    for name, fn in CHECKS:
        t0 = time.perf_counter()
        try:
            ok, detail = fn(seed, fast)
        except Exception as exc:  # a crashed oracle is a failed oracle
            ok, detail = False, f"exception: {exc!r}"
        dt = time.perf_counter() - t0
        rows.append([name, int(ok), detail, round(dt, 3)])
        all_ok = all_ok and ok
        print(f"{'PASS' if ok else 'FAIL'}  {name:32s} {detail}  ({dt:.2f}s)")
    return rows, all_ok
