"""Experiment orchestration: config validation, drivers for each experiment
kind, CSV outputs, and reproducibility manifests.

Configs are a single JSON document; unknown keys are rejected at every
nesting level so a typo in a coefficient name cannot silently change an
experiment. Replicas draw from consecutive Philox streams of the config
seed, so re-running a config reproduces bit-identical primary outputs;
wall-clock timestamps live only in the manifest.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .cutnorm import deviation_kernel, greedy_cut_lower, spectral_cut_upper
from .diagnostics import (
    cavity_statistics,
    codegree_drift_matrix,
    codegree_matrix,
    concentration_report,
    normalized_degrees,
)
from .dynamics import ChainState, advance, coalescence_time, run_chain
from .graph import Graph, n_pairs, sample_gnp, snapshot_read, snapshot_write
from .landscape import (
    Regime,
    landscape_report,
    solve_two_density_point,
)
from .model import ModelParams
from .rng import make_rng
from .templates import TemplateFamily, default_family, make_template


class ConfigError(ValueError):
    pass


_KIND_KEYS = {
    "phase": {"grid_size", "sweep"},
    "metastable": {"replicas", "sweeps", "stride_sweeps", "eta", "band",
                   "q_star", "p_star", "track_family", "family_cap"},
    "mix": {"sizes", "replicas", "cap_sweeps", "exact_n", "delta", "p_star",
            "fit_quantile"},
    "sample": {"burn_sweeps", "thin_sweeps", "count", "eps", "family_cap",
               "p_star", "save_snapshots", "drift_tol"},
    "diag": {"snapshot", "p_star", "eps", "mode", "family_cap", "p_ref"},
    "validate": {"fast"},
}


def _require(cond: bool, msg: str):
    if not cond:
        raise ConfigError(msg)


def _check_keys(d: dict, allowed: set, ctx: str):
    unknown = set(d) - allowed
    _require(not unknown, f"unknown key(s) {sorted(unknown)} in {ctx}")


def _prob(x, name) -> float:
    x = float(x)
    _require(0.0 <= x <= 1.0, f"{name} must lie in [0, 1]")
    return x


@dataclass
class ExperimentConfig:
    model: ModelParams
    kind: str
    params: dict
    seed: int
    out: str | None

    @property
    def n(self) -> int:
        return self.model.n


def parse_config(doc: dict) -> ExperimentConfig:
    _check_keys(doc, {"model", "seed", "experiment", "out"}, "config")
    _require("model" in doc, "config needs a 'model' section")
    _require("experiment" in doc, "config needs an 'experiment' section")
    mdoc = doc["model"]
    _check_keys(mdoc, {"beta", "templates", "n"}, "model")
    _require("beta" in mdoc, "model needs 'beta'")
    templates = tuple(make_template(t) for t in mdoc.get("templates", []))
    model = ModelParams(tuple(mdoc["beta"]), templates, n=int(mdoc.get("n", 0)))
    edoc = dict(doc["experiment"])
    _require("kind" in edoc, "experiment needs 'kind'")
    kind = edoc.pop("kind")
    _require(kind in _KIND_KEYS, f"unknown experiment kind {kind!r}")
    _check_keys(edoc, _KIND_KEYS[kind], f"experiment({kind})")
    seed = int(doc.get("seed", 0))
    for key in ("replicas", "count"):
        if key in edoc:
            _require(int(edoc[key]) >= 1, f"{key} must be >= 1")
    return ExperimentConfig(model=model, kind=kind, params=edoc, seed=seed,
                            out=doc.get("out"))


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return parse_config(doc)


# -- manifest -----------------------------------------------------------------


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(out_dir: Path, config_doc: dict, outputs: list[Path],
                   started: float, finished: float) -> Path:
    canon = json.dumps(config_doc, sort_keys=True, separators=(",", ":"))
    manifest = {
        "config_hash": hashlib.sha256(canon.encode()).hexdigest(),
        "seed": config_doc.get("seed", 0),
        "artifact_version": __version__,
        "started": started,
        "finished": finished,
        "outputs": {p.name: _sha256(p) for p in sorted(outputs)},
    }
    path = out_dir / "manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _write_csv(path: Path, header: list[str], rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return path


# -- experiment drivers --------------------------------------------------------


def run_experiment(cfg: ExperimentConfig, out_dir, threads: int = 1,
                   config_doc: dict | None = None) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.time()
    driver = {
        "phase": cmd_phase,
        "metastable": cmd_metastable,
        "mix": cmd_mix,
        "sample": cmd_sample,
        "diag": cmd_diag,
        "validate": cmd_validate,
    }[cfg.kind]
    outputs = driver(cfg, out_dir, threads)
    finished = time.time()
    doc = config_doc if config_doc is not None else _config_as_doc(cfg)
    outputs.append(write_manifest(out_dir, doc, outputs, started, finished))
    return outputs


def _config_as_doc(cfg: ExperimentConfig) -> dict:
    return {
        "model": {
            "beta": list(cfg.model.beta),
            "templates": [t.name or {"k": t.k, "edges": [list(e) for e in t.edges]}
                          for t in cfg.model.templates],
            "n": cfg.model.n,
        },
        "seed": cfg.seed,
        "experiment": {"kind": cfg.kind, **cfg.params},
    }


def _default_family_for(model: ModelParams, cap=None) -> TemplateFamily:
    c = cap if cap is not None else model.max_template_vertices() + 1
    return default_family(int(c))


# -- phase ---------------------------------------------------------------------


def cmd_phase(cfg: ExperimentConfig, out_dir: Path, threads: int = 1) -> list[Path]:
    p = cfg.params
    grid = int(p.get("grid_size", 4096))
    outputs = []
    sweep = p.get("sweep")
    if sweep:
        _check_keys(sweep, {"beta_index", "start", "stop", "count"}, "phase.sweep")
        bi = int(sweep["beta_index"])
        _require(0 <= bi < len(cfg.model.beta), "sweep.beta_index out of range")
        values = np.linspace(float(sweep["start"]), float(sweep["stop"]),
                             int(sweep["count"]))
        rows = []
        for val in values:
            beta = list(cfg.model.beta)
            beta[bi] = float(val)
            model = ModelParams(tuple(beta), cfg.model.templates, n=cfg.model.n)
            rep = landscape_report(model, grid_size=grid)
            glob = [m for m in rep.maxima if m.is_global]
            rows.append([
                float(val), rep.regime.value, len(rep.maxima),
                glob[0].p if glob else math.nan,
            ])
        outputs.append(_write_csv(
            out_dir / "phase_sweep.csv",
            ["beta_value", "regime", "n_maxima", "global_p"], rows,
        ))
    rep = landscape_report(cfg.model, grid_size=grid)
    outputs.append(_write_csv(
        out_dir / "phase_maxima.csv",
        ["p", "value", "second_deriv", "is_global", "is_degenerate"],
        [[m.p, m.value, m.second_deriv, int(m.is_global), int(m.is_degenerate)]
         for m in rep.maxima],
    ))
    outputs.append(_write_csv(
        out_dir / "phase_fixed_points.csv",
        ["p", "slope", "stable"],
        [[f.p, f.slope, int(f.stable)] for f in rep.fixed_points],
    ))
    with open(out_dir / "phase_report.json", "w") as fh:
        json.dump({
            "regime": rep.regime.value,
            "endpoint_supremum": rep.endpoint_supremum,
            "maxima": [vars(m) for m in rep.maxima],
            "fixed_points": [vars(f) for f in rep.fixed_points],
        }, fh, indent=2, sort_keys=True)
        fh.write("\n")
    outputs.append(out_dir / "phase_report.json")
    return outputs


# -- metastable ------------------------------------------------------------------


def two_density_initial(n: int, q: float, p: float, rng) -> Graph:
    """Tagged vertex 0 joined to each other vertex with probability q; every
    bulk pair present with probability p."""
    g = Graph(n)
    tagged = rng.random(n - 1) < q
    for j in range(1, n):
        if tagged[j - 1]:
            g.flip_edge(0, j)
    bulk_bits = rng.random((n - 1) * (n - 2) // 2) < p
    k = 0
    for v in range(2, n):
        for u in range(1, v):
            if bulk_bits[k]:
                g.flip_edge(u, v)
            k += 1
    return g


def _metastable_arm(cfg, label, q_init, q_track, p_bulk, eta, band, family,
                    replica, sweeps, stride_sweeps):
    model = cfg.model
    n = model.n
    N = n_pairs(n)
    total = int(round(sweeps * N))
    stride = max(1, int(round(stride_sweeps * N)))
    rng = make_rng(cfg.seed, replica if label == "treatment" else (1 << 32) + replica)
    x0 = two_density_initial(n, q_init, p_bulk, rng)

    def observe(g: Graph):
        p1 = g.degree(0) / n
        K = deviation_kernel(g, p_bulk)
        upper = spectral_cut_upper(K)
        lower = greedy_cut_lower(K, make_rng(cfg.seed, (1 << 33) + replica), starts=8)
        cav = cavity_statistics(g, family, p_bulk)
        return {
            "p1": p1,
            "in_band": float(abs(p1 - q_track) <= band),
            "cut_upper": upper,
            "cut_lower": lower,
            "omega_inside": float(upper <= eta / 2 and abs(p1 - q_track) <= eta),
            "omega_outside": float(lower > eta / 2 or abs(p1 - q_track) > eta),
            "bulk_min": cav.bulk_min,
            "bulk_max": cav.bulk_max,
            "tagged_min": cav.tagged_min,
            "tagged_max": cav.tagged_max,
        }

    rep = run_chain(model, x0, total, rng, observers={"s": observe}, stride=stride)
    rows = []
    for i, t in enumerate(rep.steps):
        rows.append([replica, int(t)] + [rep.series[f"s.{c}"][i] for c in (
            "p1", "in_band", "cut_upper", "cut_lower", "omega_inside",
            "omega_outside", "bulk_min", "bulk_max", "tagged_min", "tagged_max")])
    ok = bool(np.all(rep.series["s.in_band"] > 0.5))
    return rows, ok


def cmd_metastable(cfg: ExperimentConfig, out_dir: Path, threads: int = 1) -> list[Path]:
    p = cfg.params
    model = cfg.model
    _require(model.n >= 3, "metastable experiment needs model.n >= 3")
    _require(model.K == 1 and model.templates[0].name == "triangle"
             or (model.templates and model.templates[0].k == 3
                 and model.templates[0].edge_count == 3),
             "metastable experiment needs the edge+triangle model")
    sol = solve_two_density_point(model.beta[0], model.beta[1])
    q_star = _prob(p.get("q_star", sol.q), "q_star")
    p_star = _prob(p.get("p_star", sol.p1), "p_star")
    replicas = int(p.get("replicas", 20))
    sweeps = float(p.get("sweeps", 50.0))
    stride_sweeps = float(p.get("stride_sweeps", 1.0))
    eta = float(p.get("eta", 0.05))
    band = float(p.get("band", 0.1))
    famcap = p.get("family_cap")
    family = (TemplateFamily(["two_star", "triangle"])
              if p.get("track_family", "small") == "small"
              else _default_family_for(model, famcap))

    arms = [("treatment", q_star, q_star), ("control", p_star, p_star)]
    outputs = []
    summary = {"q_star": sol.q, "p_star": sol.p1, "p2": sol.p2,
               "band": band, "eta": eta, "replicas": replicas, "arms": {}}
    header = ["replica", "step", "p1", "in_band", "cut_upper", "cut_lower",
              "omega_inside", "omega_outside", "bulk_min", "bulk_max",
              "tagged_min", "tagged_max"]
    for label, q_init, q_track in arms:
        jobs = [(label, q_init, q_track, p_star, eta, band, family, r,
                 sweeps, stride_sweeps) for r in range(replicas)]
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(lambda a: _metastable_arm(cfg, *a), jobs))
        else:
            results = [_metastable_arm(cfg, *a) for a in jobs]
        rows = [row for rws, _ in results for row in rws]
        oks = [ok for _, ok in results]
        outputs.append(_write_csv(out_dir / f"metastable_{label}.csv", header, rows))
        summary["arms"][label] = {
            "persistence_rate": sum(oks) / len(oks),
            "target": q_track,
        }
    with open(out_dir / "metastable_summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    outputs.append(out_dir / "metastable_summary.json")
    return outputs


# -- mix -------------------------------------------------------------------------


def cmd_mix(cfg: ExperimentConfig, out_dir: Path, threads: int = 1) -> list[Path]:
    from .landscape import find_local_maxima
    from .oracle import N_EXACT_MAX, enumerate_measure, exact_kernel, exact_tv, gnp_distribution

    p = cfg.params
    model = cfg.model
    sizes = [int(s) for s in p.get("sizes", [8, 16, 32])]
    replicas = int(p.get("replicas", 50))
    cap_sweeps = float(p.get("cap_sweeps", 2000.0))
    p_star = p.get("p_star")
    if p_star is None:
        maxima, _ = find_local_maxima(model)
        glob = [m for m in maxima if m.is_global]
        _require(bool(glob), "mix: the free energy has no interior maximum")
        p_star = glob[0].p
    p_star = _prob(p_star, "p_star")
    outputs = []

    def one(args):
        n, r = args
        mdl = ModelParams(model.beta, model.templates, n=n)
        cap = int(cap_sweeps * n_pairs(n))
        t = coalescence_time(mdl, n, make_rng(cfg.seed, (n << 20) + r), cap)
        return [n, r, -1 if t is None else t, int(t is None)]

    jobs = [(n, r) for n in sizes for r in range(replicas)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, jobs))
    else:
        rows = [one(j) for j in jobs]
    outputs.append(_write_csv(out_dir / "mix_coalescence.csv",
                              ["n", "replica", "steps", "timeout"], rows))
    medians = {}
    for n in sizes:
        vals = [r[2] for r in rows if r[0] == n and r[3] == 0]
        medians[n] = float(np.median(vals)) if vals else math.nan
    good = {n: m for n, m in medians.items() if not math.isnan(m)}
    slope = math.nan
    if len(good) >= 2:
        xs = np.log([float(n) for n in good])
        ys = np.log([good[n] for n in good])
        slope = float(np.polyfit(xs, ys, 1)[0])
    summary = {"medians": {str(k): v for k, v in medians.items()},
               "loglog_slope": slope, "p_star": p_star}

    exact_n = int(p.get("exact_n", 5))
    delta = float(p.get("delta", 1e-4))
    if exact_n >= 3 and exact_n <= N_EXACT_MAX:
        mdl = ModelParams(model.beta, model.templates, n=exact_n)
        mu = enumerate_measure(mdl, exact_n)
        ker = exact_kernel(mdl, exact_n)
        dist = gnp_distribution(exact_n, p_star)
        N = n_pairs(exact_n)
        horizon = int(math.ceil(20 * N * math.log(N / delta)))
        tv_rows = []
        hit = None
        for t in range(horizon + 1):
            tv = exact_tv(dist, mu)
            tv_rows.append([t, tv])
            if hit is None and tv <= delta:
                hit = t
                break
            dist = ker.apply(dist)
        outputs.append(_write_csv(out_dir / "mix_tv.csv", ["t", "tv"], tv_rows))
        summary["exact_arm"] = {
            "n": exact_n, "delta": delta, "hit_step": hit,
            "fitted_C": (hit / (N * math.log(N / delta))) if hit else math.nan,
            "monotone": bool(np.all(np.diff([r[1] for r in tv_rows]) <= 1e-12)),
        }
    with open(out_dir / "mix_summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    outputs.append(out_dir / "mix_summary.json")
    return outputs


# -- sample ------------------------------------------------------------------------


def cmd_sample(cfg: ExperimentConfig, out_dir: Path, threads: int = 1) -> list[Path]:
    from .landscape import find_local_maxima

    p = cfg.params
    model = cfg.model
    n = model.n
    _require(n >= 4, "sample experiment needs model.n >= 4")
    p_star = p.get("p_star")
    if p_star is None:
        maxima, _ = find_local_maxima(model)
        glob = [m for m in maxima if m.is_global]
        _require(bool(glob), "sample: the free energy has no interior maximum")
        p_star = glob[0].p
    p_star = _prob(p_star, "p_star")
    eps = _prob(p.get("eps", 0.1), "eps")
    drift_tol = float(p.get("drift_tol", 0.05))
    burn = int(float(p.get("burn_sweeps", 20.0)) * n_pairs(n))
    thin = int(float(p.get("thin_sweeps", 1.0)) * n_pairs(n))
    count = int(p.get("count", 100))
    family = _default_family_for(model, p.get("family_cap"))
    save = bool(p.get("save_snapshots", False))

    rng = make_rng(cfg.seed, 0)
    state = ChainState(sample_gnp(n, p_star, rng), model, rng)
    advance(state, burn)
    rows = []
    outputs = []
    snap_dir = out_dir / "snapshots"
    if save:
        snap_dir.mkdir(exist_ok=True)
    for s in range(count):
        advance(state, thin)
        g = state.graph
        rep = concentration_report(g, p_star, eps, family,
                                   rng=make_rng(cfg.seed, (1 << 34) + s))
        drift = codegree_drift_matrix(model, g)
        off = ~np.eye(n, dtype=bool)
        max_drift = float(np.abs(drift[off]).max())
        sup_pu = float(np.abs(rep.p_u - p_star).max())
        sup_puv = max(abs(rep.p_uv_max_dev), abs(rep.p_uv_min_dev))
        rows.append([
            s, rep.r_min, rep.r_max, int(rep.band_member), sup_pu, sup_puv,
            max_drift, rep.cut_lower, rep.cut_upper,
        ])
        if save:
            with open(snap_dir / f"sample_{s:04d}.ergx", "wb") as fh:
                fh.write(snapshot_write(g))
            outputs.append(snap_dir / f"sample_{s:04d}.ergx")
    header = ["sample", "r_min", "r_max", "band_member", "sup_pu_dev",
              "sup_puv_dev", "max_codegree_drift", "cut_lower", "cut_upper"]
    outputs.append(_write_csv(out_dir / "sample_reports.csv", header, rows))
    arr = np.array([[r[3], r[4], r[5], r[6]] for r in rows], dtype=np.float64)
    summary = {
        "p_star": p_star, "eps": eps, "count": count,
        "band_rate": float(arr[:, 0].mean()),
        "degree_rate": float((arr[:, 1] <= eps).mean()),
        "codegree_rate": float((arr[:, 2] <= eps).mean()),
        "drift_rate": float((arr[:, 3] <= drift_tol).mean()),
    }
    with open(out_dir / "sample_summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    outputs.append(out_dir / "sample_summary.json")
    return outputs


# -- diag ---------------------------------------------------------------------------


def cmd_diag(cfg: ExperimentConfig, out_dir: Path, threads: int = 1) -> list[Path]:
    p = cfg.params
    _require("snapshot" in p, "diag needs a 'snapshot' path")
    with open(p["snapshot"], "rb") as fh:
        g = snapshot_read(fh.read())
    p_star = _prob(p.get("p_star", 0.5), "p_star")
    eps = _prob(p.get("eps", 0.1), "eps")
    family = _default_family_for(cfg.model, p.get("family_cap"))
    rep = concentration_report(g, p_star, eps, family,
                               rng=make_rng(cfg.seed, 0),
                               p_ref=p.get("p_ref"))
    doc = {
        "n": g.n,
        "p_star": p_star,
        "eps": eps,
        "r_min": rep.r_min,
        "r_max": rep.r_max,
        "band_member": rep.band_member,
        "p_uv_max_dev": rep.p_uv_max_dev,
        "p_uv_min_dev": rep.p_uv_min_dev,
        "codegree_exception_count": rep.codegree_exception_count,
        "cut_lower": rep.cut_lower,
        "cut_upper": rep.cut_upper,
        "cavity": vars(rep.cavity) if rep.cavity else None,
    }
    with open(out_dir / "diag_report.json", "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    out1 = out_dir / "diag_report.json"
    out2 = _write_csv(out_dir / "diag_degrees.csv", ["vertex", "p_u"],
                      [[u, float(x)] for u, x in enumerate(rep.p_u)])
    return [out1, out2]


# -- validate -----------------------------------------------------------------------


def cmd_validate(cfg: ExperimentConfig, out_dir: Path, threads: int = 1) -> list[Path]:
    from .validate import run_validation_suite

    fast = bool(cfg.params.get("fast", False))
    rows, all_ok = run_validation_suite(seed=cfg.seed, fast=fast)
    path = _write_csv(out_dir / "validate.csv",
                      ["check", "passed", "detail", "seconds"], rows)
    if not all_ok:
        raise RuntimeError("validation suite failed; see validate.csv")
    return [path]
