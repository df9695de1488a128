"""Experiment implementations and the artifact writer.

Every experiment is a pure function of its config: replication ``i`` of a
stream uses :func:`rep_rng` with a fixed stream key, so runs are
reproducible under any thread count.
"""
from __future__ import annotations

import json
import logging
import math
from functools import partial
from pathlib import Path

import numpy as np

from ..brw import BrwModel, grid_edges, jump_disagreement, simulate_conditioned
from ..limit import (SscdpppSpec, kappa_lambda, laplace_exponent, limit_laplace,
                     sample_N_star)
from ..pointproc import ANNULUS_GRID, PointMeasure, TestFunction
from .config import ExperimentConfig
from .doa import ClusterTemplate, superpose_scaled
from .parallel import rep_rng, replicate
from .stats import (Comparison, ComparisonReport, binomial_se, ks_distance, mean_se,
                    pairwise_constancy, two_sample_chi2)

log = logging.getLogger(__name__)

# stream keys; changing these changes every published number
KEY_BRW = 1
KEY_LIMIT = 2
KEY_W = 3
KEY_KAPPA = 4
KEY_DOA = 5
KEY_STAB = 6
KEY_FRECHET = 100   # + index into y_grid
KEY_JUMP = 200      # + n

CDF_HEADER = ("x", "empirical", "se", "oracle", "z")
LAPLACE_HEADER = ("f_id", "y", "empirical", "se", "oracle", "z")
ROW_HEADER = ("label", "x", "empirical", "se", "oracle", "oracle_se", "z")


class Outcome:
    """A report plus the CSV tables and point dumps that go with it."""

    def __init__(self, report: ComparisonReport, tables=None, points=None):
        self.report = report
        self.tables = tables or {}       # filename -> (header, rows)
        self.points = points or {}       # rep index -> PointMeasure


# -- helpers ---------------------------------------------------------------

def _kinks(f: TestFunction, y: float = 1.0) -> tuple:
    return (f.a * y, (f.a + f.w) * y)


def _closed_form_kappa(model: BrwModel) -> float:
    method = "closed_form_iid" if model.displacement.kind == "iid" else "closed_form_polar"
    return kappa_lambda(model.displacement, model.offspring, method).value


def _w_samples(cfg: ExperimentConfig, spec: SscdpppSpec):
    """Shared W draws for oracles; ``None`` when W is identically 1."""
    if spec.offspring.kind == "deterministic":
        return None
    sampler = spec.survival_W(cfg.w_depth)
    return sampler.sample(rep_rng(cfg.seed, KEY_W, 0), cfg.w_reps)


def _w_source(spec: SscdpppSpec, depth: int):
    if spec.offspring.kind == "deterministic":
        return 1.0
    return spec.survival_W(depth)


def _laplace_rows(rows, f_ids, y) -> list:
    return [(f"f{j}", y, r.empirical, r.se, r.oracle, r.z) for j, r in zip(f_ids, rows)]


def _row_table(rows) -> list:
    return [(r.label, r.x, r.empirical, r.se, r.oracle, r.oracle_se, r.z) for r in rows]


def _summarise(measure: PointMeasure, panel, x_grid) -> tuple:
    ints = np.array([measure.integrate(f) for f in panel])
    hits = np.array([measure.count_exceedances(x)[0] > 0 for x in x_grid])
    return ints, hits


def _dump(cfg: ExperimentConfig, fn) -> dict:
    return {i: fn(i) for i in range(cfg.dump_points)}


def _brw_points(cfg, i):
    return simulate_conditioned(cfg.model, cfg.n, rep_rng(cfg.seed, KEY_BRW, i), track_tilde=False).N_n


# -- replication bodies (module level so they pickle) ----------------------

def _maxima_rep(model, n, rng):
    return simulate_conditioned(model, n, rng, track_tilde=False).M_n_scaled


def _brw_summary_rep(model, n, panel, x_grid, rng):
    return _summarise(simulate_conditioned(model, n, rng, track_tilde=False).N_n, panel, x_grid)


def _nstar_summary_rep(spec, w_source, threshold, panel, x_grid, rng):
    return _summarise(sample_N_star(spec, None, w_source, threshold, rng), panel, x_grid)


def _stability_rep(spec, b1, b2, alpha, threshold, panel, edges, rng):
    b = (b1**alpha + b2**alpha) ** (1.0 / alpha)
    n1 = sample_N_star(spec, None, 1.0, threshold / b1, rng).scale(b1)
    n2 = sample_N_star(spec, None, 1.0, threshold / b2, rng).scale(b2)
    n0 = sample_N_star(spec, None, 1.0, threshold / b, rng).scale(b)
    pair = n1 + n2
    return (pair.annulus_counts(edges), n0.annulus_counts(edges),
            np.array([pair.integrate(f) for f in panel]), np.array([n0.integrate(f) for f in panel]))


def _frechet_rep(spec, y, panel, rng):
    threshold = min(f.a for f in panel) * y
    m = sample_N_star(spec, None, 1.0, threshold, rng)
    return np.array([m.integrate(f.scaled(y)) for f in panel])


def _doa_rep(template, n, floor, panel, x_grid, rng):
    m = superpose_scaled(template, n, rng, floor)
    counts = np.array([m.count_exceedances(x)[0] for x in x_grid])
    ints = np.array([m.integrate(f) for f in panel])
    return counts, ints


def _jump_rep(model, n, eps, rng):
    return jump_disagreement(simulate_conditioned(model, n, rng, track_tilde=True), eps)


# -- experiments -----------------------------------------------------------

def validate_maxima(cfg: ExperimentConfig) -> Outcome:
    """Empirical CDF of the scaled rightmost particle against ``E* exp(-kappa W x^-alpha)``."""
    model = cfg.model
    alpha = model.displacement.alpha
    kappa = _closed_form_kappa(model)
    spec = SscdpppSpec.from_model(model.offspring, model.displacement)
    w = _w_samples(cfg, spec)
    m = np.array(replicate(partial(_maxima_rep, model, cfg.n), cfg.reps, cfg.seed, KEY_BRW, cfg.threads))
    rows = []
    for x in cfg.x_grid:
        oracle, oracle_se = limit_laplace(kappa * x**-alpha, w)
        emp = float(np.mean(m <= x))
        rows.append(Comparison("P(M<=x)", x, emp, binomial_se(oracle, cfg.reps), oracle, oracle_se))
    w_ks = np.ones(1) if w is None else w[:1000]

    def cdf(xs):
        xs = np.asarray(xs, dtype=float)
        out = np.zeros_like(xs)
        pos = xs > 0
        out[pos] = np.exp(-kappa * np.outer(xs[pos] ** -alpha, w_ks)).mean(axis=1)
        return out

    report = ComparisonReport("validate_maxima", "P*(c_n^-1 M_n <= x)", rows, cfg.z_tol,
                              ks_distance(m, cdf),
                              info={"kappa": kappa, "n": cfg.n, "reps": cfg.reps,
                                    "c_n": model.c_n(cfg.n), "w_reps": 0 if w is None else cfg.w_reps})
    table = [(r.x, r.empirical, r.se, r.oracle, r.z) for r in rows]
    return Outcome(report, {"cdf.csv": (CDF_HEADER, table)}, _dump(cfg, partial(_brw_points, cfg)))


def validate_laplace(cfg: ExperimentConfig) -> Outcome:
    """Laplace functionals of the scaled generation against the limit process.

    i.i.d. displacements use the quadrature oracle; polar displacements are
    compared with direct draws of the limit, on the Laplace panel and on
    exceedance probabilities ``P(N(x, inf) > 0)``.
    """
    model = cfg.model
    panel, xg = cfg.panel, cfg.x_grid
    spec = SscdpppSpec.from_model(model.offspring, model.displacement)
    res = replicate(partial(_brw_summary_rep, model, cfg.n, panel, xg), cfg.reps, cfg.seed, KEY_BRW, cfg.threads)
    ints = np.array([r[0] for r in res])
    hits = np.array([r[1] for r in res], dtype=float)
    w = _w_samples(cfg, spec)
    analytic = []
    for f in panel:
        L = laplace_exponent(spec, f, f.a, _kinks(f))
        analytic.append(limit_laplace(L, w))
    rows = []
    info = {"n": cfg.n, "reps": cfg.reps, "analytic": [a[0] for a in analytic]}
    if model.displacement.kind == "iid":
        for j, f in enumerate(panel):
            emp, se = mean_se(np.exp(-ints[:, j]))
            rows.append(Comparison(f"f{j}", f.a, emp, se, *analytic[j]))
    else:
        threshold = min(min(f.a for f in panel), min(xg))
        body = partial(_nstar_summary_rep, spec, _w_source(spec, cfg.w_depth), threshold, panel, xg)
        lim = replicate(body, cfg.reps, cfg.seed, KEY_LIMIT, cfg.threads)
        l_ints = np.array([r[0] for r in lim])
        l_hits = np.array([r[1] for r in lim], dtype=float)
        for j, f in enumerate(panel):
            emp, se = mean_se(np.exp(-ints[:, j]))
            ora, ose = mean_se(np.exp(-l_ints[:, j]))
            rows.append(Comparison(f"f{j}", f.a, emp, se, ora, ose))
        for k, x in enumerate(xg):
            emp, ora = float(hits[:, k].mean()), float(l_hits[:, k].mean())
            rows.append(Comparison("P(N(x,inf)>0)", x, emp, binomial_se(emp, cfg.reps),
                                   ora, binomial_se(ora, cfg.reps)))
    report = ComparisonReport("validate_laplace", "Psi(f) = E* exp(-N(f))", rows, cfg.z_tol, info=info)
    lap = [(f"f{j}", 1.0, r.empirical, r.se, r.oracle, r.z) for j, r in enumerate(rows[:len(panel)])]
    tables = {"laplace.csv": (LAPLACE_HEADER, lap)}
    if len(rows) > len(panel):
        tables["exceedance.csv"] = (ROW_HEADER, _row_table(rows[len(panel):]))
    return Outcome(report, tables, _dump(cfg, partial(_brw_points, cfg)))


def validate_stability(cfg: ExperimentConfig) -> Outcome:
    """``S_b1 N_1 + S_b2 N_2`` against ``S_b N`` for the W = 1 limit."""
    model = cfg.model
    alpha = model.displacement.alpha
    spec = SscdpppSpec.from_model(model.offspring, model.displacement)
    edges = np.asarray(ANNULUS_GRID)
    threshold = min(edges[0], min(f.a for f in cfg.panel))
    body = partial(_stability_rep, spec, cfg.b1, cfg.b2, alpha, threshold, cfg.panel, edges)
    res = replicate(body, cfg.reps, cfg.seed, KEY_STAB, cfg.threads)
    ca = np.array([r[0] for r in res])
    cb = np.array([r[1] for r in res])
    ia = np.array([r[2] for r in res])
    ib = np.array([r[3] for r in res])
    nbins = ca.shape[1]
    pvals = [two_sample_chi2(ca[:, k], cb[:, k])[2] for k in range(nbins)]
    combined = min(1.0, nbins * min(pvals))
    rows = []
    for j, f in enumerate(cfg.panel):
        emp, se = mean_se(np.exp(-ia[:, j]))
        ora, ose = mean_se(np.exp(-ib[:, j]))
        rows.append(Comparison(f"f{j}", f.a, emp, se, ora, ose))
    b = (cfg.b1**alpha + cfg.b2**alpha) ** (1.0 / alpha)
    checks = {"annulus_chi2_bonferroni_p": {"value": combined, "pass": combined > cfg.p_min}}
    report = ComparisonReport("validate_stability", "S_b1 N1 + S_b2 N2 vs S_b N", rows, cfg.z_tol,
                              checks=checks, info={"b": b, "alpha": alpha, "per_annulus_p": pvals,
                                                   "edges": list(edges)})
    lap = [(f"f{j}", b, r.empirical, r.se, r.oracle, r.z) for j, r in enumerate(rows)]
    return Outcome(report, {"laplace.csv": (LAPLACE_HEADER, lap)})


def validate_frechet(cfg: ExperimentConfig) -> Outcome:
    """``y^alpha (-log Psi(f(./y)))`` for the W = 1 limit, which must not depend on ``y``."""
    model = cfg.model
    alpha = model.displacement.alpha
    spec = SscdpppSpec.from_model(model.offspring, model.displacement)
    per_y = []
    for k, y in enumerate(cfg.y_grid):
        res = replicate(partial(_frechet_rep, spec, y, cfg.panel), cfg.reps, cfg.seed,
                        KEY_FRECHET + k, cfg.threads)
        per_y.append(np.array(res))
    rows, checks, table = [], {}, []
    for j, f in enumerate(cfg.panel):
        L = laplace_exponent(spec, f, f.a, _kinks(f))
        vals, ses = [], []
        for y, ints in zip(cfg.y_grid, per_y):
            emp, se = mean_se(np.exp(-ints[:, j]))
            v, s = -math.log(emp) * y**alpha, se / emp * y**alpha
            vals.append(v)
            ses.append(s)
            row = Comparison(f"f{j}", y, v, s, L)
            rows.append(row)
            table.append((f"f{j}", y, v, s, L, row.z))
        ok, worst = pairwise_constancy(vals, ses, cfg.z_tol)
        checks[f"f{j}_pairwise_constancy"] = {"value": worst, "pass": ok}
    report = ComparisonReport("validate_frechet", "y^alpha (-log Psi(f(./y)))", rows, cfg.z_tol,
                              checks=checks, info={"alpha": alpha, "y_grid": list(cfg.y_grid)})
    return Outcome(report, {"laplace.csv": (LAPLACE_HEADER, table)})


def superposition_doa(cfg: ExperimentConfig) -> Outcome:
    """Scaled superposition of i.i.d. cluster templates against its ScDPPP limit."""
    template = ClusterTemplate(cfg.template, cfg.template_alpha, cfg.template_p)
    n_grid = cfg.n_grid if "n_grid" in cfg.raw else (cfg.n,)
    floor = min(min(cfg.x_grid), min(f.a for f in cfg.panel))
    rows, lap = [], []
    limits = [template.limit_laplace(f, f.a, _kinks(f)) for f in cfg.panel]
    for n in n_grid:
        body = partial(_doa_rep, template, n, floor, cfg.panel, cfg.x_grid)
        res = replicate(body, cfg.reps, cfg.seed, KEY_DOA + 1000 * n, cfg.threads)
        counts = np.array([r[0] for r in res], dtype=float)
        ints = np.array([r[1] for r in res])
        for k, x in enumerate(cfg.x_grid):
            emp, se = mean_se(counts[:, k])
            rows.append(Comparison(f"E N(x,inf) n={n}", x, emp, se, template.limit_mean_exceedance(x)))
        for j in range(len(cfg.panel)):
            emp, se = mean_se(np.exp(-ints[:, j]))
            row = Comparison(f"f{j} n={n}", float(n), emp, se, limits[j])
            rows.append(row)
            lap.append((f"f{j}", 1.0, emp, se, limits[j], row.z))
    report = ComparisonReport("superposition_doa", "E N(x,inf) and Psi(f)", rows, cfg.z_tol,
                              info={"template": list(cfg.template), "alpha": cfg.template_alpha,
                                    "p": cfg.template_p, "n_grid": list(n_grid)})
    counts_rows = [r for r in rows if r.label.startswith("E N")]
    return Outcome(report, {"laplace.csv": (LAPLACE_HEADER, lap),
                            "exceedance.csv": (ROW_HEADER, _row_table(counts_rows))})


def big_jump(cfg: ExperimentConfig) -> Outcome:
    """Fraction of runs where ``N_n`` and its one-big-jump companion disagree beyond ``eps``."""
    model = cfg.model
    fracs, ses = [], []
    for n in cfg.n_grid:
        hits = replicate(partial(_jump_rep, model, n, cfg.eps), cfg.reps, cfg.seed, KEY_JUMP + n, cfg.threads)
        fr = float(np.mean(hits))
        fracs.append(fr)
        ses.append(binomial_se(fr, cfg.reps))
    rises = [(fracs[k + 1] - fracs[k]) / max(math.hypot(ses[k], ses[k + 1]), 1e-300)
             for k in range(len(fracs) - 1)]
    worst = max(rises, default=-math.inf)
    checks = {
        "nonincreasing": {"value": worst, "pass": worst < cfg.z_tol},
        "final_below_max": {"value": fracs[-1], "pass": fracs[-1] < cfg.max_final},
    }
    report = ComparisonReport("big_jump", "P(N_n != N~_n on annuli beyond eps)", [], cfg.z_tol,
                              checks=checks,
                              info={"eps": cfg.eps, "n_grid": list(cfg.n_grid), "fraction": fracs,
                                    "se": ses, "edges": list(grid_edges(cfg.eps))})
    table = [(n, fr, se) for n, fr, se in zip(cfg.n_grid, fracs, ses)]
    return Outcome(report, {"big_jump.csv": (("n", "fraction", "se"), table)})


def compute_kappa(cfg: ExperimentConfig) -> Outcome:
    """Closed-form and Monte Carlo evaluations of ``kappa``."""
    model = cfg.model
    info, rows = {}, []
    closed = None
    if "closed_form" in cfg.kappa_methods:
        method = "closed_form_iid" if model.displacement.kind == "iid" else "closed_form_polar"
        res = kappa_lambda(model.displacement, model.offspring, method)
        closed = res.value
        info[method] = res.to_dict()
    if "monte_carlo" in cfg.kappa_methods:
        res = kappa_lambda(model.displacement, model.offspring, "monte_carlo",
                           rep_rng(cfg.seed, KEY_KAPPA, 0), cfg.reps, cfg.x_grid)
        info["monte_carlo"] = res.to_dict()
        if closed is not None:
            for x, v, s in zip(res.x_grid, res.per_point, res.per_point_se):
                rows.append(Comparison("kappa", x, v, s, closed))
    report = ComparisonReport("compute_kappa", "kappa", rows, cfg.z_tol, info=info)
    return Outcome(report, {"kappa.csv": (ROW_HEADER, _row_table(rows))})


EXPERIMENT_FUNCS = {
    "validate_maxima": validate_maxima,
    "validate_laplace": validate_laplace,
    "validate_stability": validate_stability,
    "validate_frechet": validate_frechet,
    "superposition_doa": superposition_doa,
    "big_jump": big_jump,
    "compute_kappa": compute_kappa,
}


def sample_limit(cfg: ExperimentConfig, threshold: float | None = None) -> Outcome:
    """Draw ``reps`` copies of the limit process and summarise them."""
    model = cfg.model
    spec = SscdpppSpec.from_model(model.offspring, model.displacement)
    threshold = min(cfg.x_grid) if threshold is None else threshold
    src = _w_source(spec, cfg.w_depth)

    def draw(i):
        return sample_N_star(spec, None, src, threshold, rep_rng(cfg.seed, KEY_LIMIT, i))

    body = partial(_nstar_summary_rep, spec, src, threshold, cfg.panel, cfg.x_grid)
    res = replicate(body, cfg.reps, cfg.seed, KEY_LIMIT, cfg.threads)
    ints = np.array([r[0] for r in res])
    hits = np.array([r[1] for r in res], dtype=float)
    lap = []
    for j, f in enumerate(cfg.panel):
        emp, se = mean_se(np.exp(-ints[:, j]))
        lap.append((f"f{j}", 1.0, emp, se, float("nan"), float("nan")))
    info = {"threshold": threshold, "reps": cfg.reps,
            "exceedance_probability": dict(zip(map(repr, cfg.x_grid), hits.mean(axis=0).tolist()))}
    report = ComparisonReport("sample", "N_* summaries", [], cfg.z_tol, info=info)
    return Outcome(report, {"laplace.csv": (LAPLACE_HEADER, lap)}, _dump(cfg, draw))


# -- artifacts ---------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def write_outcome(outcome: Outcome, cfg: ExperimentConfig, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = outcome.report.to_dict()
    doc["config"] = {"seed": cfg.seed, "reps": cfg.reps,
                     "model": cfg.model.to_config() if cfg.model else None}
    (out / "report.json").write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")
    for name, (header, rows) in outcome.tables.items():
        lines = [",".join(header)] + [",".join(_fmt(v) for v in row) for row in rows]
        (out / name).write_text("\n".join(lines) + "\n")
    for i, m in outcome.points.items():
        (out / f"points_{i}.csv").write_text(m.to_csv())
    return out


def run_experiment(cfg: ExperimentConfig) -> Outcome:
    return EXPERIMENT_FUNCS[cfg.experiment](cfg)
