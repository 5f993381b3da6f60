"""Experiment orchestration: single runs, sweeps, repetitions, artifacts.

A sweep point is one (gamma_pen, lambda, rho) triple; it is evaluated over
R repetitions with seeds ``seed, seed+1, ..., seed+R-1``. With common
random numbers (the default) every sweep point reuses the same seed list,
which makes cross-point differences much smoother; a config flag disables
it, in which case each point gets a disjoint seed block. P1/P2 standard
errors are sample standard deviations across repetitions divided by
sqrt(R).
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, analytics, report
from .config import RunConfig, config_echo
from .model import ModelParams, make_grid
from .oracle import oracle_solve
from .paths import antithetic_extend, save_ensemble, simulate_paths
from .regress import FeatureSpec
from .solver import SolveResult, solve

__all__ = ["SingleRun", "PointResult", "run_single", "evaluate_point", "run",
           "reproduce_table", "run_oracle", "TABLE_ROWS"]

# distinct parameter rows of the price-sensitivity table, in first-appearance order:
# a gamma block, a lambda block and a rho block
TABLE_ROWS = [
    (0.15, 0.0, 0.5),
    (0.3, 0.0, 0.5),
    (0.45, 0.0, 0.5),
    (0.3, 0.2, 0.5),
    (0.3, 0.4, 0.5),
    (0.3, 0.4, 0.0),
    (0.3, 0.4, 0.25),
    (0.3, 0.4, 0.75),
    (0.3, 0.4, 1.0),
]


@dataclass(eq=False)
class SingleRun:
    """Full solve + analytics output for one (params, seed)."""

    params: ModelParams
    result: SolveResult
    psi_samples: np.ndarray
    curve_direct: np.ndarray
    curve_regression: np.ndarray
    p1: float
    p2: float
    psi_mean: float


@dataclass(eq=False)
class PointResult:
    """Aggregated repetitions of one sweep point; `base` is the first repetition."""

    params: ModelParams
    reps: list
    base: SingleRun
    p1: float
    p1_se: float
    p2: float
    p2_se: float
    psi_mean: float
    psi_mean_se: float


def run_single(params: ModelParams, features: FeatureSpec | None = None,
               antithetic: bool = False, keep_history: bool = True) -> SingleRun:
    ens = simulate_paths(params)
    if antithetic:
        ens = antithetic_extend(ens)
    res = solve(ens, features, keep_history=keep_history)
    psi = analytics.total_emissions(ens, res.models).samples
    direct, regression = analytics.expected_emission_curve(ens, res.xi, res.models)
    prices = analytics.price_components(ens, res.xi, res.models)
    return SingleRun(params=params, result=res, psi_samples=psi,
                     curve_direct=direct, curve_regression=regression,
                     p1=prices.p1, p2=prices.p2, psi_mean=float(psi.mean()))


def _se(values) -> float:
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return 0.0
    return float(values.std(ddof=1) / np.sqrt(values.size))


def evaluate_point(params: ModelParams, features: FeatureSpec,
                   repetitions: int, seed_base: int,
                   antithetic: bool = False) -> PointResult:
    """Run one sweep point over `repetitions` seeds starting at seed_base."""
    reps = []
    base = None
    for r in range(repetitions):
        p_r = params.replace(seed=seed_base + r)
        single = run_single(p_r, features, antithetic=antithetic, keep_history=(r == 0))
        if r == 0:
            base = single
        reps.append({"rep": r, "seed": p_r.seed, "p1": single.p1, "p2": single.p2,
                     "psi_mean": single.psi_mean})
    p1s = [x["p1"] for x in reps]
    p2s = [x["p2"] for x in reps]
    psims = [x["psi_mean"] for x in reps]
    return PointResult(params=params, reps=reps, base=base,
                       p1=float(np.mean(p1s)), p1_se=_se(p1s),
                       p2=float(np.mean(p2s)), p2_se=_se(p2s),
                       psi_mean=float(np.mean(psims)), psi_mean_se=_se(psims))


def _point_seed_base(cfg: RunConfig, point_index: int) -> int:
    if cfg.common_random_numbers:
        return cfg.params.seed
    return cfg.params.seed + point_index * cfg.repetitions


def _point_report(cfg: RunConfig, point: PointResult, wall_s: float, grid) -> dict:
    res = point.base.result
    coeffs = [None if m.coef is None else [float(c) for c in m.coef] for m in res.models]
    return {
        "version": __version__,
        "oracle": False,
        "config": config_echo(cfg),
        "params_hash": point.params.digest(),
        "seed_list": [r["seed"] for r in point.reps],
        "trace": [
            {"q": r.q, "alpha": r.alpha, "H": r.entropy, "L": r.quad, "G": r.total,
             "G_se": r.total_se, "residual": r.residual, "wall_ms": r.wall_ms}
            for r in res.trace
        ],
        "P1": point.p1,
        "P1_se": point.p1_se,
        "P2": point.p2,
        "P2_se": point.p2_se,
        "prices": [{"rep": r["rep"], "seed": r["seed"], "P1": r["p1"], "P2": r["p2"]}
                   for r in point.reps],
        "psi_summary": analytics.summarize_samples(point.base.psi_samples),
        "psi_mean": point.psi_mean,
        "psi_mean_se": point.psi_mean_se,
        "curve": {
            "k": list(range(grid.n + 1)),
            "t": [float(x) for x in grid.t],
            "direct": [float(x) for x in point.base.curve_direct],
            "regression": [float(x) for x in point.base.curve_regression],
        },
        "entropy_floor": res.entropy_floor,
        "model_coefficients": coeffs,
        "wall_time_s": wall_s,
    }


def _write_point_artifacts(cfg: RunConfig, out_dir: Path, point: PointResult, wall_s: float):
    from . import figures

    grid = make_grid(point.params)
    res = point.base.result
    report.write_trace_csv(out_dir / "trace.csv", res.trace)
    report.write_emissions_csv(out_dir / "emissions.csv", point.base.psi_samples)
    report.write_curve_csv(out_dir / "curve.csv", grid.t, point.base.curve_direct,
                           point.base.curve_regression)
    report.write_prices_csv(out_dir / "prices.csv",
                            [(r["rep"], r["p1"], r["p2"]) for r in point.reps])
    payload = _point_report(cfg, point, wall_s, grid)
    if cfg.oracle_crosscheck:
        oracle_res = oracle_solve(point.params)
        payload["oracle_crosscheck"] = {
            "P1": oracle_res.p1,
            "P2": oracle_res.p2,
            "psi_mean": oracle_res.psi_mean,
            "rel_dP1": abs(point.p1 - oracle_res.p1) / abs(oracle_res.p1),
            "rel_dP2": abs(point.p2 - oracle_res.p2) / abs(oracle_res.p2),
            "rel_dpsi_mean": abs(point.psi_mean - oracle_res.psi_mean) / abs(oracle_res.psi_mean),
        }
    report.write_json(out_dir / "report.json", payload)
    figures.render_run_figures(out_dir, point.base.psi_samples, grid.t,
                               point.base.curve_direct, point.base.curve_regression, res.trace)


def run(cfg: RunConfig) -> dict:
    """Execute simulate -> solve -> analytics for every sweep point x repetition.

    With a single sweep point, artifacts land directly in out_dir; with
    several, each point gets a subdirectory plus a top-level summary.
    """
    points = cfg.sweep_points()
    out_root = Path(cfg.out_dir)
    summary = {"version": __version__, "points": []}
    for idx, (g, lam, rho) in enumerate(points):
        t0 = time.perf_counter()
        params = cfg.params.replace(gamma_pen=g, lam=lam, rho=rho)
        point = evaluate_point(params, cfg.features, cfg.repetitions,
                               _point_seed_base(cfg, idx), antithetic=cfg.antithetic)
        if len(points) == 1:
            pdir = out_root
        else:
            pdir = out_root / f"pt{idx:02d}_gamma{g:g}_lambda{lam:g}_rho{rho:g}"
        pdir.mkdir(parents=True, exist_ok=True)
        if cfg.ensemble_dump:
            base_params = params.replace(seed=_point_seed_base(cfg, idx))
            ens = simulate_paths(base_params)
            if cfg.antithetic:
                ens = antithetic_extend(ens)
            save_ensemble(ens, pdir / "ensemble.npz")
        wall_s = time.perf_counter() - t0
        _write_point_artifacts(cfg, pdir, point, wall_s)
        summary["points"].append({
            "gamma_pen": g, "lambda": lam, "rho": rho, "dir": str(pdir),
            "P1": point.p1, "P1_se": point.p1_se, "P2": point.p2, "P2_se": point.p2_se,
            "psi_mean": point.psi_mean,
        })
    if len(points) > 1:
        report.write_json(out_root / "sweep_summary.json", summary)
    return summary


def reproduce_table(cfg: RunConfig) -> list:
    """Evaluate the nine distinct sensitivity rows and emit table.csv (+ figure).

    Rows are ordered as in the sensitivity table; with common random
    numbers all rows share the same seed list.
    """
    from . import figures

    out_root = Path(cfg.out_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    rows = []
    for idx, (g, lam, rho) in enumerate(TABLE_ROWS):
        params = cfg.params.replace(gamma_pen=g, lam=lam, rho=rho)
        point = evaluate_point(params, cfg.features, cfg.repetitions,
                               _point_seed_base(cfg, idx))
        rows.append((g, lam, rho, point.p1, point.p1_se, point.p2, point.p2_se))
    report.write_table_csv(out_root / "table.csv", rows)
    figures.render_table_figure(out_root, rows)
    report.write_json(out_root / "table_report.json", {
        "version": __version__,
        "config": config_echo(cfg),
        "rows": [
            {"gamma_pen": g, "lambda": lam, "rho": rho,
             "P1": p1, "P1_se": p1se, "P2": p2, "P2_se": p2se}
            for g, lam, rho, p1, p1se, p2, p2se in rows
        ],
    })
    return rows


def run_oracle(cfg: RunConfig, n: int, level: int = 32) -> dict:
    """Quadrature reference run; emits report.json flagged oracle=true."""
    from . import figures

    params = cfg.params.replace(n=n)
    out_root = Path(cfg.out_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    res = oracle_solve(params, level=level)
    grid = make_grid(params)
    payload = {
        "version": __version__,
        "oracle": True,
        "config": config_echo(cfg),
        "params_hash": params.digest(),
        "quadrature_level": level,
        "iterations": res.iterations,
        "residual": res.residual,
        "mode": res.mode,
        "P1": res.p1,
        "P1_se": 0.0,
        "P2": res.p2,
        "P2_se": 0.0,
        "psi_summary": res.psi_summary(),
        "psi_mean": res.psi_mean,
        "curve": {
            "k": list(range(grid.n + 1)),
            "t": [float(x) for x in grid.t],
            "direct": [float(x) for x in res.curve],
            "regression": None,
        },
        "wall_time_s": time.perf_counter() - t0,
    }
    report.write_json(out_root / "report.json", payload)
    flat_nodes = [
        [str(i), report.fmt_float(w), report.fmt_float(x), report.fmt_float(ps)]
        for i, (w, x, ps) in enumerate(zip(res.weights.ravel(), res.xi.ravel(), res.psi.ravel()))
    ]
    report.write_csv(out_root / "oracle_nodes.csv", ["node", "weight", "xi", "psi_bar"], flat_nodes)
    figures.render_oracle_figure(out_root, grid.t, res.curve)
    return payload
