"""Figure rendering for the report path (PNG files next to the CSVs)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analytics import kde_smooth

__all__ = ["render_run_figures", "render_table_figure", "render_oracle_figure"]


def render_run_figures(out_dir, psi_samples, t, curve_direct, curve_regression, trace) -> list:
    """Emission distribution, expected-emission curve and convergence diagnostics."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    kde = kde_smooth(np.asarray(psi_samples))
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if kde.point_mass:
        ax.axvline(kde.grid[0], color="C0", lw=2, label="point mass")
        ax.legend()
    else:
        ax.plot(kde.grid, kde.density, color="C0")
        ax.fill_between(kde.grid, kde.density, alpha=0.25, color="C0")
    ax.set_xlabel("total average emissions")
    ax.set_ylabel("density")
    fig.tight_layout()
    path = out / "emissions_distribution.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(t, curve_direct, "o-", ms=3, label="SDF-weighted estimate")
    if curve_regression is not None:
        ax.plot(t, curve_regression, "s--", ms=3, label="regression estimate")
    ax.set_xlabel("time (years)")
    ax.set_ylabel("expected emissions per unit time")
    ax.legend()
    fig.tight_layout()
    path = out / "expected_emissions.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    qs = [r.q for r in trace]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.plot(qs, [r.total for r in trace], "o-", ms=3)
    ax1.set_xlabel("iteration")
    ax1.set_ylabel("potential")
    resid = np.array([r.residual for r in trace])
    if np.any(resid > 0):
        ax2.semilogy(qs, np.maximum(resid, 1e-300), "o-", ms=3)
    else:
        ax2.plot(qs, resid, "o-", ms=3)
    ax2.set_xlabel("iteration")
    ax2.set_ylabel("fixed-point residual")
    fig.tight_layout()
    path = out / "convergence.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)
    return written


def render_table_figure(out_dir, rows) -> Path:
    """Price components across the three sensitivity blocks, with error bars.

    rows: list of (gamma, lambda, rho, p1, p1_se, p2, p2_se) in table order
    (3 gamma rows, then 2 extra lambda rows, then 4 extra rho rows).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    blocks = [
        ("gamma_pen", [r for r in rows if r[1] == 0.0 and r[2] == 0.5], 0),
        ("lambda", [r for r in rows if r[0] == 0.3 and r[2] == 0.5], 1),
        ("rho", [r for r in rows if r[0] == 0.3 and r[1] == 0.4], 2),
    ]
    fig, axes = plt.subplots(1, 3, figsize=(12, 4))
    for ax, (name, block, idx) in zip(axes, blocks):
        block = sorted(block, key=lambda r: r[idx])
        x = [r[idx] for r in block]
        p2 = [r[5] for r in block]
        p2e = [r[6] for r in block]
        ax.errorbar(x, p2, yerr=p2e, fmt="o-", capsize=3)
        ax.set_xlabel(name)
        ax.set_ylabel("P2 (emission-efficacy sensitivity)")
    fig.tight_layout()
    path = out / "price_components.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_oracle_figure(out_dir, t, curve) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(t, curve, "o-", ms=4)
    ax.set_xlabel("time (years)")
    ax.set_ylabel("expected emissions per unit time")
    fig.tight_layout()
    path = out / "expected_emissions.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
