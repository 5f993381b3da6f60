"""Equilibrium outputs: emission distributions, curves, price decomposition.

All operations are read-only over a converged solution. The initial share
price of a firm with value ``V`` and squared emission efficacy ``C0^2``
decomposes linearly as ``S0 = V * P1 + C0^2 * P2``; ``P1`` is the
constant fit at k = 0 (the sample mean of ``xi * E(0,T)``) and ``P2`` the
quadrature of the squared conditional-expectation estimates weighted by
the inverse penalty.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .paths import PathEnsemble
from .regress import CondExpModel
from .solver import _stack_fitted

__all__ = [
    "EmissionDistribution",
    "PriceDecomposition",
    "KdeResult",
    "total_emissions",
    "expected_emission_curve",
    "price_components",
    "share_price",
    "kde_smooth",
    "summarize_samples",
]


@dataclass(eq=False)
class EmissionDistribution:
    """Per-scenario total average emissions over the horizon."""

    samples: np.ndarray


@dataclass(frozen=True)
class PriceDecomposition:
    """Sensitivities of the initial share price to firm value and squared efficacy."""

    p1: float
    p2: float
    p1_se: float = 0.0
    p2_se: float = 0.0


@dataclass(eq=False)
class KdeResult:
    grid: np.ndarray
    density: np.ndarray
    bandwidth: float
    point_mass: bool = False


def total_emissions(ensemble: PathEnsemble, models: list[CondExpModel]) -> EmissionDistribution:
    """Total average emissions per scenario: h * sum_k w_k c_bar * invAlpha_ik * v_k(i)."""
    grid = ensemble.grid
    if len(models) != grid.n + 1:
        raise UsageError(f"need fitted models for all k = 0..{grid.n} (got {len(models)})")
    v = _stack_fitted(models, ensemble.n_paths)
    integrand = ensemble.inv_penalty * v
    samples = grid.h * ensemble.params.c_bar * np.einsum("k,ik->i", grid.w, integrand, optimize=False)
    return EmissionDistribution(samples=samples)


def expected_emission_curve(ensemble: PathEnsemble, xi: np.ndarray,
                            models: list[CondExpModel] | None = None):
    """Expected emissions of the representative firm at every grid date.

    Returns ``(direct, regression)`` estimates of ``E[psi_{t_k}]``. The
    direct estimator weights paths by the SDF samples,
    ``c_bar * mean_i(xi_i * invAlpha_ik * E(t_k,T)_i)``; the regression
    variant replaces ``xi * E(t_k,T)`` by the fitted conditional
    expectation, ``c_bar * mean_i(invAlpha_ik * v_k(i))``. Both are
    consistent for the same quantity by the tower property; the second is
    None when no models are supplied.
    """
    xi = np.asarray(xi)
    c = ensemble.params.c_bar
    direct = c * np.mean(xi[:, None] * ensemble.inv_penalty * ensemble.growth_tail, axis=0)
    regression = None
    if models is not None:
        v = _stack_fitted(models, ensemble.n_paths)
        regression = c * np.mean(ensemble.inv_penalty * v, axis=0)
    return direct, regression


def price_components(ensemble: PathEnsemble, xi: np.ndarray,
                     models: list[CondExpModel]) -> PriceDecomposition:
    """Price decomposition (P1, P2) of the representative share.

    ``P1`` equals the k = 0 constant fit, i.e. the sample mean of
    ``xi * E(0,T)``; ``P2 = h/M * sum_i sum_k w_k invAlpha_ik v_k(i)^2``.
    """
    grid = ensemble.grid
    if len(models) != grid.n + 1:
        raise UsageError(f"need fitted models for all k = 0..{grid.n} (got {len(models)})")
    p1 = float(np.mean(models[0].fitted))
    v = _stack_fitted(models, ensemble.n_paths)
    quad = ensemble.inv_penalty * v**2
    p2 = float(grid.h * np.mean(np.einsum("k,ik->i", grid.w, quad, optimize=False)))
    return PriceDecomposition(p1=p1, p2=p2)


def share_price(v: float, c0_sq: float, prices: PriceDecomposition) -> float:
    """Initial price of a firm with value v and squared emission efficacy c0_sq."""
    return v * prices.p1 + c0_sq * prices.p2


def silverman_bandwidth(samples: np.ndarray) -> float:
    """Silverman's rule of thumb: 0.9 * min(sd, IQR/1.34) * m^(-1/5)."""
    sd = samples.std(ddof=1)
    q75, q25 = np.percentile(samples, [75, 25])
    iqr = q75 - q25
    spread = min(sd, iqr / 1.34) if iqr > 0 else sd
    return 0.9 * spread * samples.size ** (-0.2)


def kde_smooth(samples: np.ndarray, bandwidth: float | None = None,
               gridsize: int = 512) -> KdeResult:
    """Gaussian kernel density estimate on an evenly spaced grid.

    The grid spans [min - 3*bw, max + 3*bw], so the density integrates to
    one within about 1e-3 by trapezoid. Zero-variance input cannot be
    smoothed; it is returned as a flagged point mass.
    """
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size < 2:
        raise UsageError(f"KDE needs at least 2 samples (got {samples.size})")
    if samples.min() == samples.max():
        return KdeResult(grid=np.array([samples[0]]), density=np.array([np.inf]),
                         bandwidth=0.0, point_mass=True)
    bw = float(bandwidth) if bandwidth is not None else silverman_bandwidth(samples)
    grid = np.linspace(samples.min() - 3 * bw, samples.max() + 3 * bw, gridsize)
    density = np.zeros(gridsize)
    norm = 1.0 / (samples.size * bw * np.sqrt(2 * np.pi))
    # chunk over samples to bound the (gridsize x chunk) scratch array
    chunk = max(1, 2**22 // gridsize)
    for lo in range(0, samples.size, chunk):
        z = (grid[:, None] - samples[None, lo:lo + chunk]) / bw
        density += np.exp(-0.5 * z**2).sum(axis=1)
    density *= norm
    return KdeResult(grid=grid, density=density, bandwidth=bw)


def summarize_samples(samples: np.ndarray) -> dict:
    """Mean, standard deviation and the 5/25/50/75/95 percent quantiles."""
    q = np.percentile(samples, [5, 25, 50, 75, 95])
    return {
        "mean": float(np.mean(samples)),
        "sd": float(np.std(samples, ddof=1)),
        "q05": float(q[0]),
        "q25": float(q[1]),
        "q50": float(q[2]),
        "q75": float(q[3]),
        "q95": float(q[4]),
    }
