"""Damped fixed-point iteration on the stochastic discount factor.

One sweep q of the iteration:

1. fit the conditional-expectation models ``v_k`` from the current field
   ``xi_q`` (all grid indices),
2. assemble the discretized terminal firm value per path,
3. apply the market-clearing map to get the candidate field ``eta_q``
   (an exponential tilt normalized to empirical mean one),
4. damped update ``xi_{q+1} = alpha_q * eta_q + (1 - alpha_q) * xi_q``
   with ``alpha_q = 2/(q + p)``.

The convex potential ``G = H + L`` (an entropy term plus a linear-quadratic
term) certifies convergence: evaluated on the same ensemble, it is
non-increasing along the iterates up to Monte-Carlo noise, and the map's
fixed point is its unique minimizer. After the last update the solver runs
one evaluation-only sweep, so the trace carries the residual and potential
of the final field and the returned models are fitted from it.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, UsageError
from .paths import PathEnsemble
from .regress import CondExpModel, FeatureSpec, fit_all

__all__ = [
    "DiscountField",
    "PotentialValue",
    "IterationRecord",
    "SolveResult",
    "terminal_value",
    "clearing_map",
    "damped_update",
    "potential",
    "solve",
]


@dataclass(eq=False)
class DiscountField:
    """Per-path SDF samples at one iteration; empirical mean one by construction."""

    xi: np.ndarray
    q: int = 0


@dataclass(frozen=True)
class PotentialValue:
    """Empirical potential split into its entropy and linear-quadratic parts.

    ``total = entropy + quad``; ``se`` is the Monte-Carlo standard error of
    ``total`` (per-path values are iid across paths).
    """

    entropy: float
    quad: float
    total: float
    se: float


@dataclass(frozen=True)
class IterationRecord:
    q: int
    alpha: float
    entropy: float
    quad: float
    total: float
    total_se: float
    residual: float
    wall_ms: float


@dataclass(eq=False)
class SolveResult:
    xi: np.ndarray
    models: list
    trace: list
    xi_history: list
    entropy_floor: float
    feature_spec: FeatureSpec
    params: object = None

    @property
    def final_residual(self) -> float:
        return self.trace[-1].residual


def _stack_fitted(models: list[CondExpModel], n_paths: int) -> np.ndarray:
    v = np.empty((n_paths, len(models)))
    for k, m in enumerate(models):
        v[:, k] = m.fitted
    return v


def terminal_value(ensemble: PathEnsemble, models: list[CondExpModel]) -> np.ndarray:
    """Discretized terminal firm value per path by trapezoid quadrature.

    ``vhat_i = v_bar * E(0,T)_i + h * sum_k w_k c2_bar * invAlpha_ik
    * E(t_k,T)_i * v_k(i)``. Because the fitted values are clamped at
    zero, ``vhat_i >= v_bar * E(0,T)_i`` always holds.
    """
    grid = ensemble.grid
    if len(models) != grid.n + 1:
        raise UsageError(f"need fitted models for all k = 0..{grid.n} (got {len(models)})")
    p = ensemble.params
    v = _stack_fitted(models, ensemble.n_paths)
    emission = ensemble.inv_penalty * ensemble.growth_tail * v
    integral = grid.h * p.c2_bar * np.einsum("k,ik->i", grid.w, emission, optimize=False)
    return p.v_bar * ensemble.growth_T + integral


def clearing_map(ensemble: PathEnsemble, vhat: np.ndarray, params=None) -> np.ndarray:
    """Market-clearing SDF candidate: normalized exponential tilt of the scores.

    ``eta_i = exp(s_i) / mean_j exp(s_j)`` with score
    ``s_i = -gamma_star * vhat_i + rho * lnZ_i``, evaluated with the max
    subtracted so finite inputs never overflow. The empirical mean of the
    result is one by construction and every entry is strictly positive.
    """
    p = params if params is not None else ensemble.params
    if not np.isfinite(vhat).all():
        i = int(np.argmin(np.isfinite(vhat)))
        raise NumericalError(f"non-finite terminal value at path {i}", path_index=i)
    s = -p.gamma_star * vhat + p.rho * ensemble.log_green
    s_max = s.max()
    w = np.exp(s - s_max)
    mean_w = w.mean()
    if not (np.isfinite(mean_w) and mean_w > 0):
        raise NumericalError("clearing map degenerate: all scores collapsed to -inf")
    eta = w / mean_w
    if not np.isfinite(eta).all():
        i = int(np.argmin(np.isfinite(eta)))
        raise NumericalError(f"non-finite clearing-map value at path {i}", path_index=i)
    return eta


def damped_update(xi: np.ndarray, eta: np.ndarray, q: int, p: int) -> np.ndarray:
    """Convex combination ``alpha_q * eta + (1 - alpha_q) * xi`` with ``alpha_q = 2/(q+p)``.

    Preserves the empirical mean exactly and nonnegativity trivially; at
    q = 0 with p = 2 the step weight is one, so the first iterate adopts
    the clearing-map output entirely. Written as ``xi + alpha * (eta - xi)``
    so a stationary field is reproduced bit for bit.
    """
    alpha = 2.0 / (q + p)
    if alpha == 1.0:
        return eta.copy()
    return xi + alpha * (eta - xi)


def potential(ensemble: PathEnsemble, xi: np.ndarray, models: list[CondExpModel],
              params=None) -> PotentialValue:
    """Empirical potential of a field: entropy part plus linear-quadratic part.

    Entropy: ``mean_i Z_i^rho * h(xi_i / Z_i^rho)`` with
    ``h(x) = x (ln x - 1)``, ``h(0) = 0``; computed in log domain as
    ``xi (ln xi - rho lnZ - 1)``. Quadratic part: ``gamma_star * (mean_i
    xi_i v_bar E(0,T)_i + h sum_k w_k (c2_bar/2) mean_i invAlpha_ik
    v_k(i)^2)``, which is the quadrature of the emission running cost.
    """
    p = params if params is not None else ensemble.params
    xi = np.asarray(xi)
    if np.any(xi < 0):
        i = int(np.argmax(xi < 0))
        raise NumericalError(f"negative SDF sample at path {i} violates the field invariant", path_index=i)
    grid = ensemble.grid

    ent = np.zeros_like(xi)
    pos = xi > 0
    ent[pos] = xi[pos] * (np.log(xi[pos]) - p.rho * ensemble.log_green[pos] - 1.0)

    v = _stack_fitted(models, ensemble.n_paths)
    quad_k = ensemble.inv_penalty * v**2  # (M, n+1)
    quad_path = grid.h * 0.5 * p.c2_bar * np.einsum("k,ik->i", grid.w, quad_k, optimize=False)
    lin_path = xi * p.v_bar * ensemble.growth_T
    g_path = ent + p.gamma_star * (lin_path + quad_path)

    entropy = float(ent.mean())
    quad = float(p.gamma_star * (lin_path.mean() + quad_path.mean()))
    total = float(g_path.mean())
    se = float(g_path.std(ddof=1) / np.sqrt(g_path.size))
    return PotentialValue(entropy=entropy, quad=quad, total=total, se=se)


def entropy_floor(ensemble: PathEnsemble, params=None) -> float:
    """Lower bound ``-mean_i Z_i^rho`` that the entropy part can never cross."""
    p = params if params is not None else ensemble.params
    return float(-np.mean(np.exp(p.rho * ensemble.log_green)))


def solve(ensemble: PathEnsemble, spec: FeatureSpec | None = None,
          n_iter: int | None = None, p: int | None = None,
          keep_history: bool = True) -> SolveResult:
    """Run the damped fixed-point iteration from the unit field.

    Performs ``n_iter`` update sweeps followed by one evaluation-only sweep
    (fit + clearing at the final field, no update), so the trace has
    ``n_iter + 1`` records q = 0..n_iter and the returned models are fitted
    from the returned field. Aborts with iteration context on any
    non-finite intermediate.
    """
    spec = spec if spec is not None else FeatureSpec()
    mp = ensemble.params
    n_iter = n_iter if n_iter is not None else mp.n_iter
    p = p if p is not None else mp.p
    if n_iter < 1:
        raise UsageError(f"n_iter >= 1 required (got {n_iter})")
    if p < 2:
        raise UsageError(f"p >= 2 required (got {p})")

    xi = np.ones(ensemble.n_paths)
    history = [xi.copy()] if keep_history else []
    trace: list[IterationRecord] = []
    floor = entropy_floor(ensemble)
    models = None

    for q in range(n_iter + 1):
        t0 = time.perf_counter()
        try:
            models = fit_all(ensemble, xi, spec)
            vhat = terminal_value(ensemble, models)
            eta = clearing_map(ensemble, vhat)
        except NumericalError as err:
            raise NumericalError(f"sweep {q}: {err}", iteration=q,
                                 path_index=err.path_index, condition=err.condition) from err
        pot = potential(ensemble, xi, models)
        residual = float(np.mean(np.abs(eta - xi)))
        alpha = 2.0 / (q + p)
        wall_ms = (time.perf_counter() - t0) * 1e3
        trace.append(IterationRecord(q=q, alpha=alpha, entropy=pot.entropy, quad=pot.quad,
                                     total=pot.total, total_se=pot.se,
                                     residual=residual, wall_ms=wall_ms))
        if q == n_iter:
            break
        xi = damped_update(xi, eta, q, p)
        if not np.isfinite(xi).all():
            i = int(np.argmin(np.isfinite(xi)))
            raise NumericalError(f"non-finite SDF sample at sweep {q}, path {i}",
                                 iteration=q, path_index=i)
        if keep_history:
            history.append(xi.copy())

    return SolveResult(xi=xi, models=models, trace=trace, xi_history=history,
                       entropy_floor=floor, feature_spec=spec, params=mp)
