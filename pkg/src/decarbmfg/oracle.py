"""Regression-free reference solver on tiny time grids (n <= 2).

The common-noise increments are replaced by a tensor Gauss-Hermite grid
(one axis per increment, 2n axes total), so conditional expectations are
exact contractions over the future axes and the market-clearing map can be
iterated to machine tolerance. The oracle shares no code path with the
regression machinery and serves as its independent cross-check.

Iteration modes: plain Picard (default; the map is contractive on these
short horizons, so the fixed-point residual decays geometrically) or the
damped ``2/(q+p)`` schedule of the main solver. Both stop when the map
residual ``sup |eta - xi|`` falls below the tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite import hermgauss

from .errors import NumericalError, UsageError
from .model import ModelParams, make_grid

__all__ = ["QuadratureGrid", "OracleResult", "gauss_hermite", "oracle_solve"]

MAX_LEVEL = 64
MAX_STEPS = 2
MAX_ITER = 10_000


def gauss_hermite(level: int):
    """Nodes and weights integrating exactly against the standard normal density.

    Polynomials up to degree 2*level - 1 are integrated exactly; weights
    are normalized to unit sum.
    """
    x, w = hermgauss(level)
    return x * np.sqrt(2.0), w / w.sum()


@dataclass(eq=False)
class QuadratureGrid:
    """Tensor product Gauss-Hermite grid over the 2n increment dimensions."""

    n: int
    level: int
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def shape(self):
        return (self.level,) * (2 * self.n)

    def axis_array(self, axis: int) -> np.ndarray:
        """Node values broadcast along one increment axis of the tensor grid."""
        shape = [1] * (2 * self.n)
        shape[axis] = self.level
        return self.nodes.reshape(shape)

    def joint_weights(self) -> np.ndarray:
        full = np.ones(self.shape)
        for axis in range(2 * self.n):
            shape = [1] * (2 * self.n)
            shape[axis] = self.level
            full = full * self.weights.reshape(shape)
        return full


@dataclass(eq=False)
class OracleResult:
    params: ModelParams
    level: int
    xi: np.ndarray
    weights: np.ndarray
    v: list
    p1: float
    p2: float
    psi: np.ndarray
    psi_mean: float
    curve: np.ndarray
    iterations: int
    residual: float
    mode: str
    quad: QuadratureGrid = None

    def psi_summary(self) -> dict:
        flat = self.psi.ravel()
        w = self.weights.ravel()
        mean = float(np.sum(w * flat))
        var = float(np.sum(w * (flat - mean) ** 2))
        order = np.argsort(flat)
        cum = np.cumsum(w[order])
        qs = np.interp([0.05, 0.25, 0.5, 0.75, 0.95], cum, flat[order])
        return {
            "mean": mean,
            "sd": float(np.sqrt(var)),
            "q05": float(qs[0]),
            "q25": float(qs[1]),
            "q50": float(qs[2]),
            "q75": float(qs[3]),
            "q95": float(qs[4]),
        }


def _cond_expect(full: np.ndarray, weights_1d: np.ndarray, trailing_axes: int) -> np.ndarray:
    """Contract the trailing increment axes with the 1D weights (exact conditioning)."""
    out = full
    for _ in range(trailing_axes):
        out = np.tensordot(out, weights_1d, axes=([-1], [0]))
    return out


def oracle_solve(params: ModelParams, level: int = 32, mode: str = "picard",
                 tol: float = 1e-10, max_iter: int = MAX_ITER) -> OracleResult:
    """Solve the clearing fixed point exactly on the tensor quadrature grid.

    Requires ``params.n <= 2`` (the grid has level**(2n) nodes) and
    ``level <= 64``. Raises ``NumericalError`` with the final residual if
    the residual has not crossed ``tol`` after ``max_iter`` sweeps, or if
    the Picard iteration diverges.
    """
    n = params.n
    if n > MAX_STEPS:
        raise UsageError(f"oracle supports n <= {MAX_STEPS} time steps (got n={n})")
    if not 1 <= level <= MAX_LEVEL:
        raise UsageError(f"oracle quadrature level must be in [1, {MAX_LEVEL}] (got {level})")
    if mode not in ("picard", "damped"):
        raise UsageError(f"oracle mode must be 'picard' or 'damped' (got {mode!r})")

    grid = make_grid(params)
    nodes, w1d = gauss_hermite(level)
    quad = QuadratureGrid(n=n, level=level, nodes=nodes, weights=w1d)
    weights = quad.joint_weights()
    sqrt_h = np.sqrt(grid.h)

    # Brownian node values: b_p[k] uses increment axes 2j-2 (dim 1) / 2j-1 (dim 2), j <= k
    b1 = [np.zeros(())]
    b2 = [np.zeros(())]
    for k in range(1, n + 1):
        b1.append(sum(quad.axis_array(2 * j) for j in range(k)) * sqrt_h)
        b2.append(sum(quad.axis_array(2 * j + 1) for j in range(k)) * sqrt_h)

    drift = params.mu - 0.5 * params.sigma0**2
    log_growth = [params.sigma0 * b1[k] + drift * grid.t[k] for k in range(n + 1)]
    growth_tail = [np.exp(log_growth[n] - log_growth[k]) for k in range(n + 1)]
    g = params.gamma_pen
    inv_penalty = [np.exp(-g * b2[k] + 0.5 * g * g * grid.t[k]) for k in range(n + 1)]
    log_green = params.lam * b2[n] - 0.5 * params.lam**2 * params.T

    def fit_v(xi):
        """Exact conditional expectations E[xi * E(t_k,T) | first k increment pairs]."""
        v = []
        for k in range(n + 1):
            if k == n:
                v.append(xi)
            else:
                v.append(_cond_expect(xi * growth_tail[k], w1d, 2 * (n - k)))
        return v

    def apply_map(xi):
        v = fit_v(xi)
        vhat = params.v_bar * np.broadcast_to(np.exp(log_growth[n]), quad.shape).copy()
        for k in range(n + 1):
            term = grid.w[k] * params.c2_bar * inv_penalty[k] * growth_tail[k] * v[k]
            vhat = vhat + grid.h * term
        s = -params.gamma_star * vhat + params.rho * log_green
        s = np.broadcast_to(s, quad.shape)
        w = np.exp(s - s.max())
        denom = float(np.sum(weights * w))
        if not (np.isfinite(denom) and denom > 0):
            raise NumericalError("oracle clearing map degenerate: weights collapsed")
        return w / denom

    xi = np.ones(quad.shape)
    residual = np.inf
    best = np.inf
    iterations = 0
    for q in range(max_iter):
        eta = apply_map(xi)
        residual = float(np.max(np.abs(eta - xi)))
        iterations = q + 1
        if not np.isfinite(residual):
            raise NumericalError("oracle iteration produced non-finite values", iteration=q)
        if residual < tol:
            xi = eta if mode == "picard" else xi
            break
        best = min(best, residual)
        if mode == "picard":
            if residual > 1e6 * max(best, 1.0):
                raise NumericalError(
                    f"oracle Picard iteration diverging (residual {residual:.3g}); try mode='damped'",
                    iteration=q, residual=residual)
            xi = eta
        else:
            alpha = 2.0 / (q + params.p)
            xi = alpha * eta + (1.0 - alpha) * xi
    else:
        raise NumericalError(
            f"oracle did not converge within {max_iter} iterations (residual {residual:.3g})",
            iteration=max_iter, residual=residual)

    v = fit_v(xi)
    p1 = float(v[0])
    p2 = 0.0
    curve = np.empty(n + 1)
    psi = np.zeros(quad.shape)
    for k in range(n + 1):
        quad_term = inv_penalty[k] * v[k] ** 2
        p2 += grid.w[k] * float(np.sum(weights * np.broadcast_to(quad_term, quad.shape)))
        curve[k] = params.c_bar * float(
            np.sum(weights * np.broadcast_to(xi * inv_penalty[k] * growth_tail[k], quad.shape)))
        psi = psi + grid.w[k] * params.c_bar * np.broadcast_to(inv_penalty[k] * v[k], quad.shape)
    p2 *= grid.h
    psi = psi * grid.h
    psi_mean = float(np.sum(weights * psi))

    return OracleResult(params=params, level=level, xi=xi, weights=weights, v=v,
                        p1=p1, p2=p2, psi=psi, psi_mean=psi_mean, curve=curve,
                        iterations=iterations, residual=residual, mode=mode, quad=quad)
