"""Model parameters, time grid, and closed-form common-noise factors.

All quantities priced in the market are measurable with respect to the
two-dimensional common noise ``(B1, B2)``:

- firm growth factor   ``E(0,t) = exp(sigma0*B1_t + (mu - sigma0^2/2)*t)``
- emission penalty     ``alpha_t = exp(gamma_pen*B2_t - gamma_pen^2*t/2)``
- green density        ``Z = exp(lambda*B2_T - lambda^2*T/2)``

The idiosyncratic firm volatility integrates out of every aggregated
quantity (its stochastic exponential has conditional mean one), so
``sigma_idio`` is recorded but inert; a dedicated test asserts this.
Exponents are carried in log domain and exponentiated once where products
appear, to avoid overflow in downstream exponential tilting.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

__all__ = [
    "InvestorParams",
    "ModelParams",
    "GridSpec",
    "derive_aggregates",
    "make_grid",
    "log_growth_factor",
    "penalty_inverse_factor",
    "green_density_logz",
]


@dataclass(frozen=True)
class InvestorParams:
    """Risk aversions and concern of the two investor classes.

    ``gamma_r``/``gamma_g`` are the CARA risk aversions of the regular and
    green investor; ``lam`` is the green investor's environmental concern
    (drift tilt on the penalty noise). Initial wealths are optional and
    only matter for interpreting the green proportion.
    """

    gamma_r: float
    gamma_g: float
    lam: float = 0.0
    w_r: float | None = None
    w_g: float | None = None

    def __post_init__(self):
        if not self.gamma_r > 0:
            raise ParameterError(f"investor.gamma_r: gamma_r > 0 required (got {self.gamma_r})")
        if not self.gamma_g > 0:
            raise ParameterError(f"investor.gamma_g: gamma_g > 0 required (got {self.gamma_g})")


def derive_aggregates(inv: InvestorParams) -> tuple[float, float]:
    """Aggregate risk aversion and green proportion of a two-investor market.

    Returns ``(gamma_star, rho)`` with ``1/gamma_star = 1/gamma_r + 1/gamma_g``
    and ``rho = gamma_r / (gamma_r + gamma_g)``.
    """
    gamma_star = 1.0 / (1.0 / inv.gamma_r + 1.0 / inv.gamma_g)
    rho = inv.gamma_r / (inv.gamma_r + inv.gamma_g)
    return gamma_star, rho


@dataclass(frozen=True)
class ModelParams:
    """All scalar model, discretization and solver inputs.

    Defaults are the base experiment configuration (5y horizon, 20 steps,
    50k paths). ``gamma_pen`` is the volatility of the emission penalty
    (climate-transition-risk proxy), ``lam`` the environmental concern of
    the green investor, ``rho`` the green-investor proportion.
    """

    T: float = 5.0
    gamma_star: float = 0.5
    rho: float = 0.5
    lam: float = 0.0
    gamma_pen: float = 0.3
    sigma0: float = 0.1
    mu: float = 0.05
    v_bar: float = 1.0
    c_bar: float = 0.7
    c2_bar: float = 1.0
    sigma_idio: float = 0.0
    n: int = 20
    N: int = 50_000
    p: int = 2
    n_iter: int = 10
    seed: int = 42

    def __post_init__(self):
        checks = [
            (self.T > 0, "params.T", f"T > 0 required (got {self.T})"),
            (self.gamma_star >= 0, "params.gamma_star", f"gamma_star >= 0 required (got {self.gamma_star})"),
            (0.0 <= self.rho <= 1.0, "params.rho", f"rho in [0, 1] required (got {self.rho})"),
            (self.gamma_pen >= 0, "params.gamma_pen", f"gamma_pen >= 0 required (got {self.gamma_pen})"),
            (self.sigma0 >= 0, "params.sigma0", f"sigma0 >= 0 required (got {self.sigma0})"),
            (self.v_bar > 0, "params.v_bar", f"v_bar > 0 required (got {self.v_bar})"),
            (self.c_bar >= 0, "params.c_bar", f"c_bar >= 0 required (got {self.c_bar})"),
            (self.c2_bar >= 0, "params.c2_bar", f"c2_bar >= 0 required (got {self.c2_bar})"),
            (self.sigma_idio >= 0, "params.sigma_idio", f"sigma_idio >= 0 required (got {self.sigma_idio})"),
            (self.c2_bar >= self.c_bar**2 - 1e-12, "params.c2_bar",
             f"c2_bar >= c_bar^2 required by Jensen (got c2_bar={self.c2_bar}, c_bar^2={self.c_bar**2})"),
            (isinstance(self.n, int) and self.n >= 1, "params.n", f"n >= 1 required (got {self.n})"),
            (isinstance(self.N, int) and self.N >= 2, "params.N", f"N >= 2 required (got {self.N})"),
            (isinstance(self.p, int) and self.p >= 2, "params.p", f"p >= 2 required (got {self.p})"),
            (isinstance(self.n_iter, int) and self.n_iter >= 1, "params.n_iter",
             f"n_iter >= 1 required (got {self.n_iter})"),
            (isinstance(self.seed, int) and 0 <= self.seed < 2**64, "params.seed",
             f"seed must be an unsigned 64-bit integer (got {self.seed})"),
        ]
        for ok, field, msg in checks:
            if not ok:
                raise ParameterError(f"{field}: {msg}")

    def replace(self, **kwargs) -> "ModelParams":
        return dataclasses.replace(self, **kwargs)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        """Hex SHA-256 of the canonical JSON encoding, for artifact headers."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass(frozen=True, eq=False)
class GridSpec:
    """Uniform time grid with trapezoid quadrature weights.

    Nodes ``t_k = k*h`` for ``k = 0..n`` with ``h = T/n``; weights are 1/2
    at both endpoints and 1 inside, so ``h * sum(w)`` equals ``T``.
    """

    n: int
    h: float
    t: np.ndarray
    w: np.ndarray


def make_grid(params: ModelParams) -> GridSpec:
    h = params.T / params.n
    t = np.arange(params.n + 1) * h
    w = np.ones(params.n + 1)
    w[0] = w[-1] = 0.5
    return GridSpec(n=params.n, h=h, t=t, w=w)


def log_growth_factor(params: ModelParams, t, b1):
    """``ln E(0,t)`` of the common-noise growth factor at time ``t``, noise value ``b1``.

    Vectorized over ``t`` and ``b1``. The ratio ``E(t,T)`` used by the solver
    is the difference of terminal and running values in log domain.
    """
    return params.sigma0 * np.asarray(b1) + (params.mu - 0.5 * params.sigma0**2) * np.asarray(t)


def penalty_inverse_factor(params: ModelParams, t, b2):
    """``1/alpha_t = exp(-gamma_pen*b2 + gamma_pen^2*t/2)``, strictly positive."""
    g = params.gamma_pen
    return np.exp(-g * np.asarray(b2) + 0.5 * g * g * np.asarray(t))


def green_density_logz(params: ModelParams, b2_T):
    """``ln Z = lambda*b2_T - lambda^2*T/2`` of the green investor's density."""
    return params.lam * np.asarray(b2_T) - 0.5 * params.lam**2 * params.T
