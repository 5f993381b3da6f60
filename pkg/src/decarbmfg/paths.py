"""Common-noise path ensemble with precomputed per-path factors.

Increments are drawn from a counter-based Philox stream keyed by the seed
and filled in one fixed (path, step, dimension) order, so the same
``(seed, N, n)`` always yields the bit-identical ensemble regardless of
thread settings. Increments themselves are stored because downstream
regressors may use them as features; Brownian node values and the growth,
penalty and green-density factors are precomputed once since every solver
sweep reuses them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ResourceError, UsageError
from .model import (
    GridSpec,
    ModelParams,
    green_density_logz,
    log_growth_factor,
    make_grid,
    penalty_inverse_factor,
)

__all__ = ["PathEnsemble", "simulate_paths", "antithetic_extend", "save_ensemble", "load_ensemble"]

DEFAULT_MAX_BYTES = 4 * 2**30  # 4 GiB of ensemble storage

# moment tripwire only makes sense at scale
_MOMENT_CHECK_MIN_PATHS = 10_000


@dataclass(eq=False)
class PathEnsemble:
    """Simulated common-noise paths on the solver grid.

    Shapes: increments ``eps1/eps2`` are ``(M, n)``; node arrays are
    ``(M, n+1)`` with column k at time ``t_k``; ``log_green`` is ``(M,)``.
    ``M`` is the number of stored paths (``2N`` after antithetic
    extension). ``log_growth[:, k] = ln E(0, t_k)`` and
    ``log_growth_tail[:, k] = ln E(t_k, T)``; ``inv_penalty = 1/alpha``.
    ``growth_tail`` and ``growth_T`` are the linear-domain caches of the
    tail ratio and the terminal factor.
    """

    params: ModelParams
    grid: GridSpec
    eps1: np.ndarray
    eps2: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    log_growth: np.ndarray
    log_growth_tail: np.ndarray
    inv_penalty: np.ndarray
    log_green: np.ndarray
    growth_tail: np.ndarray
    growth_T: np.ndarray
    antithetic: bool = False

    @property
    def n_paths(self) -> int:
        return self.eps1.shape[0]

    @property
    def n_steps(self) -> int:
        return self.eps1.shape[1]


def _estimate_bytes(n_paths: int, n_steps: int) -> int:
    node_arrays = 6 * n_paths * (n_steps + 1)  # b1, b2, log_growth, log_growth_tail, inv_penalty, growth_tail
    step_arrays = 2 * n_paths * n_steps  # eps1, eps2
    flat_arrays = 2 * n_paths  # log_green, growth_T
    return 8 * (node_arrays + step_arrays + flat_arrays)


def _moment_check(eps: np.ndarray, label: str):
    """5-sigma sanity bounds on per-column mean and variance of the increments."""
    m = eps.shape[0]
    mean_tol = 5.0 / np.sqrt(m)
    var_tol = 5.0 * np.sqrt(2.0 / m)
    col_mean = eps.mean(axis=0)
    col_var = eps.var(axis=0)
    bad_mean = np.abs(col_mean) > mean_tol
    bad_var = np.abs(col_var - 1.0) > var_tol
    if bad_mean.any() or bad_var.any():
        j = int(np.argmax(bad_mean | bad_var))
        raise NumericalError(
            f"increment moment check failed for {label} column {j}: "
            f"mean={col_mean[j]:.3g} (tol {mean_tol:.3g}), var={col_var[j]:.3g} (tol 1+-{var_tol:.3g})"
        )


def _assemble(params: ModelParams, grid: GridSpec, eps1: np.ndarray, eps2: np.ndarray,
              antithetic: bool = False) -> PathEnsemble:
    sqrt_h = np.sqrt(grid.h)
    m = eps1.shape[0]
    b1 = np.zeros((m, grid.n + 1))
    b2 = np.zeros((m, grid.n + 1))
    np.cumsum(eps1, axis=1, out=b1[:, 1:])
    np.cumsum(eps2, axis=1, out=b2[:, 1:])
    b1[:, 1:] *= sqrt_h
    b2[:, 1:] *= sqrt_h

    log_growth = log_growth_factor(params, grid.t[None, :], b1)
    # E(t,T) = E(0,T)/E(0,t); the last column is exactly zero by construction
    log_growth_tail = log_growth[:, -1:] - log_growth
    inv_penalty = penalty_inverse_factor(params, grid.t[None, :], b2)
    log_green = green_density_logz(params, b2[:, -1])

    return PathEnsemble(
        params=params,
        grid=grid,
        eps1=eps1,
        eps2=eps2,
        b1=b1,
        b2=b2,
        log_growth=log_growth,
        log_growth_tail=log_growth_tail,
        inv_penalty=inv_penalty,
        log_green=log_green,
        growth_tail=np.exp(log_growth_tail),
        growth_T=np.exp(log_growth[:, -1]),
        antithetic=antithetic,
    )


def simulate_paths(params: ModelParams, grid: GridSpec | None = None,
                   max_bytes: int = DEFAULT_MAX_BYTES) -> PathEnsemble:
    """Simulate the ensemble of N common-noise paths for the given parameters.

    Raises ``ResourceError`` with the required byte estimate if the ensemble
    would exceed ``max_bytes``. When ``N >= 10^4`` the raw increments must
    pass a 5-sigma moment sanity check.
    """
    grid = grid if grid is not None else make_grid(params)
    need = _estimate_bytes(params.N, params.n)
    if need > max_bytes:
        raise ResourceError(
            f"ensemble of N={params.N} paths with n={params.n} steps needs about "
            f"{need} bytes, above the {max_bytes} byte budget",
            required_bytes=need,
            budget_bytes=max_bytes,
        )
    rng = np.random.Generator(np.random.Philox(key=params.seed))
    eps = rng.standard_normal((params.N, params.n, 2))
    eps1 = np.ascontiguousarray(eps[:, :, 0])
    eps2 = np.ascontiguousarray(eps[:, :, 1])
    if params.N >= _MOMENT_CHECK_MIN_PATHS:
        _moment_check(eps1, "eps1")
        _moment_check(eps2, "eps2")
    return _assemble(params, grid, eps1, eps2)


def antithetic_extend(ensemble: PathEnsemble) -> PathEnsemble:
    """Extend to 2N paths where path N+i uses the negated increments of path i.

    All derived factors are recomputed through the same construction path,
    so every ensemble invariant holds on the extension.
    """
    if ensemble.antithetic:
        raise UsageError("ensemble is already antithetically extended")
    eps1 = np.vstack([ensemble.eps1, -ensemble.eps1])
    eps2 = np.vstack([ensemble.eps2, -ensemble.eps2])
    return _assemble(ensemble.params, ensemble.grid, eps1, eps2, antithetic=True)


def save_ensemble(ensemble: PathEnsemble, path):
    """Binary dump (.npz) of the increments plus a header identifying the run.

    Only the increments are stored; factors are rebuilt on load through the
    same deterministic code path.
    """
    header = json.dumps(
        {
            "seed": ensemble.params.seed,
            "N": ensemble.params.N,
            "n": ensemble.params.n,
            "params_hash": ensemble.params.digest(),
            "params": ensemble.params.to_dict(),
            "antithetic": ensemble.antithetic,
        },
        sort_keys=True,
    )
    np.savez(path, header=np.bytes_(header.encode()), eps1=ensemble.eps1, eps2=ensemble.eps2)


def load_ensemble(path) -> PathEnsemble:
    """Rebuild an ensemble from a dump written by :func:`save_ensemble`."""
    with np.load(path) as data:
        header = json.loads(bytes(data["header"]).decode())
        eps1 = data["eps1"]
        eps2 = data["eps2"]
    params = ModelParams(**header["params"])
    if params.digest() != header["params_hash"]:
        raise UsageError(f"ensemble dump {path}: header hash does not match its parameters")
    if eps1.shape[1] != params.n:
        raise UsageError(f"ensemble dump {path}: increment shape {eps1.shape} inconsistent with n={params.n}")
    return _assemble(params, make_grid(params), eps1, eps2, antithetic=bool(header["antithetic"]))
