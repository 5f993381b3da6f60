"""Least-squares estimators of the conditional expectations driving the solver.

At each grid index k the solver needs ``E[xi * E(t_k,T) | F_k]`` where
``F_k`` is generated by the first k common-noise increments. The estimator
is a ridge-stabilized linear regression of the per-path targets
``y_i = E(t_k,T)_i * xi_i`` on an explicit feature basis:

- ``markov`` (default): polynomial in the Brownian node values (b1_k, b2_k),
- ``markov-plus-accumulator``: additionally the running emission integral,
  which makes (b1, b2, A) an approximate sufficient statistic for the SDF,
- ``increment-poly``: degree <= 2 monomials in all 2k increments.

Boundary rules: F_0 is trivial, so k = 0 is the constant (sample-mean)
model; at k = n the target is xi itself (the terminal growth ratio is one
and xi is terminal-measurable), so no regression is run. Fitted values are
clamped at zero after fitting, never inside the objective: they estimate
the conditional expectation of a nonnegative variable and feed quadratic
terms where a negative value is meaningless.

The Gram matrix is accumulated with fixed-order ``einsum`` reductions (no
BLAS dispatch), so fits are bitwise reproducible across thread settings.
The ridge weight is applied to the non-intercept diagonal only, which keeps
the sample mean of the fit equal to the sample mean of the target.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

from .errors import NumericalError, ParameterError, UsageError
from .paths import PathEnsemble

__all__ = ["FeatureSpec", "CondExpModel", "build_features", "fit_cond_exp", "fit_all", "predict", "predict_features"]

FEATURE_KINDS = ("markov", "markov-plus-accumulator", "increment-poly")


@dataclass(frozen=True)
class FeatureSpec:
    """Feature basis selection for the conditional-expectation regressions."""

    kind: str = "markov"
    degree: int = 2
    ridge: float = 1e-8

    def __post_init__(self):
        if self.kind not in FEATURE_KINDS:
            raise ParameterError(f"features.kind: one of {FEATURE_KINDS} required (got {self.kind!r})")
        if self.degree not in (1, 2, 3):
            raise ParameterError(f"features.degree: degree in {{1, 2, 3}} required (got {self.degree})")
        if not self.ridge >= 0:
            raise ParameterError(f"features.ridge: ridge >= 0 required (got {self.ridge})")


@dataclass(eq=False)
class CondExpModel:
    """A fitted conditional-expectation estimator for one grid index.

    ``fitted`` caches the clamped in-sample values actually consumed by the
    solver; evaluating the model on its training ensemble reproduces them
    exactly. ``coef`` is None for the terminal identity model. ``rmse`` is
    the in-sample error of the clamped fit and ``cond`` the condition
    estimate of the normal equations.
    """

    k: int
    spec: FeatureSpec
    coef: np.ndarray | None
    fitted: np.ndarray
    rmse: float
    cond: float
    identity: bool = False
    n_train: int = 0


def _accumulator_column(ensemble: PathEnsemble, k: int, prior_models) -> np.ndarray:
    """Running integral h*sum_{j<k} w_j c2_bar * invAlpha_j * v_j / E(0,t_j).

    This is the F_k-measurable part of the discretized terminal value
    divided by the terminal growth factor, built from the prior fits.
    """
    grid = ensemble.grid
    c2 = ensemble.params.c2_bar
    acc = np.zeros(ensemble.n_paths)
    for j in range(k):
        vj = prior_models[j].fitted
        acc += grid.w[j] * c2 * ensemble.inv_penalty[:, j] * vj * np.exp(-ensemble.log_growth[:, j])
    return grid.h * acc


def build_features(ensemble: PathEnsemble, k: int, spec: FeatureSpec,
                   prior_models=None) -> np.ndarray:
    """Feature matrix (M x d) for grid index k; always includes the intercept.

    For ``markov-plus-accumulator`` the models fitted at indices j < k must
    be supplied so the running integral column can be evaluated.
    """
    if not 0 <= k <= ensemble.grid.n:
        raise UsageError(f"grid index k={k} outside [0, {ensemble.grid.n}]")
    m = ensemble.n_paths
    if k == 0:
        # the common-noise filtration at time zero is trivial
        return np.ones((m, 1))

    if spec.kind in ("markov", "markov-plus-accumulator"):
        b1 = ensemble.b1[:, k]
        b2 = ensemble.b2[:, k]
        cols = [np.ones(m)]
        for deg in range(1, spec.degree + 1):
            for a in range(deg, -1, -1):
                cols.append(b1**a * b2 ** (deg - a))
        if spec.kind == "markov-plus-accumulator":
            if prior_models is None or len(prior_models) < k:
                raise UsageError(
                    f"markov-plus-accumulator features at k={k} need fitted models for all j < k"
                )
            cols.append(_accumulator_column(ensemble, k, prior_models))
        return np.column_stack(cols)

    # increment-poly: degree <= 2 monomials in all increments up to step k
    eps = np.empty((m, 2 * k))
    eps[:, 0::2] = ensemble.eps1[:, :k]
    eps[:, 1::2] = ensemble.eps2[:, :k]
    cols = [np.ones(m)] + [eps[:, j] for j in range(2 * k)]
    for a, b in combinations_with_replacement(range(2 * k), 2):
        cols.append(eps[:, a] * eps[:, b])
    return np.column_stack(cols)


def _solve_normal_equations(x: np.ndarray, y: np.ndarray, ridge: float):
    """Ridge-stabilized normal equations with a rank-revealing solve.

    Returns (coef, cond). The Gram matrix is scaled by 1/M so the ridge
    weight is independent of the ensemble size; the intercept entry is not
    penalized.
    """
    m, d = x.shape
    gram = np.einsum("ij,ik->jk", x, x, optimize=False) / m
    rhs = np.einsum("ij,i->j", x, y, optimize=False) / m
    if ridge > 0:
        idx = np.arange(1, d)
        gram[idx, idx] += ridge
    coef, _, rank, sv = np.linalg.lstsq(gram, rhs, rcond=None)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
    if rank < d:
        raise NumericalError(
            f"normal equations rank-deficient beyond ridge repair (rank {rank} < {d}, cond {cond:.3g})",
            condition=cond,
        )
    return coef, cond


def fit_cond_exp(ensemble: PathEnsemble, xi: np.ndarray, k: int, spec: FeatureSpec,
                 prior_models=None) -> CondExpModel:
    """Fit the conditional-expectation model at grid index k from SDF samples xi."""
    xi = np.asarray(xi)
    if xi.shape != (ensemble.n_paths,):
        raise UsageError(f"xi shape {xi.shape} does not match the ensemble ({ensemble.n_paths} paths)")
    if np.any(xi < 0):
        raise UsageError("xi must be nonnegative")
    n = ensemble.grid.n
    if not 0 <= k <= n:
        raise UsageError(f"grid index k={k} outside [0, {n}]")

    if k == n:
        # terminal index: the tail growth ratio is one and xi is measurable,
        # so the conditional expectation is xi itself
        fitted = np.maximum(xi, 0.0)
        return CondExpModel(k=k, spec=spec, coef=None, fitted=fitted, rmse=0.0,
                            cond=1.0, identity=True, n_train=ensemble.n_paths)

    y = ensemble.growth_tail[:, k] * xi
    x = build_features(ensemble, k, spec, prior_models)

    if y.min() == y.max():
        # constant target: the exact least-squares solution is the constant model
        coef = np.zeros(x.shape[1])
        coef[0] = y[0]
        fitted = np.full(ensemble.n_paths, max(y[0], 0.0))
        return CondExpModel(k=k, spec=spec, coef=coef, fitted=fitted, rmse=0.0,
                            cond=1.0, n_train=ensemble.n_paths)

    coef, cond = _solve_normal_equations(x, y, spec.ridge)
    raw = np.einsum("ij,j->i", x, coef, optimize=False)
    fitted = np.maximum(raw, 0.0)
    rmse = float(np.sqrt(np.mean((fitted - y) ** 2)))
    return CondExpModel(k=k, spec=spec, coef=coef, fitted=fitted, rmse=rmse,
                        cond=cond, n_train=ensemble.n_paths)


def fit_all(ensemble: PathEnsemble, xi: np.ndarray, spec: FeatureSpec) -> list[CondExpModel]:
    """Fit models for every grid index k = 0..n, sequentially (prior fits feed k's features)."""
    models: list[CondExpModel] = []
    for k in range(ensemble.grid.n + 1):
        models.append(fit_cond_exp(ensemble, xi, k, spec, models))
    return models


def predict_features(model: CondExpModel, x: np.ndarray) -> np.ndarray:
    """Raw (unclamped) linear prediction on an explicit feature matrix."""
    if model.identity:
        raise UsageError("the terminal identity model has no coefficients; it only predicts in-sample")
    if x.shape[1] != model.coef.shape[0]:
        raise UsageError(f"feature matrix has {x.shape[1]} columns, model expects {model.coef.shape[0]}")
    return np.einsum("ij,j->i", x, model.coef, optimize=False)


def predict(model: CondExpModel, ensemble: PathEnsemble, i=None, prior_models=None):
    """Clamped prediction for path(s) ``i`` of the ensemble (all paths if None)."""
    if model.identity:
        if ensemble.n_paths != model.n_train:
            raise UsageError("the terminal identity model only predicts on its training ensemble")
        out = model.fitted
    else:
        x = build_features(ensemble, model.k, model.spec, prior_models)
        out = np.maximum(predict_features(model, x), 0.0)
    if i is None:
        return out
    return out[i]
