import numpy as np
import pytest

from decarbmfg.model import ModelParams
from decarbmfg.paths import simulate_paths


@pytest.fixture(scope="session")
def small_params():
    """Cheap configuration reused by unit tests: 4 steps, 4000 paths."""
    return ModelParams(T=2.0, n=4, N=4000, n_iter=4, seed=123)


@pytest.fixture(scope="session")
def small_ensemble(small_params):
    return simulate_paths(small_params)


@pytest.fixture(scope="session")
def degenerate_params():
    """No randomness in the priced factors: gamma_pen = lambda = sigma0 = 0."""
    return ModelParams(gamma_pen=0.0, lam=0.0, sigma0=0.0, N=2000, n=20, n_iter=5, seed=11)


@pytest.fixture(scope="session")
def degenerate_ensemble(degenerate_params):
    return simulate_paths(degenerate_params)


def assert_close(actual, expected, rel=None, abs_=None, msg=""):
    __tracebackhide__ = True
    actual = float(actual)
    expected = float(expected)
    tol = 0.0
    if rel is not None:
        tol = max(tol, rel * abs(expected))
    if abs_ is not None:
        tol = max(tol, abs_)
    assert abs(actual - expected) <= tol, (
        f"{msg}: got {actual!r}, expected {expected!r} +- {tol!r}"
    )
