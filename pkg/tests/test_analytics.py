import numpy as np
import pytest

from decarbmfg import analytics
from decarbmfg.errors import UsageError
from decarbmfg.model import ModelParams
from decarbmfg.paths import simulate_paths
from decarbmfg.regress import FeatureSpec, fit_all
from decarbmfg.solver import solve

from conftest import assert_close


@pytest.fixture(scope="module")
def degenerate_solution(degenerate_ensemble):
    res = solve(degenerate_ensemble, n_iter=3)
    return degenerate_ensemble, res


@pytest.fixture(scope="module")
def random_solution(small_ensemble):
    res = solve(small_ensemble)
    return small_ensemble, res


class TestTotalEmissions:
    def test_degenerate_closed_form(self, degenerate_solution):
        # c_bar * (e^{mu T} - 1) / mu up to trapezoid error
        ens, res = degenerate_solution
        samples = analytics.total_emissions(ens, res.models).samples
        expected = 0.7 * (np.exp(0.25) - 1.0) / 0.05
        assert_close(samples.mean(), expected, rel=5e-3)
        assert np.all(samples == samples[0])

    def test_zero_efficacy(self, small_params):
        p = small_params.replace(c_bar=0.0)
        ens = simulate_paths(p)
        res = solve(ens, n_iter=2)
        samples = analytics.total_emissions(ens, res.models).samples
        assert np.all(samples == 0.0)

    def test_nonnegative(self, random_solution):
        ens, res = random_solution
        samples = analytics.total_emissions(ens, res.models).samples
        assert np.all(samples >= 0.0)


class TestExpectedEmissionCurve:
    def test_degenerate_closed_form(self, degenerate_solution):
        ens, res = degenerate_solution
        direct, regression = analytics.expected_emission_curve(ens, res.xi, res.models)
        expected = 0.7 * np.exp(0.05 * (5.0 - ens.grid.t))
        np.testing.assert_allclose(direct, expected, rtol=1e-12)
        np.testing.assert_allclose(regression, expected, rtol=1e-12)
        assert_close(direct[0], 0.8988, abs_=5e-4)

    def test_terminal_node_formula(self, random_solution):
        ens, res = random_solution
        direct, _ = analytics.expected_emission_curve(ens, res.xi, res.models)
        k = ens.grid.n
        expected = ens.params.c_bar * np.mean(res.xi * ens.inv_penalty[:, k])
        assert_close(direct[k], expected, rel=1e-12)

    def test_direct_vs_regression_within_3se(self, random_solution):
        # both estimate the same expectation; difference within 3 combined SEs
        ens, res = random_solution
        direct, regression = analytics.expected_emission_curve(ens, res.xi, res.models)
        c = ens.params.c_bar
        v = np.stack([m.fitted for m in res.models], axis=1)
        for k in range(ens.grid.n + 1):
            a = c * res.xi * ens.inv_penalty[:, k] * ens.growth_tail[:, k]
            b = c * ens.inv_penalty[:, k] * v[:, k]
            se = np.sqrt(a.var(ddof=1) + b.var(ddof=1)) / np.sqrt(ens.n_paths)
            assert abs(direct[k] - regression[k]) <= 3 * se + 1e-12

    def test_tower_cross_check(self, random_solution):
        # mean of the per-path totals equals the quadrature of the
        # regression-based curve (both estimate the integrated expectation)
        ens, res = random_solution
        samples = analytics.total_emissions(ens, res.models).samples
        _, regression = analytics.expected_emission_curve(ens, res.xi, res.models)
        integral = ens.grid.h * np.sum(ens.grid.w * regression)
        se = samples.std(ddof=1) / np.sqrt(ens.n_paths)
        assert abs(samples.mean() - integral) <= 3 * se + 1e-12


class TestPriceComponents:
    def test_degenerate_closed_forms(self, degenerate_solution):
        ens, res = degenerate_solution
        prices = analytics.price_components(ens, res.xi, res.models)
        assert_close(prices.p1, np.exp(0.25), rel=1e-6)
        assert_close(prices.p2, (np.exp(0.5) - 1.0) / 0.1, rel=5e-3)

    def test_p1_equals_mean_discounted_growth(self, random_solution):
        ens, res = random_solution
        prices = analytics.price_components(ens, res.xi, res.models)
        assert_close(prices.p1, np.mean(res.xi * ens.growth_T), rel=1e-10)

    def test_positive(self, random_solution):
        ens, res = random_solution
        prices = analytics.price_components(ens, res.xi, res.models)
        assert prices.p1 > 0 and prices.p2 > 0

    def test_share_price_linearity(self, random_solution):
        ens, res = random_solution
        prices = analytics.price_components(ens, res.xi, res.models)
        assert analytics.share_price(1.0, 0.0, prices) == prices.p1
        assert analytics.share_price(0.0, 1.0, prices) == prices.p2
        assert_close(analytics.share_price(2.0, 3.0, prices),
                     2 * prices.p1 + 3 * prices.p2, rel=1e-15)


class TestKde:
    def test_standard_normal_density_at_zero(self):
        rng = np.random.default_rng(8)
        samples = rng.standard_normal(50_000)
        kde = analytics.kde_smooth(samples)
        at_zero = np.interp(0.0, kde.grid, kde.density)
        assert_close(at_zero, 1.0 / np.sqrt(2 * np.pi), rel=0.05)

    def test_density_integrates_to_one(self):
        rng = np.random.default_rng(9)
        samples = rng.lognormal(sigma=0.4, size=20_000)
        kde = analytics.kde_smooth(samples)
        integral = np.trapezoid(kde.density, kde.grid)
        assert abs(integral - 1.0) <= 1e-3

    def test_point_mass_flag(self):
        kde = analytics.kde_smooth(np.array([0.0, 0.0]))
        assert kde.point_mass

    def test_too_few_samples(self):
        with pytest.raises(UsageError):
            analytics.kde_smooth(np.array([1.0]))

    def test_explicit_bandwidth(self):
        rng = np.random.default_rng(10)
        samples = rng.standard_normal(1000)
        kde = analytics.kde_smooth(samples, bandwidth=0.25)
        assert kde.bandwidth == 0.25


class TestSummary:
    def test_quantile_keys(self):
        rng = np.random.default_rng(11)
        s = analytics.summarize_samples(rng.standard_normal(10_000))
        assert set(s) == {"mean", "sd", "q05", "q25", "q50", "q75", "q95"}
        assert s["q05"] < s["q25"] < s["q50"] < s["q75"] < s["q95"]
