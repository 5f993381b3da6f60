import numpy as np
import pytest

from decarbmfg.errors import ParameterError
from decarbmfg.model import (
    InvestorParams,
    ModelParams,
    derive_aggregates,
    green_density_logz,
    log_growth_factor,
    make_grid,
    penalty_inverse_factor,
)

from conftest import assert_close


class TestDeriveAggregates:
    def test_symmetric_investors(self):
        gamma_star, rho = derive_aggregates(InvestorParams(gamma_r=1.0, gamma_g=1.0))
        assert gamma_star == 0.5
        assert rho == 0.5

    def test_green_investor_limit(self):
        # gamma_g -> inf: only the regular investor matters
        gamma_star, rho = derive_aggregates(InvestorParams(gamma_r=1.0, gamma_g=1e9))
        assert_close(gamma_star, 1.0, abs_=1e-8)
        assert_close(rho, 0.0, abs_=1e-8)

    def test_direct_evaluation(self):
        gamma_star, rho = derive_aggregates(InvestorParams(gamma_r=2.0, gamma_g=2.0))
        assert_close(gamma_star, 1.0, abs_=1e-15)
        assert rho == 0.5

    @pytest.mark.parametrize("gr,gg", [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0)])
    def test_nonpositive_risk_aversion_rejected(self, gr, gg):
        with pytest.raises(ParameterError):
            InvestorParams(gamma_r=gr, gamma_g=gg)


class TestGrowthFactor:
    def test_deterministic_exponential(self):
        p = ModelParams(sigma0=0.0, mu=0.05)
        assert_close(np.exp(log_growth_factor(p, 5.0, 0.0)), np.exp(0.25), rel=1e-12)

    def test_terminal_ratio_is_one(self, small_ensemble):
        # E(T,T) = 1 for every path
        assert np.all(small_ensemble.log_growth_tail[:, -1] == 0.0)
        assert np.all(small_ensemble.growth_tail[:, -1] == 1.0)

    def test_direct_evaluation(self):
        p = ModelParams(sigma0=0.1, mu=0.05)
        # sigma0*b1 + (mu - sigma0^2/2)*t = 0.1 + 0.045*5
        assert_close(log_growth_factor(p, 5.0, 1.0), 0.325, abs_=1e-15)

    def test_lognormal_mean(self):
        # E[E(0,t)] = exp(mu t): empirical check within 3 standard errors
        p = ModelParams(sigma0=0.1, mu=0.05, N=50_000, seed=5)
        from decarbmfg.paths import simulate_paths

        ens = simulate_paths(p)
        for k in (5, 10, 20):
            sample = np.exp(ens.log_growth[:, k])
            se = sample.std(ddof=1) / np.sqrt(p.N)
            assert abs(sample.mean() - np.exp(p.mu * ens.grid.t[k])) < 3 * se


class TestPenaltyFactor:
    def test_no_penalty_risk(self):
        p = ModelParams(gamma_pen=0.0)
        b2 = np.array([-2.0, 0.0, 3.0])
        assert np.all(penalty_inverse_factor(p, 5.0, b2) == 1.0)

    def test_direct_evaluation(self):
        p = ModelParams(gamma_pen=0.3)
        assert_close(penalty_inverse_factor(p, 5.0, 0.0), np.exp(0.225), rel=1e-12)

    def test_martingale_mean(self):
        # alpha is a unit-mean exponential martingale
        p = ModelParams(gamma_pen=0.3, N=50_000, seed=6)
        from decarbmfg.paths import simulate_paths

        ens = simulate_paths(p)
        for k in (1, 10, 20):
            alpha = 1.0 / ens.inv_penalty[:, k]
            se = alpha.std(ddof=1) / np.sqrt(p.N)
            assert abs(alpha.mean() - 1.0) < 3 * se


class TestGreenDensity:
    def test_no_measure_change(self):
        p = ModelParams(lam=0.0)
        assert green_density_logz(p, 1.7) == 0.0

    def test_direct_evaluation(self):
        p = ModelParams(lam=0.4, T=5.0)
        assert_close(green_density_logz(p, 0.0), -0.4, abs_=1e-15)

    def test_martingale_mean(self):
        p = ModelParams(lam=0.4, N=50_000, seed=7)
        from decarbmfg.paths import simulate_paths

        ens = simulate_paths(p)
        z = np.exp(ens.log_green)
        se = z.std(ddof=1) / np.sqrt(p.N)
        assert abs(z.mean() - 1.0) < 3 * se


class TestGrid:
    @pytest.mark.parametrize("T,n", [(5.0, 20), (1.0, 1), (2.5, 7), (0.25, 3)])
    def test_weights_sum_to_horizon(self, T, n):
        grid = make_grid(ModelParams(T=T, n=n))
        assert abs(grid.h * grid.w.sum() - T) <= 1e-12 * T
        assert grid.t[0] == 0.0
        assert_close(grid.t[-1], T, rel=1e-15)

    def test_endpoint_weights(self):
        grid = make_grid(ModelParams(n=5))
        assert grid.w[0] == 0.5 and grid.w[-1] == 0.5
        assert np.all(grid.w[1:-1] == 1.0)


class TestParamValidation:
    def test_jensen_violation(self):
        with pytest.raises(ParameterError, match="c2_bar"):
            ModelParams(c_bar=1.0, c2_bar=0.5)

    def test_rho_range(self):
        with pytest.raises(ParameterError, match="rho"):
            ModelParams(rho=1.5)

    def test_step_rule_offset(self):
        with pytest.raises(ParameterError, match=r"p >= 2"):
            ModelParams(p=1)

    def test_path_count(self):
        with pytest.raises(ParameterError, match=r"N >= 2"):
            ModelParams(N=1)

    def test_degenerate_values_allowed(self):
        # gamma_star = 0, c_bar = 0 and c2_bar = 0 are valid limiting cases
        ModelParams(gamma_star=0.0, c_bar=0.0, c2_bar=0.0)

    def test_digest_stable(self):
        assert ModelParams().digest() == ModelParams().digest()
        assert ModelParams().digest() != ModelParams(seed=1).digest()
