import numpy as np
import pytest
from scipy import stats

from decarbmfg.errors import ResourceError, UsageError
from decarbmfg.model import ModelParams
from decarbmfg.paths import antithetic_extend, load_ensemble, save_ensemble, simulate_paths


class TestDeterminism:
    def test_same_seed_bitwise_identical(self, small_params):
        a = simulate_paths(small_params)
        b = simulate_paths(small_params)
        for name in ("eps1", "eps2", "b1", "b2", "log_growth", "log_growth_tail",
                     "inv_penalty", "log_green"):
            assert np.array_equal(getattr(a, name), getattr(b, name)), name

    def test_different_seed_differs(self, small_params, small_ensemble):
        other = simulate_paths(small_params.replace(seed=small_params.seed + 1))
        assert not np.array_equal(other.eps1, small_ensemble.eps1)


class TestInvariants:
    def test_brownian_from_increments(self, small_ensemble):
        ens = small_ensemble
        sqrt_h = np.sqrt(ens.grid.h)
        for k in range(ens.grid.n + 1):
            np.testing.assert_allclose(ens.b1[:, k], sqrt_h * ens.eps1[:, :k].sum(axis=1),
                                       rtol=0, atol=1e-12)
        assert np.all(ens.b1[:, 0] == 0.0) and np.all(ens.b2[:, 0] == 0.0)

    def test_boundary_columns(self, small_ensemble):
        ens = small_ensemble
        assert np.all(ens.log_growth[:, 0] == 0.0)
        assert np.all(ens.log_growth_tail[:, -1] == 0.0)
        assert np.all(ens.inv_penalty[:, 0] == 1.0)

    def test_single_step_bridge(self):
        p = ModelParams(T=3.0, n=1, N=100, seed=3)
        ens = simulate_paths(p)
        np.testing.assert_allclose(ens.b1[:, 1], np.sqrt(3.0) * ens.eps1[:, 0], rtol=1e-15)

    def test_growth_consistency(self, small_ensemble):
        # E(0,t_k) * E(t_k,T) = E(0,T) for all paths and indices
        ens = small_ensemble
        total = np.exp(ens.log_growth + ens.log_growth_tail)
        expected = np.broadcast_to(np.exp(ens.log_growth[:, -1:]), total.shape)
        np.testing.assert_allclose(total, expected, rtol=1e-10)

    def test_lognormal_terminal_mean(self):
        p = ModelParams(sigma0=0.1, mu=0.05, T=5.0, N=50_000, seed=9)
        ens = simulate_paths(p)
        sample = np.exp(ens.log_growth[:, -1])
        se = sample.std(ddof=1) / np.sqrt(p.N)
        assert abs(sample.mean() - np.exp(0.25)) < 3 * se

    def test_increments_gaussian_ks(self):
        # pooled KS statistic below the 1% critical value at fixed seed
        p = ModelParams(N=10_000, n=10, seed=2024)
        ens = simulate_paths(p)
        pooled = ens.eps1.ravel()
        assert pooled.size >= 10**5
        d = stats.kstest(pooled, "norm").statistic
        critical = 1.628 / np.sqrt(pooled.size)
        assert d < critical


class TestAntithetic:
    def test_pairwise_cancellation(self, small_ensemble):
        ext = antithetic_extend(small_ensemble)
        n = small_ensemble.n_paths
        assert ext.n_paths == 2 * n
        # negated increments reproduce exactly negated Brownian values, so
        # each antithetic pair sums to exactly zero
        assert np.array_equal(ext.b2[n:], -ext.b2[:n])
        assert np.array_equal(ext.b1[n:], -ext.b1[:n])
        assert np.all(ext.b2[n:] + ext.b2[:n] == 0.0)

    def test_invariants_hold_on_extension(self, small_ensemble):
        ext = antithetic_extend(small_ensemble)
        assert np.all(ext.log_growth_tail[:, -1] == 0.0)
        assert np.all(ext.inv_penalty[:, 0] == 1.0)
        total = np.exp(ext.log_growth + ext.log_growth_tail)
        expected = np.broadcast_to(np.exp(ext.log_growth[:, -1:]), total.shape)
        np.testing.assert_allclose(total, expected, rtol=1e-10)

    def test_double_extension_rejected(self, small_ensemble):
        ext = antithetic_extend(small_ensemble)
        with pytest.raises(UsageError):
            antithetic_extend(ext)

    def test_green_density_variance_reduction(self):
        # |mean Z - 1| smaller with antithetic pairs in at least 8 of 10 seeds
        p0 = ModelParams(lam=0.1, T=5.0, N=2000, n=4)
        wins = 0
        for seed in range(100, 110):
            ens = simulate_paths(p0.replace(seed=seed))
            ext = antithetic_extend(ens)
            err_base = abs(np.exp(ens.log_green).mean() - 1.0)
            err_anti = abs(np.exp(ext.log_green).mean() - 1.0)
            wins += err_anti < err_base
        assert wins >= 8


class TestStorage:
    def test_dump_load_roundtrip(self, tmp_path, small_ensemble):
        f = tmp_path / "ens.npz"
        save_ensemble(small_ensemble, f)
        back = load_ensemble(f)
        assert back.params == small_ensemble.params
        for name in ("eps1", "eps2", "b1", "log_growth_tail", "inv_penalty", "log_green"):
            assert np.array_equal(getattr(back, name), getattr(small_ensemble, name)), name

    def test_resource_budget(self):
        with pytest.raises(ResourceError) as exc:
            simulate_paths(ModelParams(N=10_000, n=20), max_bytes=1000)
        assert exc.value.required_bytes > 1000
        assert "bytes" in str(exc.value)
