import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

import egarchfit as eg
from egarchfit.model import SQRT_2_OVER_PI

from conftest import random_admissible


class TestModelParams:
    def test_stationary_flag(self):
        assert eg.ModelParams(0, 0.999, 0, 0).stationary()
        assert eg.ModelParams(0, -0.999, 0, 0).stationary()
        assert not eg.ModelParams(0, 1.0, 0, 0).stationary()
        assert not eg.ModelParams(0, -1.0, 0, 0).stationary()

    def test_admissible_flag(self):
        assert eg.ModelParams(0, 0, -0.1, 0.1).filter_admissible()
        assert eg.ModelParams(0, 0, 0.2, 0.3).filter_admissible()
        assert not eg.ModelParams(0, 0, 0.3, 0.2).filter_admissible()

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            eg.ModelParams(math.nan, 0.5, 0, 0.1)
        with pytest.raises(ValueError):
            eg.ModelParams(0, math.inf, 0, 0.1)

    def test_dict_round_trip(self):
        p = eg.ModelParams(0.1, -0.2, 0.3, 0.4)
        assert eg.ModelParams.from_dict(p.to_dict()) == p


class TestInnovationSpec:
    def test_student_needs_dof_above_4(self):
        with pytest.raises(ValueError):
            eg.InnovationSpec("student", dof=4.0)
        with pytest.raises(ValueError):
            eg.InnovationSpec("student")
        eg.InnovationSpec("student", dof=4.5)

    def test_dof_only_for_student(self):
        with pytest.raises(ValueError):
            eg.InnovationSpec("normal", dof=5.0)

    @pytest.mark.parametrize(
        "spec",
        [
            eg.InnovationSpec("normal"),
            eg.InnovationSpec("student", dof=6.0),
            eg.InnovationSpec("rademacher"),
        ],
    )
    def test_centered_and_normalized(self, spec):
        rng = np.random.default_rng(1)
        z = spec.sample(rng, 400_000)
        assert abs(z.mean()) < 4.0 / math.sqrt(z.size)
        assert abs(z.var() - 1.0) < 0.02

    def test_fourth_moment_matches_sample(self):
        rng = np.random.default_rng(2)
        spec = eg.InnovationSpec("student", dof=8.0)
        z = spec.sample(rng, 2_000_000)
        assert abs(np.mean(z**4) - spec.fourth_moment()) < 0.05
        assert eg.InnovationSpec("normal").fourth_moment() == 3.0
        assert eg.InnovationSpec("rademacher").fourth_moment() == 1.0

    def test_abs_mean_matches_sample(self):
        rng = np.random.default_rng(3)
        spec = eg.InnovationSpec("student", dof=6.0)
        z = spec.sample(rng, 1_000_000)
        assert abs(np.mean(np.abs(z)) - spec.abs_mean()) < 2e-3
        assert eg.InnovationSpec("rademacher").abs_mean() == 1.0

    def test_rademacher_values(self):
        rng = np.random.default_rng(4)
        z = eg.InnovationSpec("rademacher").sample(rng, 1000)
        assert set(np.unique(z)) == {-1.0, 1.0}
        assert not eg.InnovationSpec("rademacher").identifiable()


class TestSimulate:
    def test_all_zero_params(self):
        sample = eg.simulate(eg.ModelParams(0, 0, 0, 0), eg.InnovationSpec(), n=500, seed=5)
        assert_array_equal(sample.latent_log_var, np.zeros(500))
        assert_array_equal(sample.returns, sample.innovations)

    def test_noise_free_fixed_point(self):
        params = eg.ModelParams(0.2, 0.5, 0.0, 0.0)
        sample = eg.simulate(params, eg.InnovationSpec(), n=200, burn_in=0, seed=6)
        assert_allclose(sample.latent_log_var, 0.4, rtol=0, atol=1e-14)

    def test_gaussian_log_var_mean(self):
        # E[log sigma^2] = delta * E|Z| / (1 - beta); AR(1) correction on the s.e.
        params = eg.ModelParams(0.0, 0.5, -0.1, 0.3)
        sample = eg.simulate(params, eg.InnovationSpec(), n=100_000, seed=7)
        expected = 0.3 * SQRT_2_OVER_PI / 0.5
        sd = sample.latent_log_var.std()
        se = sd * math.sqrt((1 + 0.5) / (1 - 0.5)) / math.sqrt(100_000)
        assert abs(sample.latent_log_var.mean() - expected) < 3 * se

    def test_multiplicative_structure(self):
        sample = eg.simulate(
            eg.ModelParams(0.0, 0.6, -0.2, 0.4), eg.InnovationSpec(), n=200_000, seed=8
        )
        sigma2 = np.exp(sample.latent_log_var)
        ratio = np.mean(sample.returns**2) / np.mean(sigma2)
        assert abs(ratio - 1.0) < 0.02

    def test_deterministic_bit_for_bit(self):
        a = eg.simulate(eg.ModelParams(0, 0.5, -0.1, 0.3), eg.InnovationSpec(), n=1000, seed=9)
        b = eg.simulate(eg.ModelParams(0, 0.5, -0.1, 0.3), eg.InnovationSpec(), n=1000, seed=9)
        assert_array_equal(a.returns, b.returns)
        assert_array_equal(a.latent_log_var, b.latent_log_var)
        assert_array_equal(a.innovations, b.innovations)

    def test_non_stationary_rejected(self):
        with pytest.raises(eg.NonStationaryError):
            eg.simulate(eg.ModelParams(0, 1.0, 0, 0.1), eg.InnovationSpec(), n=10, seed=0)

    def test_overflow_guard(self):
        # unconditional mean 8/0.01 = 800 > 700
        with pytest.raises(eg.OverflowGuardError):
            eg.simulate(eg.ModelParams(8.0, 0.99, 0, 0.1), eg.InnovationSpec(), n=10, seed=0)

    def test_argument_validation(self):
        with pytest.raises(ValueError):
            eg.simulate(eg.ModelParams(0, 0.5, 0, 0.1), eg.InnovationSpec(), n=0, seed=0)
        with pytest.raises(ValueError):
            eg.simulate(eg.ModelParams(0, 0.5, 0, 0.1), eg.InnovationSpec(), n=10, burn_in=-1, seed=0)


class TestMaInfinity:
    def test_single_lag_collapse_at_beta_zero(self):
        params = eg.ModelParams(0.3, 0.0, -0.2, 0.5)
        z = np.array([1.0, -2.0, 0.5, 3.0])
        out = eg.ma_infinity_log_var(params, z, truncation=1)
        expected = 0.3 + (-0.2) * z[:-1] + 0.5 * np.abs(z[:-1])
        assert_allclose(out, expected, rtol=0, atol=0)

    def test_deterministic_case(self):
        params = eg.ModelParams(0.2, 0.5, 0.0, 0.0)
        z = np.random.default_rng(10).standard_normal(50)
        out = eg.ma_infinity_log_var(params, z, truncation=10)
        assert_allclose(out, 0.4, rtol=0, atol=1e-15)

    def test_matches_simulation_with_long_truncation(self):
        params = eg.ModelParams(0.1, 0.5, -0.1, 0.3)
        sample = eg.simulate(params, eg.InnovationSpec(), n=2000, burn_in=1000, seed=11)
        out = eg.ma_infinity_log_var(params, sample.innovations, truncation=1000)
        assert np.max(np.abs(out - sample.latent_log_var[1000:])) < 1e-10

    def test_truncation_bound_over_random_params(self):
        # burn_in=0 makes the kept innovations the whole driving sequence, so
        # the geometric tail bound is exact with the observed max shock
        rng = np.random.default_rng(12)
        for _ in range(100):
            params = random_admissible(rng, beta_low=-0.95, beta_high=0.95)
            trunc = int(rng.integers(1, 40))
            n = int(rng.integers(trunc + 5, 200))
            sample = eg.simulate(params, eg.InnovationSpec(), n=n, burn_in=0, seed=rng)
            out = eg.ma_infinity_log_var(params, sample.innovations, truncation=trunc)
            w = params.gamma * sample.innovations + params.delta * np.abs(sample.innovations)
            bound = abs(params.beta) ** trunc * np.max(np.abs(w)) / (1 - abs(params.beta))
            err = np.max(np.abs(out - sample.latent_log_var[trunc:]))
            assert err <= bound + 1e-12

    def test_needs_enough_innovations(self):
        with pytest.raises(ValueError):
            eg.ma_infinity_log_var(eg.ModelParams(0, 0.5, 0, 0.1), np.ones(5), truncation=5)

    def test_non_stationary_rejected(self):
        with pytest.raises(eg.NonStationaryError):
            eg.ma_infinity_log_var(eg.ModelParams(0, 1.2, 0, 0.1), np.ones(10), truncation=2)


class TestSeriesSample:
    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            eg.SeriesSample(returns=np.ones(5), latent_log_var=np.ones(4))

    def test_non_finite_rejected(self):
        with pytest.raises(eg.NonFiniteValueError):
            eg.SeriesSample(returns=np.array([1.0, math.nan]))

    def test_has_latent(self, sample_star):
        assert sample_star.has_latent
        assert not eg.SeriesSample(returns=np.ones(3)).has_latent
