import json
import math

import numpy as np
import pytest
from numpy.testing import assert_array_equal

import egarchfit as eg


class TestForecast:
    def test_fixed_point_when_no_shocks(self):
        params = eg.ModelParams(0.2, 0.5, 0.0, 0.0)
        series = eg.SeriesSample(returns=np.zeros(200))
        value = eg.forecast(params, series)
        assert value == pytest.approx(math.exp(0.4), rel=1e-12)

    def test_tracks_latent_variance_at_truth(self, theta_star):
        sample = eg.simulate(theta_star, eg.InnovationSpec(), n=10_001, seed=60)
        train = eg.SeriesSample(returns=sample.returns[:10_000])
        value = eg.forecast(theta_star, train)
        truth = math.exp(sample.latent_log_var[10_000])
        assert abs(value - truth) < 1e-6

    def test_independent_of_initial_value(self, theta_star):
        sample = eg.simulate(theta_star, eg.InnovationSpec(), n=10_000, seed=61)
        mu = theta_star.uncond_mean_log_var()
        a = eg.forecast(theta_star, sample, g0=mu)
        b = eg.forecast(theta_star, sample, g0=mu + 5.0)
        assert abs(a - b) < 1e-8

    def test_accepts_fit_result(self, theta_star):
        sample = eg.simulate(theta_star, eg.InnovationSpec(), n=2000, seed=62)
        res = eg.fit(sample, theta0=theta_star)
        value = eg.forecast(res, sample)
        assert value > 0.0


class TestDomainMap:
    def test_small_grid_properties(self):
        grid = eg.domain_map((0.0, 0.6), (0.0, 1.2), grid_size=3,
                             beta_tolerance=1e-2, mc_paths=500, seed=70)
        # degenerate cell hits the upper bisection limit exactly
        assert grid.beta_max[0, 0] == 1.0 - 1e-2
        # delta < |gamma| cells are absent
        assert math.isnan(grid.beta_max[1, 0])
        assert math.isnan(grid.beta_max[2, 0])
        finite = grid.beta_max[np.isfinite(grid.beta_max)]
        assert ((finite >= 0.0) & (finite < 1.0)).all()

    def test_deterministic(self):
        a = eg.domain_map((0.0, 0.5), (0.0, 1.0), 3, beta_tolerance=2e-2, mc_paths=300, seed=71)
        b = eg.domain_map((0.0, 0.5), (0.0, 1.0), 3, beta_tolerance=2e-2, mc_paths=300, seed=71)
        assert_array_equal(a.beta_max, b.beta_max)

    def test_grid_size_validated(self):
        with pytest.raises(ValueError):
            eg.domain_map((0.0, 0.5), (0.0, 1.0), 1, mc_paths=300, seed=0)


class TestConsistencyStudy:
    def test_rejects_degenerate_theta(self):
        with pytest.raises(eg.IdentifiabilityError):
            eg.consistency_study(eg.ModelParams(0.1, 0.5, 0.0, 0.0), (200, 400), 2, seed=0)

    def test_rejects_two_point_innovations(self, theta_star):
        with pytest.raises(eg.IdentifiabilityError):
            eg.consistency_study(
                theta_star, (200, 400), 2, innov=eg.InnovationSpec("rademacher"), seed=0
            )

    def test_rejects_non_increasing_grid(self, theta_star):
        with pytest.raises(ValueError):
            eg.consistency_study(theta_star, (400, 400), 2, seed=0)

    def test_rejects_non_invertible_theta(self):
        chaos = eg.ModelParams(0.0, 0.2, 0.0, 6.0)
        with pytest.raises(ValueError):
            eg.consistency_study(chaos, (200, 400), 2, seed=0)

    def test_small_run_structure(self, theta_star):
        report = eg.consistency_study(theta_star, (300, 600), 4, seed=73, threads=1)
        assert report.n_grid == (300, 600)
        for n in (300, 600):
            stats = report.per_n[n]
            assert stats["n_used"] + stats["failures"] <= 4
            assert np.isfinite(stats["rmse"]).all()
            assert ((stats["coverage"] >= 0) & (stats["coverage"] <= 1)).all()
        assert len(report.rmse_decreasing) == 4
        payload = report.to_dict()
        json.dumps(payload)  # JSON-serializable
        assert payload["seeds"] == [73]

    def test_reproducible_across_thread_counts(self, theta_star):
        a = eg.consistency_study(theta_star, (300,), 4, seed=74, threads=1)
        b = eg.consistency_study(theta_star, (300,), 4, seed=74, threads=2)
        assert_array_equal(a.raw[300]["theta_hat"], b.raw[300]["theta_hat"])


class TestNormalityStudy:
    def test_single_replication_coverage_degenerate(self, theta_star):
        report = eg.normality_study(theta_star, 400, replications=1, seed=75)
        cov = report.per_n[400]["coverage"]
        assert set(np.unique(cov)).issubset({0.0, 1.0})

    def test_standardized_shape(self, theta_star):
        report = eg.normality_study(theta_star, 400, replications=3, seed=76)
        std = report.standardized(400)
        assert std.shape[1] == 4
        assert std.shape[0] <= 3

    def test_standardized_estimates_have_unit_scale(self, theta_star):
        # sample variance of (theta_hat - theta0)/se per coordinate near 1
        report = eg.normality_study(theta_star, 2000, replications=200, seed=206, threads=2)
        var = np.var(report.standardized(2000), axis=0, ddof=1)
        assert ((var >= 0.8) & (var <= 1.25)).all()

    def test_rejects_mm_violation(self):
        # invertible with margin but E[V^2] = 1.85 >= 1
        theta = eg.ModelParams(0.0, 0.1, -2.0, 2.0)
        rep = eg.check_inv_theoretical(theta, theta, mc_paths=2000, seed=1)
        assert rep.verdict == "invertible"
        with pytest.raises(ValueError, match="moment condition"):
            eg.normality_study(theta, 400, replications=2, seed=77)


class TestPopulationMM:
    def test_reference_value(self):
        params = eg.ModelParams(0.0, 0.9, 0.0, 0.1)
        value = eg.population_mm(params, eg.InnovationSpec())
        expected = 0.81 - 0.9 * 0.1 * math.sqrt(2 / math.pi) + 0.25 * 0.01
        assert value == pytest.approx(expected, abs=1e-15)
        assert value == pytest.approx(0.7407, abs=5e-5)

    def test_matches_monte_carlo_for_student(self):
        innov = eg.InnovationSpec("student", dof=7.0)
        params = eg.ModelParams(0.0, 0.6, -0.2, 0.5)
        rng = np.random.default_rng(78)
        z = innov.sample(rng, 2_000_000)
        v2 = (params.beta - 0.5 * (params.gamma * z + params.delta * np.abs(z))) ** 2
        assert eg.population_mm(params, innov) == pytest.approx(v2.mean(), abs=3e-3)
