"""System containers, metric factorization, noise specs, validation."""
from __future__ import annotations

import numpy as np
import pytest

from concert import (
    ContinuousSDESystem,
    DimensionMismatch,
    DiscreteMapSystem,
    GaussianNoiseSpec,
    HybridSystem,
    MetricSpec,
    NotPositiveDefinite,
    factor_metric,
    validate_system,
)


def random_spd(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    return a @ a.T + n * np.eye(n)


class TestFactorMetric:
    def test_reconstructs_matrix(self):
        for seed in range(5):
            m = random_spd(4, seed)
            theta = factor_metric(m)
            assert np.allclose(theta.T @ theta, m, rtol=1e-12, atol=1e-12)

    def test_factor_is_upper_triangular(self):
        theta = factor_metric(random_spd(5, 7))
        assert np.allclose(theta, np.triu(theta))

    def test_identity_factors_to_identity(self):
        assert np.allclose(factor_metric(np.eye(3)), np.eye(3))

    def test_rejects_indefinite(self):
        with pytest.raises(NotPositiveDefinite):
            factor_metric(np.diag([1.0, -1.0]))

    def test_rejects_semidefinite(self):
        with pytest.raises(NotPositiveDefinite):
            factor_metric(np.diag([1.0, 0.0]))

    def test_rejects_nonsquare(self):
        with pytest.raises(DimensionMismatch):
            factor_metric(np.ones((2, 3)))


class TestMetricSpec:
    def test_constant_value_and_factor(self):
        m = random_spd(3, 1)
        spec = MetricSpec.constant(m)
        assert spec.kind == "constant"
        assert spec.dimension == 3
        assert np.allclose(spec.value(), m)
        th = spec.factor()
        assert np.allclose(th.T @ th, m)
        # constant metric has zero derivative
        assert np.allclose(spec.factor_dot(), 0.0)

    def test_identity(self):
        spec = MetricSpec.identity(4)
        assert np.allclose(spec.value(), np.eye(4))
        assert np.allclose(spec.factor(), np.eye(4))

    def test_scheduled_takes_time_and_side(self):
        spec = MetricSpec.scheduled(
            lambda t, side: np.eye(2) * ((1.0 + t) if side == "post" else 2.0 * (1.0 + t)),
            dimension=2, uniform_lower_bound=1.0)
        assert np.allclose(spec.value(0.0), np.eye(2))
        assert np.allclose(spec.value(3.0), 4.0 * np.eye(2))
        assert np.allclose(spec.value(3.0, side="pre"), 8.0 * np.eye(2))
        th = spec.factor(3.0)
        assert np.allclose(th.T @ th, 4.0 * np.eye(2))

    def test_scheduled_factor_dot_defaults_to_zero(self):
        spec = MetricSpec.scheduled(
            lambda t, side: np.eye(2) * (1.0 + t) ** 2,
            dimension=2, uniform_lower_bound=1.0)
        assert np.allclose(spec.factor_dot(1.0), 0.0)

    def test_scheduled_factor_dot_explicit_override(self):
        spec = MetricSpec.scheduled(
            lambda t, side: np.eye(2), dimension=2, uniform_lower_bound=1.0,
            factor_dot_fn=lambda t: 7.0 * np.eye(2))
        assert np.allclose(spec.factor_dot(0.0), 7.0 * np.eye(2))

    def test_scheduled_fails_fast_on_malformed_schedule(self):
        with pytest.raises(DimensionMismatch):
            MetricSpec.scheduled(
                lambda t, side: np.eye(3), dimension=2, uniform_lower_bound=1.0)

    def test_scheduled_requires_positive_lower_bound(self):
        with pytest.raises(NotPositiveDefinite):
            MetricSpec.scheduled(
                lambda t, side: np.eye(2), dimension=2, uniform_lower_bound=0.0)

    def test_side_validation(self):
        spec = MetricSpec.identity(2)
        spec.value(0.0, side="pre")
        spec.value(0.0, side="post")
        with pytest.raises(ValueError):
            spec.value(0.0, side="middle")

    def test_constant_rejects_indefinite(self):
        with pytest.raises(NotPositiveDefinite):
            MetricSpec.constant(np.diag([1.0, -2.0]))


class TestGaussianNoiseSpec:
    def test_default_is_standard_normal(self):
        spec = GaussianNoiseSpec(3)
        assert np.allclose(spec.covariance, np.eye(3))
        rng = np.random.default_rng(0)
        z = spec.sample(rng)
        assert z.shape == (3,)

    def test_batch_sample_shape(self):
        spec = GaussianNoiseSpec(2)
        rng = np.random.default_rng(0)
        z = spec.sample(rng, size=5)
        assert z.shape == (5, 2)

    def test_covariance_is_respected(self):
        cov = np.array([[4.0, 0.0], [0.0, 1.0]])
        spec = GaussianNoiseSpec(2, covariance=cov)
        rng = np.random.default_rng(1)
        z = spec.sample(rng, size=200_000)
        emp = z.T @ z / len(z)
        assert np.allclose(emp, cov, atol=0.05)

    def test_rank_deficient_covariance_accepted(self):
        cov = np.array([[1.0, 1.0], [1.0, 1.0]])
        spec = GaussianNoiseSpec(2, covariance=cov)
        rng = np.random.default_rng(2)
        z = spec.sample(rng, size=100)
        # all mass on the diagonal direction
        assert np.allclose(z[:, 0], z[:, 1], atol=1e-12)

    def test_rejects_mismatched_covariance(self):
        with pytest.raises(DimensionMismatch):
            GaussianNoiseSpec(3, covariance=np.eye(2))

    def test_rejects_indefinite_covariance(self):
        with pytest.raises(NotPositiveDefinite):
            GaussianNoiseSpec(2, covariance=np.diag([1.0, -1.0]))


def make_discrete(dim=2, rho=0.5):
    return DiscreteMapSystem(
        dimension=dim,
        map=lambda x, k: rho * np.asarray(x, dtype=float),
        noise_gain=lambda x, k: np.eye(dim),
        noise=GaussianNoiseSpec(dim))


def make_continuous(dim=2, a=1.0):
    return ContinuousSDESystem(
        dimension=dim,
        drift=lambda x, t: -a * np.asarray(x, dtype=float),
        diffusion=lambda x, t: np.eye(dim),
        noise_dim=dim)


class TestValidateSystem:
    def test_ok_discrete(self):
        report = validate_system(make_discrete())
        assert report.ok
        assert report.violations == ()

    def test_ok_continuous(self):
        assert validate_system(make_continuous()).ok

    def test_ok_hybrid(self):
        hybrid = HybridSystem(
            continuous=make_continuous(),
            reset=make_discrete(),
            dwell_time=0.5)
        assert validate_system(hybrid).ok

    def test_bad_map_shape_reported_not_raised(self):
        bad = DiscreteMapSystem(
            dimension=2,
            map=lambda x, k: np.zeros(3),
            noise_gain=lambda x, k: np.eye(2),
            noise=GaussianNoiseSpec(2))
        report = validate_system(bad)
        assert not report.ok
        assert any("map" in v for v in report.violations)

    def test_map_exception_reported_not_raised(self):
        bad = DiscreteMapSystem(
            dimension=2,
            map=lambda x, k: (_ for _ in ()).throw(RuntimeError("boom")),
            noise_gain=lambda x, k: np.eye(2),
            noise=GaussianNoiseSpec(2))
        report = validate_system(bad)
        assert not report.ok

    def test_bad_diffusion_shape_reported(self):
        bad = ContinuousSDESystem(
            dimension=2,
            drift=lambda x, t: -np.asarray(x, dtype=float),
            diffusion=lambda x, t: np.eye(3),
            noise_dim=2)
        report = validate_system(bad)
        assert not report.ok
        assert any("diffusion" in v for v in report.violations)

    def test_hybrid_dimension_mismatch_reported(self):
        hybrid = HybridSystem(
            continuous=make_continuous(dim=2),
            reset=make_discrete(dim=3),
            dwell_time=0.5)
        report = validate_system(hybrid)
        assert not report.ok

    def test_hybrid_nonpositive_dwell_reported(self):
        hybrid = HybridSystem(
            continuous=make_continuous(),
            reset=make_discrete(),
            dwell_time=0.0)
        report = validate_system(hybrid)
        assert not report.ok
        assert any("dwell" in v for v in report.violations)

    def test_unknown_type_reported(self):
        report = validate_system(object())
        assert not report.ok
