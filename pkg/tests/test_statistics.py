import numpy as np
import pytest
from src.lattice.grid import TorusGrid, ScalarField, VectorField
from src.statistics.jackknife import variance_loo, moments_loo, covariance_loo, jackknife_stderr
from src.statistics.regression import linear_fit, rate_fit
from src.statistics.clt import clt_profile, clt_profile_from_values, origin_values, mollified_origin_values, check_scales
from src.statistics.normality import (
    normality_report,
    gaussian_test_function,
    support_distance_ok,
    independence_check,
    value_correlation,
)
from src.statistics.covariance import covariance_Q, covariance_Q_from_means, covariance_Q_windowed
from src.parabolic.commutator import CommutatorField
from src.errors import ParameterError


def test_variance_replicates_match_direct(rng):
    x = rng.normal(size=40)
    full, loo = variance_loo(x)
    assert np.isclose(full, np.var(x, ddof=1))
    direct = np.array([np.var(np.delete(x, i), ddof=1) for i in range(x.size)])
    assert np.allclose(loo, direct, atol=1e-12)


def test_covariance_replicates_match_direct(rng):
    X = rng.normal(size=(20, 3))
    full, loo = covariance_loo(X)
    assert np.allclose(full, np.cov(X, rowvar=False))
    assert np.allclose(loo[5], np.cov(np.delete(X, 5, axis=0), rowvar=False), atol=1e-12)


def test_jackknife_of_mean_is_standard_error(rng):
    x = rng.normal(size=50)
    replicates = np.array([np.delete(x, i).mean() for i in range(x.size)])
    assert np.isclose(jackknife_stderr(replicates), x.std(ddof=1) / np.sqrt(x.size))


def test_moments_of_uniform(rng):
    skew, kurt, skew_loo, kurt_loo = moments_loo(rng.uniform(size=50000))
    assert abs(skew) < 0.05
    assert abs(kurt + 1.2) < 0.05
    assert skew_loo.shape == (50000,)


def test_rate_fit_recovers_power_law():
    xs = np.array([2.0, 4.0, 8.0, 16.0, 32.0])
    fit = rate_fit(xs, 3.0 * xs ** -0.75)
    assert abs(fit.slope + 0.75) < 1e-12
    assert abs(fit.r_squared - 1.0) < 1e-12
    assert fit.within(-0.7, 0.1)


def test_fit_argument_checks():
    with pytest.raises(ParameterError):
        rate_fit([1, 2, 3], [1, 2, 3])
    with pytest.raises(ParameterError):
        rate_fit([1, 2, 3, 4], [1, 0, 3, 4])
    with pytest.raises(ParameterError):
        linear_fit([1, 1, 1, 1], [1, 2, 3, 4])
    assert linear_fit([1, 2, 3, 4], [5, 5, 5, 5]).r_squared == 1.0


def test_white_noise_clt_scaling(rng):
    grid = TorusGrid(2, 64)
    samples = [ScalarField(grid, rng.normal(size=grid.shape)) for _ in range(200)]
    profile = clt_profile(samples, [1.0, 2.0, 4.0, 8.0])
    assert not profile.degenerate
    assert abs(profile.fit().slope + 1.0) < 0.15
    assert all(e > 0 for e in profile.stderr)


def test_origin_values_agree_with_mollified_fields(rng):
    grid = TorusGrid(2, 32)
    q = VectorField(grid, rng.normal(size=(2,) + grid.shape))
    assert np.allclose(origin_values(q.values, grid, [1.0, 4.0]), mollified_origin_values(q, [1.0, 4.0]))


def test_constant_fields_are_degenerate():
    grid = TorusGrid(2, 16)
    samples = [ScalarField(grid, np.ones(grid.shape)) for _ in range(30)]
    assert clt_profile(samples, [1.0, 2.0]).degenerate
    with pytest.raises(ParameterError):
        clt_profile(samples[:10], [1.0, 2.0])
    with pytest.raises(ParameterError):
        check_scales([4.0], 16)
    with pytest.raises(ParameterError):
        clt_profile_from_values(np.zeros((29, 2, 1)), [1.0, 2.0])


def test_normality_report(rng):
    gaussian = normality_report(rng.normal(size=5000))
    assert gaussian.is_gaussian()
    assert gaussian.ks_distance < 5 * gaussian.ks_stderr
    skewed = normality_report(rng.exponential(size=5000))
    assert not skewed.is_gaussian()
    with pytest.raises(ParameterError):
        normality_report(rng.normal(size=100))


def test_gaussian_test_function(grid16):
    bump = gaussian_test_function(grid16, 2.0, center=(3, 3), cutoff=4)
    assert bump[3, 3] == pytest.approx(0.5)
    assert bump[3, 8] == 0.0
    assert bump[3, 7] > 0.0
    stacked = gaussian_test_function(grid16, 2.0, component=1)
    assert stacked.shape == (2, 16, 16) and np.all(stacked[0] == 0)
    with pytest.raises(ParameterError):
        gaussian_test_function(grid16, 0.0)


def test_support_distance(grid16):
    left = gaussian_test_function(grid16, 1.0, center=(0, 0), cutoff=2)
    right = gaussian_test_function(grid16, 1.0, center=(8, 0), cutoff=2)
    assert support_distance_ok(left, right, 4)
    assert not support_distance_ok(left, right, 5)


def test_independence_check(grid16, rng):
    fields = [rng.normal(size=grid16.shape) for _ in range(400)]
    left = gaussian_test_function(grid16, 1.0, center=(0, 0), cutoff=2)
    right = gaussian_test_function(grid16, 1.0, center=(8, 0), cutoff=2)
    assert independence_check(fields, left, right, 4).is_independent()
    with pytest.raises(ParameterError):
        independence_check(fields, left, left, 1)
    with pytest.raises(ParameterError):
        independence_check(fields[:100], left, right, 4)


def test_correlated_values_are_detected(rng):
    x = rng.normal(size=500)
    estimate = value_correlation(x, x + 0.1 * rng.normal(size=500))
    assert not estimate.is_independent()
    assert estimate.correlation > 0.9


def test_covariance_from_means(rng):
    grid = TorusGrid(2, 16)
    sigma = 0.3
    means = rng.normal(scale=sigma / 16, size=(2000, 2))
    est = covariance_Q_from_means(means, grid)
    assert np.allclose(np.diag(est.Q_hat), sigma ** 2, atol=4 * np.max(est.stderr))
    assert est.is_psd()
    with pytest.raises(ParameterError):
        covariance_Q_from_means(means[:50], grid)


def test_covariance_q_degenerate_ensemble():
    grid = TorusGrid(2, 8)
    samples = [CommutatorField(4.0, 0, VectorField.zeros(grid), 0.5 * np.eye(2)) for _ in range(120)]
    est = covariance_Q(samples, grid)
    assert np.all(est.Q_hat == 0)
    assert est.t == 4.0
    assert est.n_samples == 120


def test_covariance_q_white_noise(rng):
    grid = TorusGrid(2, 8)
    C = np.array([[1.0, 0.3], [0.3, 0.5]])
    chol = np.linalg.cholesky(C)
    samples = [VectorField(grid, np.einsum('ij,j...->i...', chol, rng.normal(size=(2,) + grid.shape)))
               for _ in range(400)]
    est = covariance_Q(samples, grid, t=2.0)
    assert np.all(np.abs(est.Q_hat - C) <= 4 * est.stderr)
    assert est.t == 2.0
    assert est.is_psd()

    means = np.stack([s.values.reshape(2, -1).mean(axis=1) for s in samples])
    assert np.allclose(est.Q_hat, covariance_Q_from_means(means, grid).Q_hat)
    with pytest.raises(ParameterError):
        covariance_Q(samples[:10], grid)


def test_windowed_covariance_of_white_noise(rng):
    grid = TorusGrid(2, 16)
    samples = [VectorField(grid, rng.normal(size=(2,) + grid.shape)) for _ in range(50)]
    est = covariance_Q_windowed(samples, grid, 1.0)
    assert np.allclose(est.Q_hat, np.eye(2), atol=0.1)
    with pytest.raises(ParameterError):
        covariance_Q_windowed(samples, grid, 9.0)
