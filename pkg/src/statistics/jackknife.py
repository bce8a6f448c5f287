"""
Leave-one-out estimators from power sums.

Each function returns the full-sample estimate together with the n
leave-one-out replicates; jackknife_stderr turns replicates into an error bar.
Data are centered first so the power sums do not cancel catastrophically.
"""
import numpy as np
from typing import Tuple
from ..errors import ParameterError


def jackknife_stderr(replicates: np.ndarray) -> np.ndarray:
    """sqrt((n - 1)/n * sum (theta_i - mean theta)^2) along axis 0."""
    replicates = np.asarray(replicates, dtype=float)
    n = replicates.shape[0]
    if n < 2:
        raise ParameterError("Jackknife needs at least two samples")
    dev = replicates - replicates.mean(axis=0)
    return np.sqrt((n - 1) / n * np.sum(dev * dev, axis=0))


def _centered(x: np.ndarray, min_n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[0] < min_n:
        raise ParameterError(f"Need at least {min_n} samples, got {x.shape[0]}")
    return x - x.mean(axis=0)


def variance_loo(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Unbiased variance along axis 0 and its leave-one-out replicates."""
    x = _centered(x, 3)
    n = x.shape[0]
    s1 = x.sum(axis=0)
    s2 = np.sum(x * x, axis=0)
    full = s2 / (n - 1)
    loo_s1 = s1 - x
    loo_s2 = s2 - x * x
    loo = (loo_s2 - loo_s1 * loo_s1 / (n - 1)) / (n - 2)
    return full, np.maximum(loo, 0.0)


def _moments(s1, s2, s3, s4, m):
    mu = s1 / m
    m2 = s2 / m - mu ** 2
    m3 = s3 / m - 3 * mu * s2 / m + 2 * mu ** 3
    m4 = s4 / m - 4 * mu * s3 / m + 6 * mu ** 2 * s2 / m - 3 * mu ** 4
    with np.errstate(divide='ignore', invalid='ignore'):
        skew = np.where(m2 > 0, m3 / np.power(np.maximum(m2, 1e-300), 1.5), 0.0)
        kurt = np.where(m2 > 0, m4 / np.maximum(m2, 1e-300) ** 2 - 3.0, 0.0)
    return skew, kurt


def moments_loo(x: np.ndarray):
    """
    Biased sample skewness g1 and excess kurtosis g2 of a 1-d sample.

    Returns:
        (skew, excess_kurtosis, skew_replicates, kurtosis_replicates)
    """
    x = _centered(np.ravel(x), 4)
    n = x.size
    s = [np.sum(x ** k) for k in (1, 2, 3, 4)]
    skew, kurt = _moments(*s, n)
    loo = [s[k - 1] - x ** k for k in (1, 2, 3, 4)]
    skew_loo, kurt_loo = _moments(*loo, n - 1)
    return float(skew), float(kurt), skew_loo, kurt_loo


def covariance_loo(X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Unbiased covariance matrix of the rows of X (n, k) and its (n, k, k) replicates."""
    X = _centered(X, 3)
    n = X.shape[0]
    s1 = X.sum(axis=0)
    s2 = X.T @ X
    full = s2 / (n - 1)
    loo_s1 = s1[np.newaxis, :] - X
    loo_s2 = s2[np.newaxis, :, :] - X[:, :, np.newaxis] * X[:, np.newaxis, :]
    loo = (loo_s2 - loo_s1[:, :, np.newaxis] * loo_s1[:, np.newaxis, :] / (n - 1)) / (n - 2)
    return full, loo


def correlation(x: np.ndarray, y: np.ndarray) -> float:
    x = np.asarray(x, dtype=float) - np.mean(x)
    y = np.asarray(y, dtype=float) - np.mean(y)
    denom = np.sqrt(np.sum(x * x) * np.sum(y * y))
    return float(np.sum(x * y) / denom) if denom > 0 else 0.0


def correlation_stderr(r: float, n: int) -> float:
    return (1.0 - min(r * r, 1.0)) / np.sqrt(n - 1)
