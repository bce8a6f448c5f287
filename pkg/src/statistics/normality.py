import logging
import numpy as np
from dataclasses import dataclass, asdict
from typing import Any, Dict, Optional, Sequence
from scipy import stats
from scipy.ndimage import maximum_filter
from ..lattice.grid import TorusGrid
from ..errors import ParameterError
from .jackknife import moments_loo, jackknife_stderr, correlation, correlation_stderr

logger = logging.getLogger(__name__)

MIN_NORMALITY_SAMPLES = 200
# Standard deviation of the KS distance under the null, times sqrt(N).
KS_NULL_SPREAD = 0.26


@dataclass(frozen=True)
class NormalityReport:
    n_samples: int
    skewness: float
    skewness_stderr: float
    excess_kurtosis: float
    kurtosis_stderr: float
    ks_distance: float
    ks_stderr: float
    ks_pvalue: float

    def is_gaussian(self, n_stderr: float = 4.0) -> bool:
        return (abs(self.skewness) <= n_stderr * self.skewness_stderr
                and abs(self.excess_kurtosis) <= n_stderr * self.kurtosis_stderr)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class CorrelationEstimate:
    correlation: float
    stderr: float
    n_samples: int

    def is_independent(self, n_stderr: float = 4.0) -> bool:
        return abs(self.correlation) <= n_stderr * self.stderr


def normality_report(samples: Sequence[float]) -> NormalityReport:
    """
    Skewness and excess kurtosis with jackknife errors, and the KS distance
    to the normal law with the sample mean and standard deviation.
    """
    x = np.asarray(samples, dtype=float).ravel()
    n = x.size
    if n < MIN_NORMALITY_SAMPLES:
        raise ParameterError(f"Normality report needs at least {MIN_NORMALITY_SAMPLES} samples, got {n}")
    skew, kurt, skew_loo, kurt_loo = moments_loo(x)
    sd = float(np.std(x, ddof=1))
    if sd > 0:
        ks = stats.kstest(x, 'norm', args=(float(np.mean(x)), sd))
        ks_distance, ks_pvalue = float(ks.statistic), float(ks.pvalue)
    else:
        logger.warning("Normality report on a constant sample")
        ks_distance, ks_pvalue = 0.0, 1.0
    return NormalityReport(n, skew, float(jackknife_stderr(skew_loo)), kurt, float(jackknife_stderr(kurt_loo)),
                           ks_distance, KS_NULL_SPREAD / np.sqrt(n), ks_pvalue)


def gaussian_test_function(grid: TorusGrid, R: float, center: Optional[Sequence[int]] = None,
                           cutoff: Optional[float] = None, component: Optional[int] = None) -> np.ndarray:
    """
    R^(-d/2) exp(-|x - center|^2 / (2 R^2)), periodic distance, set to zero
    outside the sup-norm ball of radius `cutoff`.

    With `component` the bump sits in one component of a (d, L, ..., L) array.
    """
    if R <= 0:
        raise ParameterError(f"Bump scale must be positive, got {R}")
    center = np.asarray(center if center is not None else (0,) * grid.d).reshape((grid.d,) + (1,) * grid.d)
    z = (grid.coordinates() - center + grid.L // 2) % grid.L - grid.L // 2
    bump = np.exp(-np.sum(z * z, axis=0) / (2 * R ** 2)) / R ** (grid.d / 2)
    if cutoff is not None:
        bump = np.where(np.max(np.abs(z), axis=0) <= cutoff, bump, 0.0)
    if component is None:
        return bump
    out = np.zeros((grid.d,) + grid.shape)
    out[component] = bump
    return out


def functional_values(fields: Sequence, zeta: np.ndarray) -> np.ndarray:
    """sum_x zeta(x) . F(x) for every field; zeta matches the field value shape."""
    out = []
    for f in fields:
        values = getattr(f, 'Xi', f)
        values = getattr(values, 'values', values)
        if np.shape(zeta) != np.shape(values):
            raise ParameterError(f"Test function shape {np.shape(zeta)} != field shape {np.shape(values)}")
        out.append(float(np.sum(zeta * values)))
    return np.asarray(out)


def _support(zeta: np.ndarray) -> np.ndarray:
    """Spatial support; component-stacked arrays have a short leading axis."""
    zeta = np.asarray(zeta)
    if len(set(zeta.shape)) > 1:
        return np.any(zeta != 0, axis=0)
    return zeta != 0


def support_distance_ok(zeta: np.ndarray, zeta_prime: np.ndarray, separation: int) -> bool:
    """True if the supports are at sup-distance >= separation on the torus."""
    a, b = _support(zeta), _support(zeta_prime)
    if separation <= 1:
        return not np.any(a & b)
    grown = maximum_filter(a.astype(np.uint8), size=2 * separation - 1, mode='wrap').astype(bool)
    return not np.any(grown & b)


def value_correlation(x: Sequence[float], y: Sequence[float]) -> CorrelationEstimate:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.size < 3 or x.size != y.size:
        raise ParameterError(f"Correlation needs two equal samples of size >= 3, got {x.size} and {y.size}")
    r = correlation(x, y)
    return CorrelationEstimate(r, float(correlation_stderr(r, x.size)), int(x.size))


def functional_correlation(fields: Sequence, zeta: np.ndarray, zeta_prime: np.ndarray) -> CorrelationEstimate:
    """Correlation across samples of the two test integrals; supports may overlap."""
    return value_correlation(functional_values(fields, zeta), functional_values(fields, zeta_prime))


def independence_check(fields: Sequence, zeta: np.ndarray, zeta_prime: np.ndarray,
                       separation: int) -> CorrelationEstimate:
    """
    Raises:
        ParameterError: if the supports come closer than `separation` or N < 200.
    """
    if len(fields) < MIN_NORMALITY_SAMPLES:
        raise ParameterError(f"Independence check needs at least {MIN_NORMALITY_SAMPLES} samples, got {len(fields)}")
    if not support_distance_ok(zeta, zeta_prime, separation):
        raise ParameterError(f"Test function supports are closer than {separation}")
    return functional_correlation(fields, zeta, zeta_prime)
