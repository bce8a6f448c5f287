"""
Estimators of the commutator covariance Q.

The integrated two-point function of a stationary field X on the torus is
L^d times the covariance of its spatial average, which is what covariance_Q
computes. covariance_Q_windowed weights the empirical two-point function by
exp(-|z/R|^2) instead.
"""
import logging
import numpy as np
from dataclasses import dataclass
from typing import Optional, Sequence, Union
from ..lattice.grid import TorusGrid, VectorField
from ..lattice.spectral import forward_transform, inverse_transform
from ..errors import ParameterError
from .jackknife import covariance_loo, jackknife_stderr

logger = logging.getLogger(__name__)

MIN_Q_SAMPLES = 100


@dataclass
class CovarianceEstimate:
    Q_hat: np.ndarray
    stderr: np.ndarray
    t: Optional[float]
    n_samples: int

    def smallest_eigenvalue(self) -> float:
        sym = 0.5 * (self.Q_hat + self.Q_hat.T)
        return float(np.linalg.eigvalsh(sym).min())

    def is_psd(self, n_stderr: float = 4.0) -> bool:
        return self.smallest_eigenvalue() >= -n_stderr * float(np.max(self.stderr))


def _xi_values(sample) -> np.ndarray:
    values = getattr(sample, 'Xi', sample)
    return values.values if isinstance(values, VectorField) else np.asarray(values, dtype=float)


def covariance_Q_from_means(means: np.ndarray, grid: TorusGrid, t: Optional[float] = None) -> CovarianceEstimate:
    """Q_hat = L^d * Cov(per-sample spatial means), rows of `means` are samples."""
    means = np.asarray(means, dtype=float)
    n = means.shape[0]
    if n < MIN_Q_SAMPLES:
        raise ParameterError(f"Covariance estimate needs at least {MIN_Q_SAMPLES} samples, got {n}")
    full, loo = covariance_loo(means)
    scale = float(grid.n_sites)
    return CovarianceEstimate(scale * full, scale * jackknife_stderr(loo), t, n)


def covariance_Q(commutator_samples: Sequence, grid: TorusGrid, t: Optional[float] = None) -> CovarianceEstimate:
    """Accepts CommutatorField or VectorField samples."""
    means = np.stack([_xi_values(s).reshape(grid.d, -1).mean(axis=1) for s in commutator_samples])
    if t is None and commutator_samples and hasattr(commutator_samples[0], 't'):
        t = commutator_samples[0].t
    return covariance_Q_from_means(means, grid, t)


def window_weights(grid: TorusGrid, R: float) -> np.ndarray:
    z = grid.periodic_offsets()
    return np.exp(-np.sum(z * z, axis=0) / R ** 2)


def two_point_function(values: np.ndarray, grid: TorusGrid) -> np.ndarray:
    """C_ab(z) = L^-d sum_x X_a(x + z) X_b(x), shape (k, k, L, ..., L)."""
    hat = forward_transform(values, grid)
    k = values.shape[0]
    out = np.empty((k, k) + grid.shape)
    for a in range(k):
        for b in range(k):
            out[a, b] = inverse_transform(hat[a] * np.conj(hat[b]), grid)
    return out / grid.n_sites


def covariance_Q_windowed(commutator_samples: Sequence, grid: TorusGrid, R: float,
                          t: Optional[float] = None) -> CovarianceEstimate:
    """
    Q_R = sum_z exp(-|z/R|^2) C(z), C the two-point function of the samples
    after removing the ensemble mean vector; mean and standard error over samples.
    """
    if not 0 < R <= grid.L / 2:
        raise ParameterError(f"Window R={R} outside (0, L/2]")
    fields = [_xi_values(s) for s in commutator_samples]
    n = len(fields)
    if n < 2:
        raise ParameterError("Windowed covariance needs at least two samples")
    ensemble_mean = np.mean([f.reshape(f.shape[0], -1).mean(axis=1) for f in fields], axis=0)
    shift = ensemble_mean.reshape((-1,) + (1,) * grid.d)
    weights = window_weights(grid, R)
    per_sample = []
    for f in fields:
        C = two_point_function(f - shift, grid)
        per_sample.append(np.sum(C * weights, axis=tuple(range(2, 2 + grid.d))))
    per_sample = np.stack(per_sample)
    Q = per_sample.mean(axis=0)
    stderr = per_sample.std(axis=0, ddof=1) / np.sqrt(n)
    return CovarianceEstimate(Q, stderr, t, n)
