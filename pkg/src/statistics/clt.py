import logging
import numpy as np
from dataclasses import dataclass
from typing import List, Sequence, Union
from ..lattice.grid import TorusGrid, ScalarField, VectorField, SkewField
from ..lattice.spectral import gaussian_mollify, forward_transform, inverse_transform, mollifier_symbol
from ..errors import ParameterError
from .jackknife import variance_loo, jackknife_stderr
from .regression import RateFit, rate_fit

logger = logging.getLogger(__name__)

MIN_CLT_SAMPLES = 30

Field = Union[ScalarField, VectorField, SkewField]


@dataclass
class CltProfile:
    scales: List[float]
    std: List[float]
    stderr: List[float]
    n_samples: int

    @property
    def degenerate(self) -> bool:
        return all(s == 0 for s in self.std)

    def fit(self) -> RateFit:
        return rate_fit(self.scales, self.std)


def check_scales(scales: Sequence[float], L: int) -> List[float]:
    scales = [float(R) for R in scales]
    for R in scales:
        if not 1 <= R <= L / 8:
            raise ParameterError(f"Scale R={R} outside [1, L/8] for L={L}")
    return scales


def origin_values(values: np.ndarray, grid: TorusGrid, scales: Sequence[float]) -> np.ndarray:
    """
    Mollified values at the origin of stacked components (k, L, ..., L),
    shape (n_scales, k). Used for derived arrays that are not a field type.
    """
    values = np.asarray(values, dtype=float).reshape((-1,) + grid.shape)
    hat = forward_transform(values, grid)
    out = []
    for R in check_scales(scales, grid.L):
        smoothed = inverse_transform(hat * mollifier_symbol(grid, R), grid)
        out.append(smoothed[(slice(None),) + (0,) * grid.d])
    return np.asarray(out, dtype=float)


def mollified_origin_values(field: Field, scales: Sequence[float]) -> np.ndarray:
    """(n_scales, n_components) values of gaussian_mollify(field, R) at the origin."""
    out = []
    for R in scales:
        smoothed = gaussian_mollify(field, R).values.reshape((-1,) + field.grid.shape)
        out.append(smoothed[(slice(None),) + (0,) * field.grid.d])
    return np.asarray(out, dtype=float)


def clt_profile_from_values(values: np.ndarray, scales: Sequence[float]) -> CltProfile:
    """
    Profile from stacked origin values of shape (n_samples, n_scales, n_components).

    The per-scale spread is sqrt of the summed component variances.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    if n < MIN_CLT_SAMPLES:
        raise ParameterError(f"CLT profile needs at least {MIN_CLT_SAMPLES} samples, got {n}")
    var, var_loo = variance_loo(values)
    std = np.sqrt(var.sum(axis=-1))
    std_loo = np.sqrt(var_loo.sum(axis=-1))
    err = jackknife_stderr(std_loo)
    return CltProfile([float(R) for R in scales], [float(s) for s in std], [float(s) for s in err], n)


def clt_profile(field_samples: Sequence[Field], scales: Sequence[float]) -> CltProfile:
    if len(field_samples) < MIN_CLT_SAMPLES:
        raise ParameterError(f"CLT profile needs at least {MIN_CLT_SAMPLES} samples, got {len(field_samples)}")
    first = field_samples[0]
    if any(type(f) is not type(first) or f.grid != first.grid for f in field_samples):
        raise ParameterError("All samples must share field type and grid")
    scales = check_scales(scales, first.grid.L)
    values = np.stack([mollified_origin_values(f, scales) for f in field_samples])
    return clt_profile_from_values(values, scales)
