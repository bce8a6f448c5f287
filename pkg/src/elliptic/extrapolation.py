"""
Richardson extrapolation in the cutoff T.

Level-1 values are taken at T, 2T, ..., 2^(kappa-1) T; each further level
combines neighbours as (2^m v(2T) - v(T)) / (2^m - 1), which removes the
1/T^m term of an expansion in powers of 1/T.
"""
import logging
import numpy as np
from typing import Dict, List, Optional, Sequence, Union
from ..lattice.grid import ScalarField, VectorField, SkewField
from ..lattice.calculus import forward_difference
from ..ensembles.coefficients import CoefficientField
from ..errors import ParameterError
from .solver import SolverConfig
from .corrector import modified_corrector

logger = logging.getLogger(__name__)

Extrapolable = Union[float, np.ndarray, ScalarField, VectorField, SkewField]


def dyadic_cutoffs(T: float, kappa: int) -> List[float]:
    return [T * 2 ** j for j in range(kappa)]


def _combine(values: List[np.ndarray]) -> np.ndarray:
    level = list(values)
    m = 1
    while len(level) > 1:
        factor = 2.0 ** m
        level = [(factor * level[j + 1] - level[j]) / (factor - 1.0) for j in range(len(level) - 1)]
        m += 1
    return level[0]


def richardson_extrapolate(values: Sequence[Extrapolable], kappa: int) -> Extrapolable:
    """
    Extrapolate values at T, 2T, ..., 2^(kappa-1) T to order kappa.

    Fields come back as the same field type; kappa = 1 returns the first value.
    """
    if kappa < 1:
        raise ParameterError(f"kappa must be >= 1, got {kappa}")
    if len(values) != kappa:
        raise ParameterError(f"Richardson order {kappa} needs {kappa} values, got {len(values)}")
    first = values[0]
    if kappa == 1:
        return first
    if isinstance(first, (ScalarField, VectorField, SkewField)):
        if any(type(v) is not type(first) or v.grid != first.grid for v in values):
            raise ParameterError("Richardson inputs must share field type and grid")
        return type(first)(first.grid, _combine([v.values for v in values]))
    result = _combine([np.asarray(v, dtype=float) for v in values])
    return float(result) if np.ndim(result) == 0 else result


def extrapolated_corrector(a: CoefficientField, T: float, e: int, kappa: int,
                           cfg: Optional[SolverConfig] = None,
                           cache: Optional[Dict[float, ScalarField]] = None) -> ScalarField:
    """phi_T^kappa from massive correctors at T, ..., 2^(kappa-1) T; `cache` maps cutoff to phi."""
    phis = []
    for cutoff in dyadic_cutoffs(T, kappa):
        if cache is not None and cutoff in cache:
            phis.append(cache[cutoff])
            continue
        phi, _ = modified_corrector(a, cutoff, e, cfg)
        if cache is not None:
            cache[cutoff] = phi
        phis.append(phi)
    return richardson_extrapolate(phis, kappa)


def energy_coefficient(a: CoefficientField, phis: Sequence[ScalarField]) -> np.ndarray:
    """M[j, i] = mean of (grad phi_j + e_j) . a (grad phi_i + e_i), phis indexed by direction."""
    d = a.grid.d
    if len(phis) != d:
        raise ParameterError(f"Need {d} correctors, got {len(phis)}")
    fields = []
    for i, phi in enumerate(phis):
        grad = np.stack([forward_difference(phi.values, k) for k in range(d)])
        grad[i] += 1.0
        fields.append(grad)
    M = np.empty((d, d))
    for j in range(d):
        for i in range(d):
            M[j, i] = float(np.sum(fields[j] * a.conductances * fields[i])) / a.grid.n_sites
    return M


def a_hT_kappa(a: CoefficientField, T: float, kappa: int, cfg: Optional[SolverConfig] = None,
               caches: Optional[List[Dict[float, ScalarField]]] = None) -> np.ndarray:
    phis = [extrapolated_corrector(a, T, e, kappa, cfg, caches[e] if caches is not None else None)
            for e in range(a.grid.d)]
    return energy_coefficient(a, phis)


def resolvent_g_kappa(mu, T: float, kappa: int):
    """
    Richardson extrapolation in T of g_1(mu, T) = 1 / (1/T + mu).

    Vectorized over mu; g_kappa(mu, T) tends to 1/mu as T grows.
    """
    mu = np.asarray(mu, dtype=float)
    if np.any(mu < 0):
        raise ParameterError("mu must be non-negative")
    values = [1.0 / (1.0 / cutoff + mu) for cutoff in dyadic_cutoffs(T, kappa)]
    result = richardson_extrapolate(values, kappa)
    return float(result) if np.ndim(result) == 0 else result


def resolvent_defect(mu, T: float, kappa: int):
    """g_kappa(mu, T) - 1/mu for mu > 0, extrapolated directly to avoid cancelling 1/mu."""
    mu = np.asarray(mu, dtype=float)
    if np.any(mu <= 0):
        raise ParameterError("resolvent_defect needs mu > 0")
    values = [-1.0 / (mu * (1.0 + mu * cutoff)) for cutoff in dyadic_cutoffs(T, kappa)]
    return richardson_extrapolate(values, kappa)


def resolvent_bound_ratio(mu, T: float, kappa: int):
    """|g_kappa - 1/mu| divided by T^-kappa / (mu (1/T + mu)^kappa); bounded below by a positive constant."""
    mu = np.asarray(mu, dtype=float)
    bound = T ** (-kappa) / (mu * (1.0 / T + mu) ** kappa)
    return np.abs(resolvent_defect(mu, T, kappa)) / bound
