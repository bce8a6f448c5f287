"""
Constant-coefficient flux propagators, computed exactly in time.

For a constant matrix A the semigroup dv/dt = div(A grad v) is diagonal in
Fourier space with symbol s(k) = sum_ij conj(d_i) A_ij d_j, d_i the symbol of
the forward difference. Propagating q0 from t to T adds

    sum_j A_ij d_j v0_hat (1 - exp(-(T - t) s)) / s,     v0 = div q0,

to component i; T = inf gives the Leray-type projection onto discretely
divergence-free fields.
"""
import logging
import math
import numpy as np
from typing import Callable, Mapping, Tuple, Union
from ..lattice.grid import VectorField
from ..lattice.spectral import forward_transform, inverse_transform, difference_symbols
from ..errors import ParameterError
from .timegrid import enclosing_power

logger = logging.getLogger(__name__)

CoefficientSchedule = Union[Mapping[float, np.ndarray], Callable[[float], np.ndarray]]


def _symmetric_elliptic(a_const: np.ndarray, d: int) -> np.ndarray:
    A = np.asarray(a_const, dtype=float)
    if A.shape != (d, d):
        raise ParameterError(f"Constant coefficient must be {d}x{d}, got shape {A.shape}")
    A = 0.5 * (A + A.T)
    smallest = float(np.linalg.eigvalsh(A).min())
    if not smallest > 0:
        raise ParameterError(f"Constant coefficient is not elliptic (smallest eigenvalue {smallest:.3e})")
    return A


def propagate_S_hom(a_const: np.ndarray, q0: VectorField, t: float, T: float) -> VectorField:
    """
    S^hom_{t->T} q0 for the symmetric part of a_const; T may be math.inf.

    Raises:
        ParameterError: if a_const is not elliptic or T < t.
    """
    grid = q0.grid
    A = _symmetric_elliptic(a_const, grid.d)
    if T < t:
        raise ParameterError(f"Need t <= T, got t={t}, T={T}")
    if T == t:
        return VectorField(grid, q0.values.copy())

    d_sym = difference_symbols(grid)
    q_hat = forward_transform(q0.values, grid)
    v0_hat = -sum(np.conj(d_sym[j]) * q_hat[j] for j in range(grid.d))
    s = np.real(sum(np.conj(d_sym[i]) * A[i, j] * d_sym[j]
                    for i in range(grid.d) for j in range(grid.d)))

    safe = np.where(s > 0, s, 1.0)
    if math.isinf(T):
        factor = 1.0 / safe
    else:
        factor = -np.expm1(-(T - t) * safe) / safe
    factor = np.where(s > 0, factor, 0.0)

    increments = []
    for i in range(grid.d):
        grad_hat = sum(A[i, j] * d_sym[j] for j in range(grid.d)) * v0_hat * factor
        increments.append(inverse_transform(grad_hat, grid))
    return VectorField(grid, q0.values + np.stack(increments))


def leray_projection(a_const: np.ndarray, q: VectorField) -> VectorField:
    """S^hom_{0->inf}: the divergence-free part of q relative to a_const."""
    return propagate_S_hom(a_const, q, 0.0, math.inf)


def helmholtz_split(a_const: np.ndarray, q: VectorField) -> Tuple[VectorField, VectorField]:
    """(S^hom_{0->inf} q, q - S^hom_{0->inf} q)."""
    projected = leray_projection(a_const, q)
    return projected, VectorField(q.grid, q.values - projected.values)


def propagate_S_h(coefficients: CoefficientSchedule, q0: VectorField, t: float, T: float) -> VectorField:
    """
    Propagate with a piecewise-constant coefficient: on each sub-interval of
    (2^(k-1), 2^k] the matrix for key 2^k is used (key 1 on [0, 1]).

    `coefficients` maps the dyadic key to a matrix, or is a callable of it.
    """
    if not 0 <= t <= T or math.isinf(T):
        raise ParameterError(f"Need 0 <= t <= T < inf, got t={t}, T={T}")
    lookup = coefficients if callable(coefficients) else coefficients.__getitem__
    breaks = [t]
    point = enclosing_power(t)
    while point < T:
        if point > t:
            breaks.append(point)
        point *= 2
    breaks.append(T)

    q = q0
    for start, end in zip(breaks[:-1], breaks[1:]):
        if end <= start:
            continue
        key = enclosing_power(end)
        try:
            A = lookup(key)
        except KeyError:
            raise ParameterError(f"No coefficient for dyadic interval ending at {key}")
        q = propagate_S_hom(A, q, start, end)
    return q

