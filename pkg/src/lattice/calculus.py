"""
Discrete calculus on the torus.

Forward differences live on edges (tail attribution); the divergence is the
negative adjoint of the gradient, so summation by parts holds exactly.
"""
import numpy as np
from .grid import ScalarField, VectorField, SkewField
from ..errors import ParameterError


def forward_difference(values: np.ndarray, axis: int) -> np.ndarray:
    return np.roll(values, -1, axis=axis) - values


def backward_difference(values: np.ndarray, axis: int) -> np.ndarray:
    return values - np.roll(values, 1, axis=axis)


def discrete_gradient(u: ScalarField) -> VectorField:
    grid = u.grid
    return VectorField(grid, np.stack([forward_difference(u.values, i) for i in range(grid.d)]))


def divergence_values(values: np.ndarray) -> np.ndarray:
    """Divergence of raw component arrays, shape (d, L, ..., L)."""
    out = np.zeros(values.shape[1:])
    for i in range(values.shape[0]):
        out += backward_difference(values[i], i)
    return out


def discrete_divergence(F: VectorField) -> ScalarField:
    return ScalarField(F.grid, divergence_values(F.values))


def discrete_laplacian(u: ScalarField) -> ScalarField:
    out = np.zeros(u.grid.shape)
    for i in range(u.grid.d):
        out += backward_difference(forward_difference(u.values, i), i)
    return ScalarField(u.grid, out)


def curl_rhs(q: VectorField, j: int, k: int) -> ScalarField:
    """D_j q_k - D_k q_j with forward differences, components read at the edge tail."""
    if j == k:
        raise ParameterError(f"curl_rhs needs distinct axes, got j = k = {j}")
    return ScalarField(q.grid, forward_difference(q.values[k], j) - forward_difference(q.values[j], k))


def skew_divergence(sigma: SkewField) -> VectorField:
    """(div sigma)_j = sum_k B_k sigma_jk, B_k the backward difference."""
    grid = sigma.grid
    out = np.zeros((grid.d,) + grid.shape)
    for j in range(grid.d):
        for k in range(grid.d):
            if j != k:
                out[j] += backward_difference(sigma.component(j, k), k)
    return VectorField(grid, out)
