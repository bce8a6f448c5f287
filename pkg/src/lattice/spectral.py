import logging
import numpy as np
from scipy import fft as sp_fft
from typing import List, Union
from .grid import TorusGrid, ScalarField, VectorField, SkewField
from ..errors import ParameterError

logger = logging.getLogger(__name__)

# Relative size of the mean a mass-free rhs may carry (roundoff allowance).
MEAN_TOLERANCE = 1e-10

Field = Union[ScalarField, VectorField, SkewField]


def _axes(grid: TorusGrid, ndim: int):
    return tuple(range(ndim - grid.d, ndim))


def forward_transform(values: np.ndarray, grid: TorusGrid) -> np.ndarray:
    return sp_fft.rfftn(values, axes=_axes(grid, values.ndim))


def inverse_transform(hat: np.ndarray, grid: TorusGrid) -> np.ndarray:
    return sp_fft.irfftn(hat, s=grid.shape, axes=_axes(grid, hat.ndim))


def angles(grid: TorusGrid) -> List[np.ndarray]:
    """Broadcastable wave angles 2*pi*k/L in the rfftn layout (last axis halved)."""
    out = []
    for i in range(grid.d):
        freq = sp_fft.rfftfreq(grid.L) if i == grid.d - 1 else sp_fft.fftfreq(grid.L)
        shape = [1] * grid.d
        shape[i] = freq.size
        out.append(2 * np.pi * freq.reshape(shape))
    return out


def difference_symbols(grid: TorusGrid) -> List[np.ndarray]:
    """Symbols of the forward differences D_i: exp(i theta_i) - 1."""
    return [np.exp(1j * theta) - 1.0 for theta in angles(grid)]


def laplacian_symbol(grid: TorusGrid) -> np.ndarray:
    """Symbol of -Delta: sum_i 4 sin^2(theta_i / 2) >= 0."""
    return sum(4.0 * np.sin(theta / 2) ** 2 for theta in angles(grid))


# Periodic images summed on each side; the first omitted one sits at distance >= 2L.
WRAP_IMAGES = 2


def wrapped_gaussian_kernel(L: int, R: float) -> np.ndarray:
    """1D Gaussian of scale R sampled on Z, wrapped onto Z/LZ and normalized to unit sum."""
    x = np.arange(L)[:, np.newaxis] + L * np.arange(-WRAP_IMAGES, WRAP_IMAGES + 1)[np.newaxis, :]
    kernel = np.exp(-0.5 * (x / R) ** 2).sum(axis=1)
    return kernel / kernel.sum()


def mollifier_symbol(grid: TorusGrid, R: float) -> np.ndarray:
    """
    DFT of the wrapped Gaussian kernel in the rfftn layout.

    The kernel is separable, so the symbol is a product of 1D transforms.
    Each factor equals sum_m exp(-R^2 (theta + 2 pi m)^2 / 2) up to the
    unit-mass normalization.
    """
    kernel = wrapped_gaussian_kernel(grid.L, R)
    symbol = np.ones((1,) * grid.d)
    for i in range(grid.d):
        factor = sp_fft.rfft(kernel) if i == grid.d - 1 else sp_fft.fft(kernel)
        shape = [1] * grid.d
        shape[i] = factor.size
        symbol = symbol * np.real(factor).reshape(shape)
    return symbol


def gaussian_mollify(F: Field, R: float) -> Field:
    """
    Circular convolution with the Gaussian (2 pi R^2)^(-d/2) exp(-|x|^2 / (2 R^2))
    sampled on the lattice and wrapped on the torus.

    The kernel is non-negative with unit mass, so the mean is preserved and
    the max norm does not grow.
    """
    grid = F.grid
    if not 0 < R <= grid.L / 8:
        raise ParameterError(f"Mollification scale R={R} outside (0, L/8] for L={grid.L}")
    hat = forward_transform(F.values, grid) * mollifier_symbol(grid, R)
    return type(F)(grid, inverse_transform(hat, grid))


def fft_poisson_solve(mass: float, rhs: ScalarField) -> ScalarField:
    """Solve (mass - Delta) u = rhs exactly in Fourier space."""
    grid = rhs.grid
    if mass < 0:
        raise ParameterError(f"Mass must be non-negative, got {mass}")
    scale = float(np.max(np.abs(rhs.values))) if rhs.values.size else 0.0
    if mass == 0 and abs(rhs.mean()) > MEAN_TOLERANCE * max(scale, 1e-300):
        raise ParameterError(
            f"Massless Poisson solve needs a mean-zero rhs, mean={rhs.mean():.3e}")
    denominator = mass + laplacian_symbol(grid)
    hat = forward_transform(rhs.values, grid)
    if mass == 0:
        denominator = denominator.copy()
        denominator.flat[0] = 1.0
        hat.flat[0] = 0.0
    return ScalarField(grid, inverse_transform(hat / denominator, grid))


def constant_coefficient_solve(A: np.ndarray, rhs: ScalarField) -> ScalarField:
    """
    Mean-zero solution of -div(A grad u) = rhs for a constant elliptic matrix A.

    Only the symmetric part of A enters; its symbol is
    sum_ij conj(d_i) A_ij d_j with d_i the forward difference symbols.
    """
    grid = rhs.grid
    A = np.asarray(A, dtype=float)
    if A.shape != (grid.d, grid.d):
        raise ParameterError(f"Constant coefficient must be {grid.d}x{grid.d}, got shape {A.shape}")
    A = 0.5 * (A + A.T)
    if not float(np.linalg.eigvalsh(A).min()) > 0:
        raise ParameterError("Constant coefficient is not elliptic")
    scale = float(np.max(np.abs(rhs.values))) if rhs.values.size else 0.0
    if abs(rhs.mean()) > MEAN_TOLERANCE * max(scale, 1e-300):
        raise ParameterError(f"Constant-coefficient solve needs a mean-zero rhs, mean={rhs.mean():.3e}")
    d_sym = difference_symbols(grid)
    symbol = np.real(sum(np.conj(d_sym[i]) * A[i, j] * d_sym[j] for i in range(grid.d) for j in range(grid.d)))
    hat = forward_transform(rhs.values, grid)
    hat.flat[0] = 0.0
    symbol = symbol.copy()
    symbol.flat[0] = 1.0
    return ScalarField(grid, inverse_transform(hat / symbol, grid))
