"""
Massive correctors and the objects derived from them.

For a cutoff T and direction e:

    (1/T) phi_T - div(a (grad phi_T + e)) = 0           conjugate gradients
    q_T = a (grad phi_T + e)
    (1/T - Lap) sigma_T,jk = D_j q_T,k - D_k q_T,j     spectral
    (1/T - Lap) g_T = (q_T - mean(q_T) - grad phi_T) / T   spectral

so that q_T = mean(q_T) + div sigma_T + g_T holds exactly up to the CG error.
T = inf selects the massless corrector; g then vanishes.
"""
import logging
import math
import numpy as np
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple
from ..lattice.grid import TorusGrid, ScalarField, VectorField, SkewField
from ..lattice.calculus import forward_difference, divergence_values, curl_rhs, skew_divergence
from ..lattice.spectral import fft_poisson_solve
from ..ensembles.coefficients import CoefficientField
from ..errors import ParameterError, ConsistencyError
from .solver import SolverConfig, solve_massive_elliptic, mass_for

logger = logging.getLogger(__name__)

# Roundoff allowance of one spectral solve, relative to max |q|.
SPECTRAL_TOLERANCE = 1e-10
IDENTITY_SAFETY = 10.0


@dataclass(frozen=True, eq=False)
class ExtendedCorrector:
    T: float
    direction: int
    phi_T: ScalarField
    q_T: VectorField
    sigma_T: SkewField
    g_T: VectorField
    a_hT_column: np.ndarray
    helmholtz_residual: float

    @property
    def grid(self) -> TorusGrid:
        return self.phi_T.grid


def _check_direction(grid: TorusGrid, e: int) -> None:
    if not 0 <= e < grid.d:
        raise ParameterError(f"Direction {e} out of range for d={grid.d}")


def corrector_rhs(a: CoefficientField, e: int) -> ScalarField:
    """div(a e): only component e of the edge field a e is non-zero."""
    _check_direction(a.grid, e)
    values = np.zeros((a.grid.d,) + a.grid.shape)
    values[e] = a.conductances[e]
    return ScalarField(a.grid, divergence_values(values))


def flux(a: CoefficientField, phi: ScalarField, e: int) -> VectorField:
    """q = a (grad phi + e), edgewise."""
    grid = a.grid
    values = np.stack([a.conductances[i] * (forward_difference(phi.values, i) + (1.0 if i == e else 0.0))
                       for i in range(grid.d)])
    return VectorField(grid, values)


def modified_corrector(a: CoefficientField, T: float, e: int,
                       cfg: Optional[SolverConfig] = None) -> Tuple[ScalarField, VectorField]:
    phi = solve_massive_elliptic(a, T, corrector_rhs(a, e), cfg)
    return phi, flux(a, phi, e)


def corrector(a: CoefficientField, e: int, cfg: Optional[SolverConfig] = None) -> Tuple[ScalarField, VectorField]:
    """Massless corrector in the mean-zero gauge."""
    return modified_corrector(a, math.inf, e, cfg)


def vector_potential(q_T: VectorField, T: float) -> SkewField:
    mass = mass_for(T)
    grid = q_T.grid
    components = [fft_poisson_solve(mass, curl_rhs(q_T, j, k)).values for j, k in grid.pairs]
    return SkewField(grid, np.stack(components))


def auxiliary_g(q_T: VectorField, phi_T: ScalarField, T: float) -> VectorField:
    mass = mass_for(T)
    grid = q_T.grid
    if mass == 0:
        return VectorField.zeros(grid)
    q_bar = q_T.mean()
    out = []
    for i in range(grid.d):
        rhs = (q_T.values[i] - q_bar[i] - forward_difference(phi_T.values, i)) * mass
        out.append(fft_poisson_solve(mass, ScalarField(grid, rhs)).values)
    return VectorField(grid, np.stack(out))


def helmholtz_residual(q_T: VectorField, a_hT_column: np.ndarray, sigma_T: SkewField, g_T: VectorField) -> float:
    """Max-norm of q_T - a_hT e - div sigma_T - g_T."""
    grid = q_T.grid
    constant = np.asarray(a_hT_column).reshape((grid.d,) + (1,) * grid.d)
    defect = q_T.values - constant - skew_divergence(sigma_T).values - g_T.values
    return float(np.max(np.abs(defect)))


def identity_tolerance(a: CoefficientField, T: float, e: int, q_scale: float, cfg: SolverConfig) -> float:
    """
    Budget for the Helmholtz defect.

    The defect solves (1/T - Lap) E = D rho with rho the CG residual, so it is
    bounded by ||rho|| times sqrt(T) (or L for T = inf), plus the roundoff of
    the two spectral solves relative to max |q|.
    """
    rhs = corrector_rhs(a, e).values
    rhs_norm = math.sqrt(float(np.sum(rhs * rhs)))
    amplification = max(1.0, math.sqrt(min(T, float(a.grid.L) ** 2)))
    return IDENTITY_SAFETY * (cfg.rel_tolerance * rhs_norm * amplification
                              + 2 * SPECTRAL_TOLERANCE * q_scale)


def assemble_extended_corrector(a: CoefficientField, T: float, e: int,
                                cfg: Optional[SolverConfig] = None) -> ExtendedCorrector:
    """
    Solve for phi_T, q_T, sigma_T and g_T and check the Helmholtz identity.

    Raises:
        ConsistencyError: if the identity defect exceeds the solver budget.
    """
    cfg = cfg or SolverConfig()
    phi, q = modified_corrector(a, T, e, cfg)
    sigma = vector_potential(q, T)
    g = auxiliary_g(q, phi, T)
    column = q.mean()
    residual = helmholtz_residual(q, column, sigma, g)
    tolerance = identity_tolerance(a, T, e, max(float(np.max(np.abs(q.values))), 1.0), cfg)
    if residual > tolerance:
        raise ConsistencyError(
            f"Helmholtz identity defect {residual:.3e} exceeds {tolerance:.3e} (T={T}, e={e})",
            residual, tolerance)
    logger.debug(f"Extended corrector T={T}, e={e}: identity defect {residual:.3e}")
    return ExtendedCorrector(T, e, phi, q, sigma, g, column, residual)


def extended_correctors(a: CoefficientField, T: float, cfg: Optional[SolverConfig] = None) -> List[ExtendedCorrector]:
    return [assemble_extended_corrector(a, T, e, cfg) for e in range(a.grid.d)]


def homogenized_coefficient_a_hT(correctors: Sequence[ExtendedCorrector]) -> np.ndarray:
    """Column i is the spatial mean of q_T for direction e_i."""
    if not correctors:
        raise ParameterError("No correctors given")
    d = correctors[0].grid.d
    by_direction = {c.direction: c for c in correctors}
    if sorted(by_direction) != list(range(d)):
        raise ParameterError(f"Need one corrector per direction 0..{d - 1}, got {sorted(by_direction)}")
    return np.column_stack([np.asarray(by_direction[i].a_hT_column) for i in range(d)])


def energy_identity_residual(a: CoefficientField, T: float, phi: ScalarField, e: int) -> float:
    """(1/T) sum phi^2 + sum grad phi . a (grad phi + e), which vanishes for the exact corrector."""
    q = flux(a, phi, e)
    grad = np.stack([forward_difference(phi.values, i) for i in range(a.grid.d)])
    return float(mass_for(T) * np.sum(phi.values * phi.values) + np.sum(grad * q.values))
