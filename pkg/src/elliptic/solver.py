"""
Preconditioned conjugate gradients for (mass I + A) u = f, A = -div(a grad).

The operator is applied matrix-free with periodic rolls. Inner products are
plain numpy sums so that a solve gives bit-identical output on any machine
thread layout.
"""
import logging
import math
import numpy as np
import scipy.sparse as sp
from dataclasses import dataclass, field
from typing import Callable, List, Optional
from ..lattice.grid import ScalarField
from ..lattice.calculus import forward_difference, backward_difference
from ..lattice.operators import difference_matrix
from ..lattice.spectral import MEAN_TOLERANCE
from ..ensembles.coefficients import CoefficientField
from ..errors import ParameterError, ConvergenceError

logger = logging.getLogger(__name__)

PRECONDITIONERS = ('diagonal-mass', 'none')
MAX_REL_TOLERANCE = 1e-3


@dataclass(frozen=True)
class SolverConfig:
    rel_tolerance: float = 1e-9
    max_iterations: Optional[int] = None
    preconditioner: str = 'diagonal-mass'

    def __post_init__(self):
        if not 0 < self.rel_tolerance <= MAX_REL_TOLERANCE:
            raise ParameterError(
                f"rel_tolerance must lie in (0, {MAX_REL_TOLERANCE}], got {self.rel_tolerance}")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ParameterError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.preconditioner not in PRECONDITIONERS:
            raise ParameterError(
                f"Unknown preconditioner '{self.preconditioner}', expected one of {PRECONDITIONERS}")

    def iteration_cap(self, n_sites: int) -> int:
        return self.max_iterations if self.max_iterations is not None else 10 * n_sites

    def to_dict(self):
        return {'rel_tolerance': self.rel_tolerance,
                'max_iterations': self.max_iterations,
                'preconditioner': self.preconditioner}


@dataclass
class CGResult:
    solution: np.ndarray
    iterations: int
    residual_norms: List[float] = field(default_factory=list)
    converged: bool = True


def _dot(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.sum(x * y))


def _norm(x: np.ndarray) -> float:
    return math.sqrt(_dot(x, x))


def mass_for(T: float) -> float:
    if T <= 0:
        raise ParameterError(f"Cutoff T must be positive, got {T}")
    return 0.0 if math.isinf(T) else 1.0 / T


def apply_operator(a: CoefficientField, mass: float, values: np.ndarray) -> np.ndarray:
    """(mass I - div(a grad)) applied to site values."""
    out = mass * values
    for i in range(a.grid.d):
        out = out - backward_difference(a.conductances[i] * forward_difference(values, i), i)
    return out


def operator_diagonal(a: CoefficientField, mass: float) -> np.ndarray:
    diag = np.full(a.grid.shape, float(mass))
    for i in range(a.grid.d):
        diag += a.conductances[i] + np.roll(a.conductances[i], 1, axis=i)
    return diag


def conjugate_gradient(apply: Callable[[np.ndarray], np.ndarray], rhs: np.ndarray,
                       rel_tolerance: float, max_iterations: int,
                       diagonal: Optional[np.ndarray] = None,
                       x0: Optional[np.ndarray] = None,
                       callback: Optional[Callable[[np.ndarray], None]] = None) -> CGResult:
    """
    Preconditioned CG on a symmetric positive (semi)definite operator.

    Stops when ||r||_2 <= rel_tolerance * ||rhs||_2. `callback` receives each
    iterate after its update.

    Raises:
        ConvergenceError: if the iteration cap is reached first.
    """
    b_norm = _norm(rhs)
    x = np.zeros_like(rhs) if x0 is None else np.array(x0, dtype=float)
    if b_norm == 0.0:
        return CGResult(np.zeros_like(rhs), 0, [0.0])

    target = rel_tolerance * b_norm
    r = rhs - apply(x) if x0 is not None else rhs.copy()
    z = r / diagonal if diagonal is not None else r
    p = z.copy()
    rz = _dot(r, z)
    history = [_norm(r)]

    k = 0
    while history[-1] > target:
        if k >= max_iterations:
            raise ConvergenceError(
                f"CG did not reach relative residual {rel_tolerance:.1e} in {max_iterations} iterations "
                f"(last {history[-1] / b_norm:.3e})", history[-1] / b_norm, k)
        Ap = apply(p)
        alpha = rz / _dot(p, Ap)
        x = x + alpha * p
        r = r - alpha * Ap
        k += 1
        history.append(_norm(r))
        if callback is not None:
            callback(x)
        z = r / diagonal if diagonal is not None else r
        rz_next = _dot(r, z)
        p = z + (rz_next / rz) * p
        rz = rz_next

    return CGResult(x, k, history)


def solve_values(a: CoefficientField, mass: float, rhs: np.ndarray,
                 cfg: Optional[SolverConfig] = None, x0: Optional[np.ndarray] = None,
                 callback: Optional[Callable[[np.ndarray], None]] = None) -> CGResult:
    """Raw-array solve of (mass I + A) u = rhs; mass = 0 selects the mean-zero gauge."""
    cfg = cfg or SolverConfig()
    rhs = np.asarray(rhs, dtype=float)
    if mass == 0:
        mean = float(rhs.mean())
        scale = float(np.max(np.abs(rhs))) if rhs.size else 0.0
        if abs(mean) > MEAN_TOLERANCE * max(scale, 1e-300):
            raise ParameterError(f"Massless solve needs a mean-zero rhs, mean={mean:.3e}")
        rhs = rhs - mean
    diagonal = operator_diagonal(a, mass) if cfg.preconditioner == 'diagonal-mass' else None
    result = conjugate_gradient(lambda v: apply_operator(a, mass, v), rhs,
                                cfg.rel_tolerance, cfg.iteration_cap(a.grid.n_sites),
                                diagonal=diagonal, x0=x0, callback=callback)
    if mass == 0:
        result.solution = result.solution - result.solution.mean()
    logger.debug(f"CG mass={mass:.3g}: {result.iterations} iterations, "
                 f"residual {result.residual_norms[-1]:.3e}")
    return result


def solve_massive_elliptic(a: CoefficientField, T: float, rhs: ScalarField,
                           cfg: Optional[SolverConfig] = None) -> ScalarField:
    """
    Solve ((1/T) I + A) u = rhs by preconditioned CG.

    T = inf gives the massless problem; the rhs must then be mean-zero and
    the returned solution has zero mean.
    """
    if rhs.grid != a.grid:
        raise ParameterError("Coefficient field and rhs live on different grids")
    result = solve_values(a, mass_for(T), rhs.values, cfg)
    return ScalarField(a.grid, result.solution)


def assemble_operator(a: CoefficientField, T: float) -> sp.csr_matrix:
    """Sparse (1/T) I + G^T diag(a) G, G the difference matrix; row order is ravel()."""
    G = difference_matrix(a.grid)
    n = a.grid.n_sites
    weights = sp.diags(a.conductances.ravel())
    return (mass_for(T) * sp.identity(n) + G.T @ weights @ G).tocsr()
