import logging
import math
import numpy as np
from typing import Any, Dict, List
from ..lattice.grid import TorusGrid, ScalarField
from ..lattice.calculus import forward_difference
from ..lattice.spectral import constant_coefficient_solve
from ..ensembles.coefficients import CoefficientField
from ..elliptic.solver import solve_values
from ..elliptic.corrector import corrector
from ..elliptic.extrapolation import a_hT_kappa
from .base import Experiment, SampleResults, REFERENCE_OFFSET, rms_row
from .spec import ExperimentReport

logger = logging.getLogger(__name__)

DEFAULT_BUMP_WIDTH = 0.1
DEFAULT_REFERENCE_SAMPLES = 4


def macroscopic_bump(grid: TorusGrid, width: float = DEFAULT_BUMP_WIDTH) -> ScalarField:
    """Mean-zero Gaussian bump centered in the unit torus, sampled at X = x / L."""
    X = grid.coordinates() / grid.L - 0.5
    bump = np.exp(-np.sum(X * X, axis=0) / (2 * width ** 2))
    return ScalarField(grid, bump - bump.mean())


def two_scale_error_sq(a: CoefficientField, a_hom: np.ndarray, f: ScalarField, cfg) -> float:
    """
    Mean over the torus of |grad u_eps - grad u_hom - d_i u_hom grad phi_i|^2
    in macroscopic units, eps = 1/L.

    -div(a grad u) = f in X becomes -div(a grad u) = eps^2 f on the lattice.
    """
    grid = a.grid
    eps = 1.0 / grid.L
    rhs = ScalarField(grid, eps ** 2 * f.values)
    u_eps = solve_values(a, 0.0, rhs.values, cfg).solution
    u_hom = constant_coefficient_solve(a_hom, rhs).values
    d = grid.d
    grad_eps = np.stack([forward_difference(u_eps, i) for i in range(d)]) / eps
    grad_hom = np.stack([forward_difference(u_hom, i) for i in range(d)]) / eps
    err = grad_eps - grad_hom
    for i in range(d):
        phi, _ = corrector(a, i, cfg)
        grad_phi = np.stack([forward_difference(phi.values, k) for k in range(d)])
        err = err - grad_hom[i][np.newaxis] * grad_phi
    return float(np.sum(err * err)) / grid.n_sites


class TwoScaleExpansion(Experiment):
    """H^1 error of the first-order two-scale expansion along a ladder of lattice sizes, eps = 1/L."""
    name = 'E6-two-scale'

    def _grids(self) -> List[TorusGrid]:
        return [TorusGrid(self.grid.d, int(L)) for L in self.ladder['L']]

    def reference_indices(self) -> List[int]:
        n = int(self.spec.option('reference_samples', DEFAULT_REFERENCE_SAMPLES))
        return [REFERENCE_OFFSET + k for k in range(n)]

    def prepare(self) -> None:
        """Reference a_hom from a_hT^kappa on the largest lattice, averaged over reference samples."""
        grid = max(self._grids(), key=lambda g: g.L)
        T = float(self.spec.option('reference_T', (grid.L // 4) ** 2))
        kappa = int(self.spec.option('reference_kappa', 2))
        matrices = [a_hT_kappa(self.coefficient(i, grid), T, kappa, self.cfg) for i in self.reference_indices()]
        self.a_ref = np.mean(matrices, axis=0)
        logger.info(f"{self.name}: reference coefficient {self.a_ref.tolist()} (L={grid.L}, T={T})")

    def sample(self, index: int) -> Dict[str, Any]:
        width = float(self.spec.option('bump_width', DEFAULT_BUMP_WIDTH))
        result: Dict[str, Any] = {'error_sq': []}
        for grid in self._grids():
            a = self.coefficient(index, grid)
            value = self.attempt(result, f"L={grid.L}",
                                 lambda: two_scale_error_sq(a, self.a_ref, macroscopic_bump(grid, width), self.cfg))
            result['error_sq'].append(value)
        return result

    def ansatz(self, eps: float) -> float:
        """eps sqrt(log 1/eps) in d = 2, eps in d = 3."""
        return eps * math.sqrt(math.log(1.0 / eps)) if self.grid.d == 2 else eps

    def reduce(self, results: SampleResults) -> ExperimentReport:
        usable = self.usable(results)
        Ls = [int(L) for L in self.ladder['L']]
        rows = []
        for k, L in enumerate(Ls):
            squares = [r['error_sq'][k] for _, r in usable if r['error_sq'][k] is not None]
            rows.append(rms_row(1.0 / L, squares))
        fits: Dict[str, Dict[str, Any]] = {}
        xs = [self.ansatz(1.0 / L) for L in Ls]
        check = self.slope_check('two-scale error exponent', xs, [r['estimate'] for r in rows], 1.0,
                                 float(self.spec.option('slope_tolerance', 0.2)), fits)
        return self.build_report(results, [check], {'two_scale_error': rows}, fits,
                                 extras={'a_ref': self.a_ref.tolist()})
