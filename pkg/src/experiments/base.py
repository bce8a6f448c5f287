import logging
import numpy as np
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple
from ..ensembles.coefficients import CoefficientField
from ..ensembles.sampler import sample, philox_key
from ..errors import ConvergenceError, ConsistencyError, ParameterError
from ..statistics.regression import rate_fit, RateFit
from .spec import ExperimentSpec, ExperimentReport, Check, decide_status

logger = logging.getLogger(__name__)

# Sample indices at and above this offset feed reference runs, never the ensemble average.
REFERENCE_OFFSET = 1 << 32

SampleResults = List[Tuple[int, Dict[str, Any]]]


class Experiment:
    """
    One named Monte Carlo experiment.

    Subclasses implement sample(index) -> JSON-able dict and reduce(results).
    prepare() runs once in the parent process before sampling and may
    compute shared references; it must itself be deterministic.
    """
    name = ''

    def __init__(self, spec: ExperimentSpec):
        self.spec = spec
        self.grid = spec.grid
        self.ladder = spec.resolved_ladder
        self.cfg = spec.solver
        self.n_stderr = float(spec.option('n_stderr', 4.0))

    def prepare(self) -> None:
        pass

    def reference_indices(self) -> List[int]:
        return []

    def coefficient(self, index: int, grid=None) -> CoefficientField:
        return sample(self.spec.ensemble, grid or self.grid, self.spec.master_seed, index)

    def run_sample(self, index: int) -> Dict[str, Any]:
        """sample() with solver failures recorded instead of raised."""
        try:
            return self.sample(index)
        except (ConvergenceError, ConsistencyError) as e:
            logger.warning(f"{self.name}: sample {index} failed: {e}")
            return {'failed': True, 'error': f"{type(e).__name__}: {e}"}

    def attempt(self, result: Dict[str, Any], rung: str, fn: Callable[[], Any]) -> Optional[Any]:
        """Evaluate one rung; a solver failure is logged in result['failures'] and yields None."""
        try:
            return fn()
        except (ConvergenceError, ConsistencyError) as e:
            logger.warning(f"{self.name}: rung {rung} failed: {e}")
            result.setdefault('failures', []).append({'rung': rung, 'error': f"{type(e).__name__}: {e}"})
            return None

    def sample(self, index: int) -> Dict[str, Any]:
        raise NotImplementedError

    def reduce(self, results: SampleResults) -> ExperimentReport:
        raise NotImplementedError

    # reduction helpers

    @staticmethod
    def usable(results: SampleResults) -> SampleResults:
        return [(i, r) for i, r in results if not r.get('failed')]

    @staticmethod
    def collect_failures(results: SampleResults) -> List[Dict[str, Any]]:
        failures = []
        for i, r in results:
            if r.get('failed'):
                failures.append({'index': i, 'rung': '*', 'error': r['error']})
            for f in r.get('failures', []):
                failures.append({'index': i, 'rung': f['rung'], 'error': f['error']})
        return failures

    def seed_manifest(self, indices: Sequence[int]) -> List[Dict[str, Any]]:
        return [{'index': int(i), 'philox_key': hex(philox_key(self.spec.master_seed, int(i)))}
                for i in indices]

    def slope_check(self, name: str, xs, ys, target: float, tolerance: float,
                    fits: Dict[str, Dict[str, Any]]) -> Check:
        try:
            fit: RateFit = rate_fit(xs, ys)
        except ParameterError as e:
            return Check(name, False, None, target, tolerance, detail=str(e))
        fits[name] = fit.to_dict()
        return Check(name, fit.within(target, tolerance), fit.slope, target, tolerance,
                     detail=f"stderr {fit.slope_stderr:.3g}, R^2 {fit.r_squared:.4f}")

    def build_report(self, results: SampleResults, checks: List[Check],
                     channels: Dict[str, List[Dict[str, Any]]], fits: Dict[str, Dict[str, Any]],
                     degenerate: bool = False, extras: Optional[Dict[str, Any]] = None) -> ExperimentReport:
        status = decide_status(checks, degenerate)
        logger.info(f"{self.name}: {sum(c.passed for c in checks)}/{len(checks)} checks passed -> {status}")
        return ExperimentReport(
            spec=self.spec.to_dict(),
            status=status,
            checks=checks,
            channels=channels,
            fits=fits,
            failures=self.collect_failures(results),
            extras=extras or {},
        )


def row(parameter: float, estimate: float, stderr: float, n: int) -> Dict[str, Any]:
    return {'parameter': float(parameter), 'estimate': float(estimate), 'stderr': float(stderr), 'N': int(n)}


def mean_row(parameter: float, values: Sequence[float]) -> Dict[str, Any]:
    values = np.asarray(values, dtype=float)
    n = values.size
    stderr = float(values.std(ddof=1) / np.sqrt(n)) if n > 1 else float('nan')
    return row(parameter, float(values.mean()) if n else float('nan'), stderr, n)


def rms_row(parameter: float, squares: Sequence[float]) -> Dict[str, Any]:
    """sqrt of a mean of squares, with the delta-method error."""
    base = mean_row(parameter, squares)
    root = float(np.sqrt(max(base['estimate'], 0.0)))
    stderr = base['stderr'] / (2 * root) if root > 0 else 0.0
    return row(parameter, root, stderr, base['N'])
