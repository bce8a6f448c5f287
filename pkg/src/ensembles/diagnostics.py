import logging
import numpy as np
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence
from .coefficients import EnsembleSpec
from .sampler import sample
from ..lattice.grid import TorusGrid
from ..errors import ParameterError

logger = logging.getLogger(__name__)

MIN_RANGE_SAMPLES = 100


@dataclass
class RangeCheck:
    max_abs_corr: float
    stderr: float
    n_samples: int
    correlations: Dict[int, float] = field(default_factory=dict)

    def passes(self, n_stderr: float = 4.0) -> bool:
        return self.max_abs_corr <= n_stderr * self.stderr


def _correlation(x: np.ndarray, y: np.ndarray) -> float:
    x = x - x.mean()
    y = y - y.mean()
    denom = np.sqrt(np.sum(x * x) * np.sum(y * y))
    if denom == 0:
        return 0.0
    return float(np.sum(x * y) / denom)


def empirical_range_check(spec: EnsembleSpec, grid: TorusGrid, n_samples: int,
                          separations: Optional[Sequence[int]] = None,
                          master_seed: int = 0, axis: int = 0) -> RangeCheck:
    """
    Correlation of the conductance of edge (0, e_axis) with the edge at
    distance s along e_axis, estimated over n_samples realizations.

    Default separations run from range + 1 to L/2. Separations inside the
    range are accepted too, which is how the block ensemble's shared draws
    show up.
    """
    if n_samples < MIN_RANGE_SAMPLES:
        raise ParameterError(f"Range check needs at least {MIN_RANGE_SAMPLES} samples, got {n_samples}")
    spec.validate(grid)
    if separations is None:
        separations = range(spec.range_of_dependence + 1, grid.L // 2 + 1)
    separations = [int(s) for s in separations]
    if not separations:
        raise ParameterError(f"No separations to check on L={grid.L}")

    origin = (axis,) + (0,) * grid.d
    probes = {}
    for s in separations:
        site = [0] * grid.d
        site[axis] = s % grid.L
        probes[s] = (axis,) + tuple(site)

    base = np.empty(n_samples)
    shifted = {s: np.empty(n_samples) for s in separations}
    for n in range(n_samples):
        a = sample(spec, grid, master_seed, n).conductances
        base[n] = a[origin]
        for s, idx in probes.items():
            shifted[s][n] = a[idx]

    correlations = {s: _correlation(base, shifted[s]) for s in separations}
    worst = max(abs(c) for c in correlations.values())
    stderr = (1.0 - min(worst, 1.0) ** 2) / np.sqrt(n_samples - 1)
    logger.info(f"Range check {spec.kind}: max |corr| = {worst:.4f} over separations "
                f"{separations[0]}..{separations[-1]} (stderr {stderr:.4f})")
    return RangeCheck(worst, float(stderr), n_samples, correlations)
