import logging
import math
import numpy as np
from dataclasses import dataclass, field, asdict
from typing import Any, Dict, List, Optional
from ..lattice.grid import TorusGrid
from ..ensembles.coefficients import EnsembleSpec
from ..elliptic.solver import SolverConfig
from ..parabolic.timegrid import is_power_of_two
from ..utils.hashing import short_hash
from ..errors import ParameterError

logger = logging.getLogger(__name__)

EXPERIMENT_NAMES = (
    'E1-clt-decay',
    'E2-systematic-error',
    'E3-semigroup-decay',
    'E4-corrector-growth',
    'E5-commutator-gaussianity',
    'E6-two-scale',
    'E7-propagator-error',
    'E8-minimal-radius',
)

MIN_SAMPLES = 30
MIN_EXPERIMENT_SIDE = 8
MIN_SAMPLES_BY_NAME = {'E5-commutator-gaussianity': 200}
# Ladder entries that must be powers of two.
DYADIC_KEYS = {
    'E2-systematic-error': ('T',),
    'E3-semigroup-decay': ('T',),
    'E5-commutator-gaussianity': ('t',),
    'E7-propagator-error': ('T', 't'),
}

STATUS_PASS = 'pass'
STATUS_FAIL = 'fail'
STATUS_DEGENERATE = 'degenerate-pass'


def _dyadic_range(lo: float, hi: float) -> List[float]:
    out = []
    t = float(lo)
    while t <= hi:
        out.append(t)
        t *= 2
    return out


def _scale_ladder(L: int) -> List[float]:
    """Geometric scales from 1 to L/8, at least four of them."""
    top = L / 8
    n = max(4, int(round(math.log2(top))) + 1)
    return [float(R) for R in np.geomspace(1.0, top, n)]


def default_ladder(name: str, grid: TorusGrid) -> Dict[str, Any]:
    L, d = grid.L, grid.d
    if name == 'E1-clt-decay':
        return {'T': float((L // 8) ** 2), 'scales': _scale_ladder(L)}
    if name == 'E2-systematic-error':
        return {'T': _dyadic_range(4, max(32, min(512, L * L / 8))), 'kappas': [1, 2], 'ref_kappa': 3}
    if name == 'E3-semigroup-decay':
        return {'T': _dyadic_range(4, max(32, min(1024, L * L / 4)))}
    if name == 'E4-corrector-growth':
        return {'T': _dyadic_range(1, max(8, (L // 8) ** 2))}
    if name == 'E5-commutator-gaussianity':
        t = float(max(1, (L // 16) ** 2))
        return {'t': t, 't_ratio': 4, 'scales': sorted({max(1.0, L / 32), L / 16, L / 8})}
    if name == 'E6-two-scale':
        return {'L': [32, 64, 128, 256]}
    if name == 'E7-propagator-error':
        T = float((L // 8) ** 2)
        return {'T': T, 't': [T / 16, T / 8, T / 4, T / 2]}
    if name == 'E8-minimal-radius':
        return {'T': float((L // 4) ** 2), 'delta': 0.01}
    raise ParameterError(f"Unknown experiment '{name}', expected one of {EXPERIMENT_NAMES}")


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    ensemble: EnsembleSpec
    grid: TorusGrid
    n_samples: int
    master_seed: int
    solver: SolverConfig = field(default_factory=SolverConfig)
    ladder: Dict[str, Any] = field(default_factory=dict)
    options: Dict[str, Any] = field(default_factory=dict)

    @property
    def resolved_ladder(self) -> Dict[str, Any]:
        ladder = default_ladder(self.name, self.grid)
        ladder.update(self.ladder)
        return ladder

    def option(self, key: str, default: Any = None) -> Any:
        return self.options.get(key, default)

    def validate(self) -> None:
        if self.name not in EXPERIMENT_NAMES:
            raise ParameterError(f"Unknown experiment '{self.name}', expected one of {EXPERIMENT_NAMES}")
        if self.grid.L < MIN_EXPERIMENT_SIDE:
            raise ParameterError(f"Experiments need L >= {MIN_EXPERIMENT_SIDE}, got {self.grid.L}")
        minimum = MIN_SAMPLES_BY_NAME.get(self.name, MIN_SAMPLES)
        if self.n_samples < minimum:
            raise ParameterError(f"{self.name} needs at least {minimum} samples, got {self.n_samples}")
        self.ensemble.validate(self.grid)
        ladder = self.resolved_ladder
        for key in DYADIC_KEYS.get(self.name, ()):
            values = ladder[key] if isinstance(ladder[key], (list, tuple)) else [ladder[key]]
            bad = [v for v in values if not is_power_of_two(float(v))]
            if bad:
                raise ParameterError(f"{self.name}: ladder '{key}' must be dyadic, got {bad}")
        if self.name == 'E4-corrector-growth' and self.grid.d != 2:
            raise ParameterError("E4-corrector-growth is defined for d = 2")
        if self.name == 'E6-two-scale':
            for L in ladder['L']:
                TorusGrid(self.grid.d, int(L))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'ensemble': self.ensemble.to_dict(),
            'grid': {'d': self.grid.d, 'L': self.grid.L},
            'n_samples': self.n_samples,
            'master_seed': self.master_seed,
            'solver': self.solver.to_dict(),
            'ladder': self.resolved_ladder,
            'options': dict(self.options),
        }

    def spec_hash(self) -> str:
        return short_hash(self.to_dict())


@dataclass
class Check:
    name: str
    passed: bool
    value: Optional[float] = None
    target: Optional[float] = None
    tolerance: Optional[float] = None
    detail: str = ''


@dataclass
class ExperimentReport:
    spec: Dict[str, Any]
    status: str
    checks: List[Check] = field(default_factory=list)
    channels: Dict[str, List[Dict[str, Any]]] = field(default_factory=dict)
    fits: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    failures: List[Dict[str, Any]] = field(default_factory=list)
    seeds: List[Dict[str, Any]] = field(default_factory=list)
    extras: Dict[str, Any] = field(default_factory=dict)
    wall_clock: float = 0.0

    @property
    def passed(self) -> bool:
        return self.status != STATUS_FAIL

    def to_dict(self) -> Dict[str, Any]:
        """Deterministic content: wall-clock and seeds are written to their own files."""
        out = asdict(self)
        out.pop('wall_clock')
        out.pop('seeds')
        return out


def decide_status(checks: List[Check], degenerate: bool = False) -> str:
    if any(not c.passed for c in checks):
        return STATUS_FAIL
    return STATUS_DEGENERATE if degenerate else STATUS_PASS
