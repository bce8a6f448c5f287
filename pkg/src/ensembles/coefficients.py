import numpy as np
from dataclasses import dataclass, asdict
from typing import Any, Dict, Optional
from ..lattice.grid import TorusGrid
from ..errors import ParameterError

KINDS = ('bernoulli', 'uniform', 'block')

DEFAULT_LAMBDA = 0.25
DEFAULT_P = 0.5


@dataclass(frozen=True)
class EnsembleSpec:
    kind: str = 'bernoulli'
    lam: float = DEFAULT_LAMBDA
    p: float = DEFAULT_P
    block_size: Optional[int] = None

    def validate(self, grid: TorusGrid) -> None:
        if self.kind not in KINDS:
            raise ParameterError(f"Unknown ensemble kind '{self.kind}', expected one of {KINDS}")
        if not 0 < self.lam < 1:
            raise ParameterError(f"Ellipticity ratio lambda must lie in (0, 1), got {self.lam}")
        if self.kind == 'bernoulli' and not 0 <= self.p <= 1:
            raise ParameterError(f"Bernoulli probability must lie in [0, 1], got {self.p}")
        if self.kind == 'block':
            m = self.block_size
            if m is None or m < 1 or grid.L % m:
                raise ParameterError(f"Block size {m} must be a positive divisor of L={grid.L}")

    @property
    def range_of_dependence(self) -> int:
        return self.block_size if self.kind == 'block' else 1

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class CoefficientField:
    """One conductance per edge, shape (d, L, ..., L), all in [lam, 1]."""
    grid: TorusGrid
    conductances: np.ndarray
    lam: float

    def __post_init__(self):
        arr = np.array(self.conductances, dtype=float)
        expected = (self.grid.d,) + self.grid.shape
        if arr.shape != expected:
            raise ParameterError(f"Conductances must have shape {expected}, got {arr.shape}")
        if arr.min() < self.lam or arr.max() > 1.0:
            raise ParameterError(
                f"Conductances outside [{self.lam}, 1]: min={arr.min():.4g}, max={arr.max():.4g}")
        arr.flags.writeable = False
        object.__setattr__(self, 'conductances', arr)

    @classmethod
    def constant(cls, grid: TorusGrid, value: float, lam: Optional[float] = None) -> 'CoefficientField':
        lam = value if lam is None else lam
        return cls(grid, np.full((grid.d,) + grid.shape, float(value)), lam)

    @classmethod
    def laminate(cls, grid: TorusGrid, axis: int, c1: float, c2: float) -> 'CoefficientField':
        """Stripes perpendicular to e_axis: every edge at x gets c1 if x_axis is even else c2."""
        parity = grid.coordinates()[axis] % 2
        layer = np.where(parity == 0, c1, c2)
        return cls(grid, np.broadcast_to(layer, (grid.d,) + grid.shape), min(c1, c2))

    def is_constant(self) -> bool:
        return bool(np.all(self.conductances == self.conductances.flat[0]))
