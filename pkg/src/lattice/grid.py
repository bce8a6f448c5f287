import numpy as np
from dataclasses import dataclass
from typing import List, Tuple
from ..errors import ParameterError

# Experiments require L >= 8 (see Config); dense-matrix oracles run on L = 4.
MIN_SIDE = 4


@dataclass(frozen=True)
class TorusGrid:
    """Periodic lattice Z^d / L Z^d with unit spacing."""
    d: int
    L: int

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ParameterError(f"Dimension must be 2 or 3, got {self.d}")
        if self.L < MIN_SIDE or self.L & (self.L - 1):
            raise ParameterError(
                f"Side length must be a power of two >= {MIN_SIDE}, got {self.L}")

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.L,) * self.d

    @property
    def n_sites(self) -> int:
        return self.L ** self.d

    @property
    def n_edges(self) -> int:
        return self.d * self.n_sites

    @property
    def pairs(self) -> List[Tuple[int, int]]:
        """Index pairs (j, k), j < k, in the storage order of SkewField."""
        return [(j, k) for j in range(self.d) for k in range(j + 1, self.d)]

    @property
    def spatial_axes(self) -> Tuple[int, ...]:
        return tuple(range(self.d))

    def coordinates(self) -> np.ndarray:
        return np.indices(self.shape)

    def periodic_offsets(self) -> np.ndarray:
        """Signed coordinates in [-L/2, L/2), shape (d, L, ..., L)."""
        x = self.coordinates()
        return np.where(x >= self.L // 2, x - self.L, x)


def _freeze(values: np.ndarray, expected: Tuple[int, ...], kind: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.shape != expected:
        raise ParameterError(f"{kind} expects shape {expected}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{kind} values must be finite")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'values', _freeze(self.values, self.grid.shape, 'ScalarField'))

    @property
    def n_components(self) -> int:
        return 1

    def mean(self) -> float:
        return float(self.values.mean())

    @classmethod
    def zeros(cls, grid: TorusGrid) -> 'ScalarField':
        return cls(grid, np.zeros(grid.shape))


@dataclass(frozen=True, eq=False)
class VectorField:
    """Component i lives on the edge from x to x + e_i, stored at x."""
    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self):
        expected = (self.grid.d,) + self.grid.shape
        object.__setattr__(self, 'values', _freeze(self.values, expected, 'VectorField'))

    @property
    def n_components(self) -> int:
        return self.grid.d

    def component(self, i: int) -> ScalarField:
        return ScalarField(self.grid, self.values[i])

    def mean(self) -> np.ndarray:
        return self.values.reshape(self.grid.d, -1).mean(axis=1)

    @classmethod
    def zeros(cls, grid: TorusGrid) -> 'VectorField':
        return cls(grid, np.zeros((grid.d,) + grid.shape))

    @classmethod
    def constant(cls, grid: TorusGrid, vector) -> 'VectorField':
        vector = np.asarray(vector, dtype=float)
        return cls(grid, np.broadcast_to(vector.reshape((grid.d,) + (1,) * grid.d),
                                         (grid.d,) + grid.shape))


@dataclass(frozen=True, eq=False)
class SkewField:
    """Independent components sigma_jk, j < k, in the order of TorusGrid.pairs."""
    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self):
        expected = (len(self.grid.pairs),) + self.grid.shape
        object.__setattr__(self, 'values', _freeze(self.values, expected, 'SkewField'))

    @property
    def n_components(self) -> int:
        return len(self.grid.pairs)

    def component(self, j: int, k: int) -> np.ndarray:
        if j == k:
            return np.zeros(self.grid.shape)
        if j > k:
            return -self.component(k, j)
        return self.values[self.grid.pairs.index((j, k))]

    def full(self) -> np.ndarray:
        """Full tensor, shape (d, d, L, ..., L); skew by construction."""
        d = self.grid.d
        tensor = np.zeros((d, d) + self.grid.shape)
        for n, (j, k) in enumerate(self.grid.pairs):
            tensor[j, k] = self.values[n]
            tensor[k, j] = -self.values[n]
        return tensor

    @classmethod
    def zeros(cls, grid: TorusGrid) -> 'SkewField':
        return cls(grid, np.zeros((len(grid.pairs),) + grid.shape))
