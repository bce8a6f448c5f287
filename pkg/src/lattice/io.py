"""
Flat binary lattice format.

    magic "HLF1" | d, L, components as little-endian uint32 | float64 '<f8' row-major
"""
import logging
import numpy as np
from dataclasses import dataclass
from typing import Tuple, Union
from .grid import TorusGrid, ScalarField, VectorField, SkewField
from ..errors import ParameterError

logger = logging.getLogger(__name__)

MAGIC = b"HLF1"
_HEADER = np.dtype('<u4')
_DATA = np.dtype('<f8')


@dataclass(frozen=True)
class FieldHeader:
    d: int
    L: int
    components: int

    @property
    def grid(self) -> TorusGrid:
        return TorusGrid(self.d, self.L)


def _as_components(values: np.ndarray, grid: TorusGrid) -> np.ndarray:
    return values.reshape((-1,) + grid.shape)


def encode_field(grid: TorusGrid, values: np.ndarray) -> bytes:
    stacked = _as_components(np.asarray(values, dtype=float), grid)
    header = np.array([grid.d, grid.L, stacked.shape[0]], dtype=_HEADER)
    return MAGIC + header.tobytes() + np.ascontiguousarray(stacked, dtype=_DATA).tobytes()


def decode_field(payload: bytes) -> Tuple[FieldHeader, np.ndarray]:
    if payload[:4] != MAGIC:
        raise ParameterError(f"Not a lattice field file (magic {payload[:4]!r})")
    d, L, components = (int(v) for v in np.frombuffer(payload, dtype=_HEADER, count=3, offset=4))
    header = FieldHeader(d, L, components)
    expected = components * L ** d * _DATA.itemsize
    body = payload[16:]
    if len(body) != expected:
        raise ParameterError(f"Field body has {len(body)} bytes, header implies {expected}")
    values = np.frombuffer(body, dtype=_DATA).reshape((components,) + (L,) * d).astype(float)
    return header, values


def write_field(path: str, field: Union[ScalarField, VectorField, SkewField]) -> None:
    with open(path, 'wb') as f:
        f.write(encode_field(field.grid, field.values))
    logger.debug(f"Wrote {type(field).__name__} to {path}")


def write_values(path: str, grid: TorusGrid, values: np.ndarray) -> None:
    with open(path, 'wb') as f:
        f.write(encode_field(grid, values))


def read_field(path: str, kind: str = 'auto') -> Union[ScalarField, VectorField, SkewField, Tuple[FieldHeader, np.ndarray]]:
    """
    Read a field file.

    kind: 'scalar', 'vector', 'skew', or 'raw' (header plus component array).
    'auto' picks scalar for one component and vector for d components.
    """
    with open(path, 'rb') as f:
        header, values = decode_field(f.read())
    grid = header.grid
    if kind == 'raw':
        return header, values
    if kind == 'auto':
        kind = 'scalar' if header.components == 1 else 'vector'
    if kind == 'scalar':
        return ScalarField(grid, values[0])
    if kind == 'vector':
        return VectorField(grid, values)
    if kind == 'skew':
        return SkewField(grid, values)
    raise ParameterError(f"Unknown field kind '{kind}'")
