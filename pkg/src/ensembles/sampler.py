"""
Seeded coefficient-field generators.

Randomness comes from the Philox counter-based generator keyed by
(master_seed, sample index). Position n of the stream is a pure function of
that key, so edge n gets the same draw regardless of which process or in
which order fields are generated.
"""
import logging
import numpy as np
from .coefficients import EnsembleSpec, CoefficientField
from ..lattice.grid import TorusGrid
from ..errors import ParameterError

logger = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1


def philox_key(master_seed: int, index: int) -> int:
    """128-bit Philox key: sample index in the high word, master seed in the low word."""
    if index < 0 or index > _MASK64:
        raise ParameterError(f"Sample index out of range: {index}")
    return (int(index) << 64) | (int(master_seed) & _MASK64)


def uniform_stream(master_seed: int, index: int, count: int) -> np.ndarray:
    """The first `count` uniforms on [0, 1) of the stream keyed by (master_seed, index)."""
    bit_generator = np.random.Philox(key=philox_key(master_seed, index))
    return np.random.Generator(bit_generator).random(count)


def sample(spec: EnsembleSpec, grid: TorusGrid, master_seed: int, index: int) -> CoefficientField:
    spec.validate(grid)
    lam = spec.lam
    shape = (grid.d,) + grid.shape

    if spec.kind == 'bernoulli':
        draws = uniform_stream(master_seed, index, grid.n_edges).reshape(shape)
        values = np.where(draws < spec.p, lam, 1.0)
    elif spec.kind == 'uniform':
        draws = uniform_stream(master_seed, index, grid.n_edges).reshape(shape)
        values = lam + (1.0 - lam) * draws
    else:
        m = spec.block_size
        n_per_side = grid.L // m
        n_blocks = n_per_side ** grid.d
        draws = uniform_stream(master_seed, index, grid.d + n_blocks)
        # random block origin keeps the ensemble stationary
        offset = np.floor(draws[:grid.d] * m).astype(int)
        block_values = (lam + (1.0 - lam) * draws[grid.d:]).reshape((n_per_side,) * grid.d)
        coords = grid.coordinates()
        block_index = tuple(((coords[i] - offset[i]) % grid.L) // m for i in range(grid.d))
        values = np.broadcast_to(block_values[block_index], shape)

    return CoefficientField(grid, np.minimum(np.maximum(values, lam), 1.0), lam)
