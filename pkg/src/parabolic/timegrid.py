"""
Dyadic time grids.

Stored times are 0, 1, 2, 4, ..., t_max. The span [0, 1] and every dyadic
span [2^k, 2^(k+1)] is cut into `steps_per_dyad` equal substeps, so two
marches over overlapping ranges visit identical substep times.
"""
import math
import numpy as np
from typing import List, Tuple
from ..errors import ParameterError

MIN_STEPS_PER_DYAD = 4


def is_power_of_two(t: float) -> bool:
    if t < 1:
        return False
    k = math.log2(t)
    return abs(k - round(k)) < 1e-12


def dyadic_times(t_max: float) -> List[float]:
    if not is_power_of_two(t_max):
        raise ParameterError(f"t_max must be a power of two >= 1, got {t_max}")
    times = [0.0]
    t = 1.0
    while t <= t_max:
        times.append(t)
        t *= 2
    return times


def dyadic_time_grid(t_max: float, steps_per_dyad: int) -> np.ndarray:
    """All substep times from 0 to t_max inclusive."""
    if steps_per_dyad < MIN_STEPS_PER_DYAD:
        raise ParameterError(f"steps_per_dyad must be >= {MIN_STEPS_PER_DYAD}, got {steps_per_dyad}")
    stored = dyadic_times(t_max)
    points = [0.0]
    for start, end in zip(stored[:-1], stored[1:]):
        width = end - start
        points.extend(start + width * j / steps_per_dyad for j in range(1, steps_per_dyad + 1))
    return np.array(points)


def _grid_index(grid: np.ndarray, t: float) -> int:
    idx = int(np.argmin(np.abs(grid - t)))
    if not math.isclose(grid[idx], t, rel_tol=1e-12, abs_tol=1e-12):
        raise ParameterError(f"Time {t} is not on the substep grid")
    return idx


def enclosing_power(t: float) -> float:
    return 1.0 if t <= 1 else 2.0 ** math.ceil(math.log2(t) - 1e-12)


def segment(t: float, T: float, steps_per_dyad: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Substep times and step sizes for a march from t to T on the global grid.

    Raises:
        ParameterError: unless 0 <= t < T and both lie on the grid.
    """
    if not 0 <= t < T:
        raise ParameterError(f"Need 0 <= t < T, got t={t}, T={T}")
    grid = dyadic_time_grid(enclosing_power(T), steps_per_dyad)
    start, stop = _grid_index(grid, t), _grid_index(grid, T)
    times = grid[start:stop + 1]
    return times, np.diff(times)
