import logging
import numpy as np
from dataclasses import dataclass, asdict
from typing import Any, Dict, Sequence
from scipy import stats
from ..errors import ParameterError

logger = logging.getLogger(__name__)

MIN_POINTS = 4


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    slope_stderr: float
    r_squared: float
    n_points: int

    def within(self, target: float, tolerance: float) -> bool:
        return abs(self.slope - target) <= tolerance

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def linear_fit(xs: Sequence[float], ys: Sequence[float]) -> RateFit:
    """Ordinary least squares y = slope * x + intercept."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape:
        raise ParameterError(f"Length mismatch: {x.size} xs vs {y.size} ys")
    if x.size < MIN_POINTS:
        raise ParameterError(f"Rate fit needs at least {MIN_POINTS} points, got {x.size}")
    if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
        raise ParameterError("Rate fit inputs must be finite")
    if np.ptp(x) == 0:
        raise ParameterError("Degenerate x-range: all abscissae coincide")

    result = stats.linregress(x, y)
    r_squared = float(result.rvalue ** 2) if np.ptp(y) > 0 else 1.0
    return RateFit(float(result.slope), float(result.intercept), float(result.stderr),
                   r_squared, int(x.size))


def rate_fit(xs: Sequence[float], ys: Sequence[float]) -> RateFit:
    """Power-law exponent: least squares on (log x, log y)."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ParameterError("Rate fit needs strictly positive data")
    fit = linear_fit(np.log(x), np.log(y))
    logger.debug(f"Rate fit over {fit.n_points} points: slope {fit.slope:.4f} +- {fit.slope_stderr:.4f}")
    return fit
