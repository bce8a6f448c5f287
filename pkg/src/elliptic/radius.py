import logging
import numpy as np
from typing import Dict, Optional, Sequence
from ..lattice.grid import ScalarField, SkewField
from ..errors import ParameterError

logger = logging.getLogger(__name__)

DEFAULT_DELTA = 0.01


def dyadic_radii(L: int):
    radii = []
    R = 1
    while R <= L // 4:
        radii.append(R)
        R *= 2
    return radii


def _ball(values: np.ndarray, center: Sequence[int], R: int) -> np.ndarray:
    """Restriction of a (components, L, ..., L) array to the sup-norm ball of radius R, wrapped."""
    L = values.shape[-1]
    index = [np.arange(c - R, c + R + 1) % L for c in center]
    return values[(slice(None),) + np.ix_(*index)]


def ball_oscillation(phi: ScalarField, sigma: SkewField, R: int,
                     center: Optional[Sequence[int]] = None) -> float:
    """
    (1/R^2) times the ball average of |(phi, sigma) - ball average|^2.

    |sigma|^2 is the Frobenius norm of the full skew tensor, so every
    independent component counts twice.
    """
    grid = phi.grid
    center = tuple(center) if center is not None else (0,) * grid.d
    phi_ball = _ball(phi.values[np.newaxis], center, R)
    sigma_ball = _ball(sigma.values, center, R)
    phi_dev = phi_ball - phi_ball.mean()
    sigma_dev = sigma_ball - sigma_ball.reshape(sigma_ball.shape[0], -1).mean(axis=1).reshape(
        (-1,) + (1,) * grid.d)
    n = phi_ball[0].size
    total = np.sum(phi_dev * phi_dev) + 2.0 * np.sum(sigma_dev * sigma_dev)
    return float(total / n) / R ** 2


def oscillation_profile(phi: ScalarField, sigma: SkewField,
                        center: Optional[Sequence[int]] = None) -> Dict[int, float]:
    if phi.grid != sigma.grid:
        raise ParameterError("phi and sigma live on different grids")
    return {R: ball_oscillation(phi, sigma, R, center) for R in dyadic_radii(phi.grid.L)}


def minimal_radius(phi: ScalarField, sigma: SkewField, delta: float = DEFAULT_DELTA,
                   center: Optional[Sequence[int]] = None) -> int:
    """
    Smallest dyadic r such that the oscillation is <= delta at every dyadic
    R in [r, L/4]. Returns L/4 when no radius qualifies.
    """
    if delta <= 0:
        raise ParameterError(f"delta must be positive, got {delta}")
    profile = oscillation_profile(phi, sigma, center)
    radii = sorted(profile)
    r_star = radii[-1]
    for R in reversed(radii):
        if profile[R] > delta:
            break
        r_star = R
    logger.debug(f"minimal radius {r_star} (delta={delta})")
    return r_star
