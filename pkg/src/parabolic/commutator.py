import logging
import numpy as np
from dataclasses import dataclass
from typing import Optional, Sequence
from ..lattice.grid import VectorField
from ..lattice.calculus import forward_difference
from ..errors import ParameterError
from .semigroup import SemigroupTrajectory
from .propagators import propagate_S_hom

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CommutatorField:
    t: float
    direction: int
    Xi: VectorField
    abar: np.ndarray


def _by_direction(trajectories: Sequence[SemigroupTrajectory]):
    if not trajectories:
        raise ParameterError("No trajectories given")
    d = trajectories[0].a.grid.d
    found = {tr.e: tr for tr in trajectories}
    missing = [i for i in range(d) if i not in found]
    if missing:
        raise ParameterError(f"Commutator needs trajectories for every direction, missing {missing}")
    return [found[i] for i in range(d)]


def gradient_plus_e(trajectory: SemigroupTrajectory, t: float) -> np.ndarray:
    """grad phi(t) + e as a raw (d, L, ..., L) array."""
    _, phi, _ = trajectory.state_at(t)
    d = trajectory.a.grid.d
    out = np.stack([forward_difference(phi.values, i) for i in range(d)])
    out[trajectory.e] += 1.0
    return out


def centering_matrix(trajectories: Sequence[SemigroupTrajectory], t: float) -> np.ndarray:
    """Column j = spatial mean of q(t) for direction e_j, one realization."""
    ordered = _by_direction(trajectories)
    return np.column_stack([tr.state_at(t)[2].mean() for tr in ordered])


def ensemble_abar(per_sample: Sequence[np.ndarray]) -> np.ndarray:
    """Cross-sample mean of per-realization centering matrices."""
    if not per_sample:
        raise ParameterError("No samples to average")
    return np.mean(np.stack(per_sample), axis=0)


def apply_constant(matrix: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Pointwise matrix-vector product on a (d, L, ..., L) array."""
    return np.tensordot(np.asarray(matrix, dtype=float), values, axes=([1], [0]))


def commutator(trajectories: Sequence[SemigroupTrajectory], t: float, direction: int = 0,
               abar: Optional[np.ndarray] = None) -> CommutatorField:
    """
    Xi(t) e = q(t) - abar (grad phi(t) + e) for e = e_direction.

    Without abar the realization's own centering matrix is used, which makes
    the spatial mean of Xi(t) e vanish; pass the ensemble matrix to center
    across samples.
    """
    ordered = _by_direction(trajectories)
    if not 0 <= direction < len(ordered):
        raise ParameterError(f"Direction {direction} out of range")
    if abar is None:
        abar = centering_matrix(ordered, t)
    traj = ordered[direction]
    _, _, q = traj.state_at(t)
    Xi = q.values - apply_constant(abar, gradient_plus_e(traj, t))
    return CommutatorField(t, direction, VectorField(q.grid, Xi), np.asarray(abar, dtype=float))


def homogenization_error(trajectory: SemigroupTrajectory, t: float, T: float,
                         a_const: np.ndarray) -> VectorField:
    """q(T) - S^hom_{t->T} q(t)."""
    if t > T:
        raise ParameterError(f"Need t <= T, got t={t}, T={T}")
    _, _, q_t = trajectory.state_at(t)
    _, _, q_T = trajectory.state_at(T)
    propagated = propagate_S_hom(a_const, q_t, t, T)
    return VectorField(q_T.grid, q_T.values - propagated.values)


def homogenization_error_field(trajectory: SemigroupTrajectory, t: float, T: float,
                               a_const: np.ndarray) -> VectorField:
    """a_hom grad phi(T) - (a_hom grad phi(t) + (S^hom_{t->T} - 1) q(t))."""
    if t > T:
        raise ParameterError(f"Need t <= T, got t={t}, T={T}")
    grid = trajectory.a.grid
    e_vec = np.zeros(grid.d)
    e_vec[trajectory.e] = 1.0
    shift = e_vec.reshape((grid.d,) + (1,) * grid.d)
    grad_T = gradient_plus_e(trajectory, T) - shift
    grad_t = gradient_plus_e(trajectory, t) - shift
    _, _, q_t = trajectory.state_at(t)
    correction = propagate_S_hom(a_const, q_t, t, T).values - q_t.values
    values = apply_constant(a_const, grad_T) - apply_constant(a_const, grad_t) - correction
    return VectorField(grid, values)
