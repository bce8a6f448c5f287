"""
Crank-Nicolson semigroup with matched trapezoid flux accumulation.

One step of size h solves ((2/h) I + A) w = 2 v and updates

    v <- v - A w,    phi <- phi + w

which is CN for dv/dt = -A v with w = (h/2)(v_n + v_{n+1}). Since every
update of v is minus A of the increment added to phi, div(a(grad phi + e))
equals v at every step up to roundoff.
"""
import logging
import math
import numpy as np
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple
from ..lattice.grid import ScalarField, VectorField
from ..lattice.calculus import forward_difference, divergence_values
from ..ensembles.coefficients import CoefficientField
from ..elliptic.solver import SolverConfig, apply_operator, solve_values
from ..elliptic.corrector import corrector_rhs, flux
from ..errors import ParameterError
from .timegrid import dyadic_times, segment

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class YoshidaAccumulation:
    """Truncated Laplace transforms of one trajectory for a cutoff T."""
    T: float
    phi_T: ScalarField
    q_T: VectorField


@dataclass(frozen=True, eq=False)
class SemigroupTrajectory:
    a: CoefficientField
    e: int
    times: Tuple[float, ...]
    u: Tuple[ScalarField, ...]
    phi: Tuple[ScalarField, ...]
    q: Tuple[VectorField, ...]
    steps_per_dyad: int
    cg_iterations: int = 0
    yoshida: Dict[float, YoshidaAccumulation] = field(default_factory=dict)

    def index_of(self, t: float) -> int:
        for n, s in enumerate(self.times):
            if math.isclose(s, t, rel_tol=1e-12, abs_tol=1e-12):
                return n
        raise ParameterError(f"Time {t} is not stored on this trajectory (times {list(self.times)})")

    def state_at(self, t: float) -> Tuple[ScalarField, ScalarField, VectorField]:
        n = self.index_of(t)
        return self.u[n], self.phi[n], self.q[n]

    @property
    def t_max(self) -> float:
        return self.times[-1]


def _exp_weights(start: float, h: float, T: float) -> Tuple[float, float]:
    """Exact integrals of exp(-tau/T) against the two linear hat functions of [start, start + h]."""
    c = h / T
    scale = math.exp(-start / T)
    one_minus = -math.expm1(-c)
    w1 = T * (one_minus / c - math.exp(-c))
    w0 = T * one_minus - w1
    return scale * w0, scale * w1


def _a_grad(a: CoefficientField, values: np.ndarray) -> np.ndarray:
    """a grad(values), edgewise."""
    return np.stack([a.conductances[i] * forward_difference(values, i) for i in range(a.grid.d)])


def _march(a: CoefficientField, v0: np.ndarray, times: np.ndarray, steps: np.ndarray,
           record: Sequence[float], cfg: SolverConfig,
           yoshida_cutoffs: Sequence[float] = ()) -> Dict:
    """
    Advance v from times[0] through the given steps.

    Returns the (v, accumulated increment) pairs at the requested times plus
    the exponential-weighted integrals of v and of the accumulated increment.
    """
    v = np.array(v0, dtype=float)
    acc = np.zeros_like(v)
    states = {}
    wanted = [float(t) for t in record]

    def _capture(t):
        for s in wanted:
            if math.isclose(s, t, rel_tol=1e-12, abs_tol=1e-12):
                states[s] = (v.copy(), acc.copy())

    laplace_u = {T: np.zeros_like(v) for T in yoshida_cutoffs}
    laplace_acc = {T: np.zeros_like(v) for T in yoshida_cutoffs}
    iterations = 0

    _capture(times[0])
    for n, h in enumerate(steps):
        t_n = float(times[n])
        result = solve_values(a, 2.0 / h, 2.0 * v, cfg)
        w = result.solution
        iterations += result.iterations
        v_next = v - apply_operator(a, 0.0, w)
        acc_next = acc + w
        for T in yoshida_cutoffs:
            w0, w1 = _exp_weights(t_n, float(h), T)
            laplace_u[T] += w0 * v + w1 * v_next
            laplace_acc[T] += (w0 * acc + w1 * acc_next) / T
        v, acc = v_next, acc_next
        _capture(times[n + 1])

    return {'states': states, 'laplace_u': laplace_u, 'laplace_acc': laplace_acc,
            'iterations': iterations, 'final': (v, acc)}


def evolve_semigroup(a: CoefficientField, e: int, t_max: float, steps_per_dyad: int = 8,
                     cfg: Optional[SolverConfig] = None,
                     yoshida_cutoffs: Sequence[float] = ()) -> SemigroupTrajectory:
    """
    u solves du/dt = div(a grad u) with u(0) = div(a e); phi(t) integrates u
    and q(t) = a(grad phi(t) + e). States are kept at 0, 1, 2, 4, ..., t_max.

    With yoshida_cutoffs, also returns for each T the truncated integrals
    int_0^t_max exp(-t/T) u dt and int_0^t_max exp(-t/T) q dt / T plus the
    tail exp(-t_max/T) q(t_max).
    """
    cfg = cfg or SolverConfig()
    stored = dyadic_times(t_max)
    times, steps = segment(0.0, t_max, steps_per_dyad)
    u0 = corrector_rhs(a, e).values
    out = _march(a, u0, times, steps, stored, cfg, yoshida_cutoffs)

    grid = a.grid
    us, phis, qs = [], [], []
    for t in stored:
        v, acc = out['states'][t]
        phi = ScalarField(grid, acc)
        us.append(ScalarField(grid, v))
        phis.append(phi)
        qs.append(flux(a, phi, e))

    yoshida = {}
    _, acc_final = out['final']
    for T in yoshida_cutoffs:
        tail = math.exp(-t_max / T)
        # q is affine in phi; the constant part carries total weight one
        phi_q = out['laplace_acc'][T] + tail * acc_final
        q_T = VectorField(grid, _a_grad(a, phi_q) + _constant_flux(a, e))
        yoshida[T] = YoshidaAccumulation(T, ScalarField(grid, out['laplace_u'][T]), q_T)

    logger.debug(f"Semigroup e={e}, t_max={t_max}: {len(steps)} steps, {out['iterations']} CG iterations")
    return SemigroupTrajectory(a, e, tuple(stored), tuple(us), tuple(phis), tuple(qs),
                               steps_per_dyad, out['iterations'], yoshida)


def _constant_flux(a: CoefficientField, e: int) -> np.ndarray:
    values = np.zeros((a.grid.d,) + a.grid.shape)
    values[e] = a.conductances[e]
    return values


def propagate_S(a: CoefficientField, q0: VectorField, t: float, T: float,
                steps: int = 8, cfg: Optional[SolverConfig] = None) -> VectorField:
    """
    S_{t->T} q0 = q0 + int_t^T a grad v, v solving the semigroup from div q0 at time t.

    t and T must lie on the global substep grid with `steps` substeps per dyad.
    """
    cfg = cfg or SolverConfig()
    if q0.grid != a.grid:
        raise ParameterError("Coefficient field and flux live on different grids")
    times, sizes = segment(t, T, steps)
    out = _march(a, divergence_values(q0.values), times, sizes, [], cfg)
    _, acc = out['final']
    return VectorField(a.grid, q0.values + _a_grad(a, acc))
