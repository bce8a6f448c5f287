"""
Experiments on the parabolic semigroup: decay of grad u (E3), Gaussian
behaviour of the homogenization commutator (E5) and the error of the
constant-coefficient propagator (E7).
"""
import logging
import math
import numpy as np
from typing import Any, Dict, List, Optional
from ..lattice.grid import VectorField
from ..lattice.calculus import forward_difference
from ..elliptic.extrapolation import a_hT_kappa
from ..parabolic.semigroup import evolve_semigroup
from ..parabolic.commutator import centering_matrix, commutator, gradient_plus_e, ensemble_abar, homogenization_error
from ..parabolic.propagators import helmholtz_split
from ..statistics.clt import origin_values
from ..statistics.covariance import covariance_Q_from_means
from ..statistics.normality import normality_report, gaussian_test_function, support_distance_ok, value_correlation
from ..errors import ParameterError
from .base import Experiment, SampleResults, REFERENCE_OFFSET, row, rms_row
from .spec import Check, ExperimentReport

logger = logging.getLogger(__name__)

DEFAULT_STEPS_PER_DYAD = 8
DEFAULT_REFERENCE_SAMPLES = 8


class SemigroupDecay(Experiment):
    """RMS of grad u(T) over the dyadic T ladder."""
    name = 'E3-semigroup-decay'

    def sample(self, index: int) -> Dict[str, Any]:
        a = self.coefficient(index)
        Ts = [float(T) for T in self.ladder['T']]
        steps = int(self.spec.option('steps_per_dyad', DEFAULT_STEPS_PER_DYAD))
        e = int(self.spec.option('direction', 0))
        traj = evolve_semigroup(a, e, max(Ts), steps, self.cfg)
        squares = []
        for T in Ts:
            u, _, _ = traj.state_at(T)
            grad = np.stack([forward_difference(u.values, i) for i in range(self.grid.d)])
            squares.append(float(np.sum(grad * grad)) / self.grid.n_sites)
        return {'grad_u_sq': squares, 'cg_iterations': traj.cg_iterations}

    def reduce(self, results: SampleResults) -> ExperimentReport:
        Ts = [float(T) for T in self.ladder['T']]
        usable = self.usable(results)
        rows = [rms_row(T, [r['grad_u_sq'][k] for _, r in usable]) for k, T in enumerate(Ts)]
        fits: Dict[str, Dict[str, Any]] = {}
        if all(r['estimate'] == 0 for r in rows):
            logger.warning(f"{self.name}: grad u vanishes identically")
            return self.build_report(results, [], {'grad_u': rows}, fits, degenerate=True)
        target = -(1 + self.grid.d / 4)
        check = self.slope_check('grad u slope', Ts, [r['estimate'] for r in rows], target,
                                 float(self.spec.option('slope_tolerance', 0.2)), fits)
        return self.build_report(results, [check], {'grad_u': rows}, fits)


class CommutatorGaussianity(Experiment):
    """
    Test integrals of the commutator Xi(t) e_0 against Gaussian bumps.

    Per sample the integrals of q and of grad phi + e are stored separately,
    so the reduction can center with the ensemble matrix abar(t).
    """
    name = 'E5-commutator-gaussianity'

    def prepare(self) -> None:
        L = self.grid.L
        self.bump_scale = max(1.0, L / 16)
        self.bump_centers = [(0,) * self.grid.d, (L // 2,) + (0,) * (self.grid.d - 1)]
        self.separation = L // 4
        bumps = [gaussian_test_function(self.grid, self.bump_scale, c, cutoff=2 * self.bump_scale)
                 for c in self.bump_centers]
        if not support_distance_ok(bumps[0], bumps[1], self.separation):
            raise ParameterError(f"Independence bumps closer than {self.separation} on L={L}")

    def _times(self):
        t = float(self.ladder['t'])
        return t, t * float(self.ladder.get('t_ratio', 4))

    @staticmethod
    def _integrals(zeta: np.ndarray, q: np.ndarray, grad_e: np.ndarray):
        return ([float(np.sum(zeta * q[i])) for i in range(q.shape[0])],
                [float(np.sum(zeta * grad_e[j])) for j in range(grad_e.shape[0])])

    def sample(self, index: int) -> Dict[str, Any]:
        a = self.coefficient(index)
        t, t2 = self._times()
        steps = int(self.spec.option('steps_per_dyad', DEFAULT_STEPS_PER_DYAD))
        trajs = [evolve_semigroup(a, e, t2, steps, self.cfg) for e in range(self.grid.d)]
        _, _, q = trajs[0].state_at(t)
        grad_e = gradient_plus_e(trajs[0], t)
        result: Dict[str, Any] = {
            'C_t': centering_matrix(trajs, t).tolist(),
            'C_t2': centering_matrix(trajs, t2).tolist(),
            'Iq': [], 'Ig': [], 'ind_q': [], 'ind_g': [],
        }
        for R in self.ladder['scales']:
            Iq, Ig = self._integrals(gaussian_test_function(self.grid, float(R)), q.values, grad_e)
            result['Iq'].append(Iq)
            result['Ig'].append(Ig)
        for center in self.bump_centers:
            zeta = gaussian_test_function(self.grid, self.bump_scale, center, cutoff=2 * self.bump_scale)
            Iq, Ig = self._integrals(zeta, q.values, grad_e)
            result['ind_q'].append(Iq)
            result['ind_g'].append(Ig)

        # split of the realization-centered commutator
        xi = commutator(trajs, t)
        solenoidal, potential = helmholtz_split(xi.abar, xi.Xi)
        zeta = gaussian_test_function(self.grid, float(max(self.ladder['scales'])))
        result['split'] = [float(np.sum(zeta * solenoidal.values[0])), float(np.sum(zeta * potential.values[0]))]
        return result

    @staticmethod
    def _functional(Iq: List[float], Ig: List[float], abar: np.ndarray) -> float:
        return float(Iq[0] - np.dot(abar[0], Ig))

    def reduce(self, results: SampleResults) -> ExperimentReport:
        usable = self.usable(results)
        scales = [float(R) for R in self.ladder['scales']]
        t, t2 = self._times()
        checks: List[Check] = []
        channels: Dict[str, List[Dict[str, Any]]] = {'skewness': [], 'excess_kurtosis': [], 'ks_distance': []}
        extras: Dict[str, Any] = {}
        if not usable:
            checks.append(Check('usable samples', False, 0, None, None))
            return self.build_report(results, checks, {}, {})
        abar = ensemble_abar([np.asarray(r['C_t']) for _, r in usable])
        extras['abar'] = abar.tolist()

        largest: Optional[Any] = None
        no_spread = True
        for k, R in enumerate(scales):
            values = [self._functional(r['Iq'][k], r['Ig'][k], abar) for _, r in usable]
            no_spread = no_spread and float(np.ptp(values)) == 0.0
            try:
                rep = normality_report(values)
            except ParameterError as e:
                checks.append(Check(f"normality R={R:g}", False, None, None, None, detail=str(e)))
                continue
            channels['skewness'].append(row(R, rep.skewness, rep.skewness_stderr, rep.n_samples))
            channels['excess_kurtosis'].append(row(R, rep.excess_kurtosis, rep.kurtosis_stderr, rep.n_samples))
            channels['ks_distance'].append(row(R, rep.ks_distance, rep.ks_stderr, rep.n_samples))
            if R == max(scales):
                largest = rep
        if largest is not None:
            checks.append(Check('skewness at largest scale', abs(largest.skewness) <= self.n_stderr * largest.skewness_stderr,
                                largest.skewness, 0.0, self.n_stderr * largest.skewness_stderr))
            checks.append(Check('excess kurtosis at largest scale',
                                abs(largest.excess_kurtosis) <= self.n_stderr * largest.kurtosis_stderr,
                                largest.excess_kurtosis, 0.0, self.n_stderr * largest.kurtosis_stderr))

        x = [self._functional(r['ind_q'][0], r['ind_g'][0], abar) for _, r in usable]
        y = [self._functional(r['ind_q'][1], r['ind_g'][1], abar) for _, r in usable]
        try:
            corr = value_correlation(x, y)
        except ParameterError as e:
            checks.append(Check('disjoint-support correlation', False, None, 0.0, None, detail=str(e)))
        else:
            checks.append(Check('disjoint-support correlation', corr.is_independent(self.n_stderr),
                                corr.correlation, 0.0, self.n_stderr * corr.stderr))

        checks.extend(self._covariance_checks(usable, t, t2, extras))

        split = np.asarray([r['split'] for _, r in usable])
        try:
            split_corr = value_correlation(split[:, 0], split[:, 1])
            extras['split_correlation'] = {'correlation': split_corr.correlation, 'stderr': split_corr.stderr,
                                           'N': split_corr.n_samples}
        except (ParameterError, IndexError) as e:
            logger.warning(f"{self.name}: no split correlation: {e}")
        return self.build_report(results, checks, channels, {}, degenerate=no_spread, extras=extras)

    def _covariance_checks(self, usable: SampleResults, t: float, t2: float, extras: Dict[str, Any]) -> List[Check]:
        try:
            Q1 = covariance_Q_from_means([np.asarray(r['C_t'])[:, 0] for _, r in usable], self.grid, t)
            Q2 = covariance_Q_from_means([np.asarray(r['C_t2'])[:, 0] for _, r in usable], self.grid, t2)
        except ParameterError as e:
            return [Check('covariance Cauchy in t', False, None, None, None, detail=str(e))]
        extras['Q'] = {str(t): Q1.Q_hat.tolist(), str(t2): Q2.Q_hat.tolist()}
        budget = self.n_stderr * np.sqrt(Q1.stderr ** 2 + Q2.stderr ** 2)
        gap = np.abs(Q1.Q_hat - Q2.Q_hat)
        worst = float(np.max(gap - budget))
        return [
            Check('covariance Cauchy in t', bool(np.all(gap <= budget)), worst, 0.0, None,
                  detail=f"max |Q(t) - Q({t2:g})| = {float(np.max(gap)):.4g}"),
            Check(f"Q({t:g}) positive semidefinite", Q1.is_psd(self.n_stderr), Q1.smallest_eigenvalue(), 0.0, None),
            Check(f"Q({t2:g}) positive semidefinite", Q2.is_psd(self.n_stderr), Q2.smallest_eigenvalue(), 0.0, None),
        ]


class PropagatorError(Experiment):
    """Gaussian average at scale sqrt(T) of q(T) - S^hom_{t->T} q(t), along the t ladder."""
    name = 'E7-propagator-error'

    def reference_indices(self) -> List[int]:
        n = int(self.spec.option('reference_samples', DEFAULT_REFERENCE_SAMPLES))
        return [REFERENCE_OFFSET + k for k in range(n)]

    def prepare(self) -> None:
        """Reference coefficient: a_hT^kappa at T averaged over samples outside the ensemble."""
        T = float(self.ladder['T'])
        kappa = int(self.spec.option('reference_kappa', 2))
        matrices = [a_hT_kappa(self.coefficient(i), T, kappa, self.cfg) for i in self.reference_indices()]
        self.a_ref = np.mean(matrices, axis=0)
        logger.info(f"{self.name}: reference coefficient {self.a_ref.tolist()} from {len(matrices)} samples")

    def sample(self, index: int) -> Dict[str, Any]:
        a = self.coefficient(index)
        T = float(self.ladder['T'])
        steps = int(self.spec.option('steps_per_dyad', DEFAULT_STEPS_PER_DYAD))
        e = int(self.spec.option('direction', 0))
        traj = evolve_semigroup(a, e, T, steps, self.cfg)
        R = math.sqrt(T)
        magnitudes = []
        for t in self.ladder['t']:
            err: VectorField = homogenization_error(traj, float(t), T, self.a_ref)
            magnitudes.append(float(np.linalg.norm(origin_values(err.values, self.grid, [R])[0])))
        return {'magnitude': magnitudes}

    def reduce(self, results: SampleResults) -> ExperimentReport:
        ts = [float(t) for t in self.ladder['t']]
        usable = self.usable(results)
        rows = []
        for k, t in enumerate(ts):
            values = np.asarray([r['magnitude'][k] for _, r in usable], dtype=float)
            n = values.size
            # large-sample error of the median of a near-normal sample
            stderr = math.sqrt(math.pi / 2) * float(values.std(ddof=1)) / math.sqrt(n) if n > 1 else float('nan')
            rows.append(row(t, float(np.median(values)) if n else float('nan'), stderr, n))
        medians = [r['estimate'] for r in rows]
        extras = {'a_ref': self.a_ref.tolist()}
        if all(m == 0 for m in medians):
            logger.warning(f"{self.name}: propagator error vanishes identically")
            return self.build_report(results, [], {'median_error': rows}, {}, degenerate=True, extras=extras)
        checks = [Check(f"median decreases {t0:g}->{t1:g}", m1 < m0, m1 - m0, 0.0, None)
                  for t0, t1, m0, m1 in zip(ts, ts[1:], medians, medians[1:])]
        return self.build_report(results, checks, {'median_error': rows}, {}, extras=extras)
