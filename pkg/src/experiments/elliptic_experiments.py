"""
Experiments built on the massive elliptic correctors: CLT decay (E1),
systematic error of the extrapolated correctors (E2), corrector growth in
d = 2 (E4) and the minimal radius tail (E8).
"""
import logging
import math
import numpy as np
from typing import Any, Dict, List, Sequence
from ..lattice.grid import ScalarField
from ..lattice.calculus import forward_difference
from ..elliptic.corrector import assemble_extended_corrector, modified_corrector
from ..elliptic.extrapolation import extrapolated_corrector, energy_coefficient, richardson_extrapolate, dyadic_cutoffs
from ..elliptic.radius import minimal_radius, dyadic_radii, DEFAULT_DELTA
from ..statistics.clt import origin_values, clt_profile_from_values, MIN_CLT_SAMPLES
from ..statistics.jackknife import jackknife_stderr
from ..statistics.regression import linear_fit, rate_fit
from ..errors import ParameterError
from .base import Experiment, SampleResults, row, mean_row, rms_row
from .spec import Check, ExperimentReport

logger = logging.getLogger(__name__)

CLT_CHANNELS = ('grad_phi', 'grad_sigma', 'flux')
MIN_TAIL_COUNT = 10


def _gradient_stack(values: np.ndarray, d: int) -> np.ndarray:
    """Forward differences of every component: (k, L..) -> (k * d, L..)."""
    return np.concatenate([np.stack([forward_difference(v, i) for i in range(d)]) for v in values])


class CltDecay(Experiment):
    """Spread of Gaussian averages of (grad phi_T, grad sigma_T, q_T) against the averaging scale."""
    name = 'E1-clt-decay'

    def sample(self, index: int) -> Dict[str, Any]:
        a = self.coefficient(index)
        T = float(self.ladder['T'])
        e = int(self.spec.option('direction', 0))
        scales = self.ladder['scales']
        result: Dict[str, Any] = {}
        ext = self.attempt(result, f"T={T}", lambda: assemble_extended_corrector(a, T, e, self.cfg))
        if ext is None:
            return result
        d = self.grid.d
        grad_phi = _gradient_stack(ext.phi_T.values[np.newaxis], d)
        grad_sigma = _gradient_stack(ext.sigma_T.values, d)
        flux = ext.q_T.values - ext.q_T.mean().reshape((d,) + (1,) * d)
        for channel, values in zip(CLT_CHANNELS, (grad_phi, grad_sigma, flux)):
            result[channel] = origin_values(values, self.grid, scales).tolist()
        return result

    def reduce(self, results: SampleResults) -> ExperimentReport:
        scales = [float(R) for R in self.ladder['scales']]
        target = -self.grid.d / 2
        tolerance = float(self.spec.option('slope_tolerance', 0.15))
        checks: List[Check] = []
        channels: Dict[str, List[Dict[str, Any]]] = {}
        fits: Dict[str, Dict[str, Any]] = {}
        degenerate = []
        for channel in CLT_CHANNELS:
            values = [r[channel] for _, r in self.usable(results) if channel in r]
            if len(values) < MIN_CLT_SAMPLES:
                checks.append(Check(f"{channel} slope", False, None, target, tolerance,
                                    detail=f"only {len(values)} usable samples"))
                continue
            profile = clt_profile_from_values(np.asarray(values), scales)
            channels[channel] = [row(R, s, err, profile.n_samples)
                                 for R, s, err in zip(profile.scales, profile.std, profile.stderr)]
            if profile.degenerate:
                logger.warning(f"{self.name}: channel {channel} has zero spread at every scale")
                degenerate.append(channel)
                checks.append(Check(f"{channel} slope", True, None, target, tolerance, detail='degenerate: zero spread'))
                continue
            checks.append(self.slope_check(f"{channel} slope", scales, profile.std, target, tolerance, fits))
        return self.build_report(results, checks, channels, fits,
                                 degenerate=bool(degenerate) and len(degenerate) == len(CLT_CHANNELS))


class SystematicError(Experiment):
    """
    Distance of phi_T^kappa and a_hT^kappa from the kappa = ref_kappa run at the largest T.
    The gradient error is the mean square over sites of every direction e_1..e_d.

    With option dry_run the corrector is replaced by the scalar model
    f(T) = c0 + c1 / T (options c0, c1), which exercises the Richardson
    ladder and the reduction without any solve.
    """
    name = 'E2-systematic-error'

    @property
    def dry_run(self) -> bool:
        return bool(self.spec.option('dry_run', False))

    def _model(self, T: float) -> float:
        return float(self.spec.option('c0', 1.0)) + float(self.spec.option('c1', 1.0)) / T

    def _dry_sample(self) -> Dict[str, Any]:
        Ts = [float(T) for T in self.ladder['T']]
        ref_kappa = int(self.ladder['ref_kappa'])
        ref = richardson_extrapolate([self._model(c) for c in dyadic_cutoffs(max(Ts), ref_kappa)], ref_kappa)
        result: Dict[str, Any] = {}
        for kappa in self.ladder['kappas']:
            errors = []
            for T in Ts:
                value = richardson_extrapolate([self._model(c) for c in dyadic_cutoffs(T, int(kappa))], int(kappa))
                errors.append(abs(value - ref))
            result[f"grad_k{kappa}"] = [err ** 2 for err in errors]
            result[f"a_k{kappa}"] = [[[err]] for err in errors]
        return result

    def sample(self, index: int) -> Dict[str, Any]:
        if self.dry_run:
            return self._dry_sample()
        a = self.coefficient(index)
        d = self.grid.d
        Ts = [float(T) for T in self.ladder['T']]
        ref_kappa = int(self.ladder['ref_kappa'])
        caches: List[Dict[float, Any]] = [{} for _ in range(d)]
        result: Dict[str, Any] = {}

        def reference():
            phis = [extrapolated_corrector(a, max(Ts), e, ref_kappa, self.cfg, caches[e]) for e in range(d)]
            return phis, energy_coefficient(a, phis)

        ref = self.attempt(result, f"reference T={max(Ts)}", reference)
        if ref is None:
            result['failed'] = True
            result['error'] = result['failures'][-1]['error']
            return result
        phis_ref, a_ref = ref
        for kappa in self.ladder['kappas']:
            kappa = int(kappa)
            grad_sq, a_diff = [], []
            for T in Ts:
                phis = self.attempt(result, f"kappa={kappa} T={T}", lambda: [
                    extrapolated_corrector(a, T, e, kappa, self.cfg, caches[e]) for e in range(d)])
                if phis is None:
                    grad_sq.append(None)
                    a_diff.append(None)
                    continue
                grad_sq.append(self.gradient_error(phis, phis_ref))
                a_diff.append((energy_coefficient(a, phis) - a_ref).tolist())
            result[f"grad_k{kappa}"] = grad_sq
            result[f"a_k{kappa}"] = a_diff
        return result

    @staticmethod
    def gradient_error(phis: Sequence[ScalarField], phis_ref: Sequence[ScalarField]) -> float:
        """Site and direction average of |grad phi_e - grad phi_e^ref|^2."""
        d = len(phis)
        total = 0.0
        for phi, phi_ref in zip(phis, phis_ref):
            diff = phi.values - phi_ref.values
            total += sum(float(np.sum(forward_difference(diff, i) ** 2)) for i in range(d))
        return total / (d * phis[0].values.size)

    @staticmethod
    def _matrix_row(T: float, diffs: List[np.ndarray]) -> Dict[str, Any]:
        """Frobenius norm of the mean difference, with a leave-one-out error."""
        X = np.asarray(diffs, dtype=float)
        n = X.shape[0]
        if n == 0:
            return row(T, float('nan'), float('nan'), 0)
        norm = float(np.linalg.norm(X.mean(axis=0)))
        if n < 2:
            return row(T, norm, float('nan'), n)
        loo = (X.sum(axis=0)[np.newaxis] - X) / (n - 1)
        loo_norms = np.linalg.norm(loo.reshape(n, -1), axis=1)
        return row(T, norm, float(jackknife_stderr(loo_norms)), n)

    def reduce(self, results: SampleResults) -> ExperimentReport:
        Ts = [float(T) for T in self.ladder['T']]
        d = self.grid.d
        usable = self.usable(results)
        checks: List[Check] = []
        channels: Dict[str, List[Dict[str, Any]]] = {}
        fits: Dict[str, Dict[str, Any]] = {}
        for kappa in self.ladder['kappas']:
            grad_rows, a_rows = [], []
            for k, T in enumerate(Ts):
                squares = [r[f"grad_k{kappa}"][k] for _, r in usable if r[f"grad_k{kappa}"][k] is not None]
                diffs = [r[f"a_k{kappa}"][k] for _, r in usable if r[f"a_k{kappa}"][k] is not None]
                grad_rows.append(rms_row(T, squares))
                a_rows.append(self._matrix_row(T, diffs))
            channels[f"grad_error_k{kappa}"] = grad_rows
            channels[f"a_error_k{kappa}"] = a_rows
        if self.dry_run:
            exact = float(self.spec.option('exact_tolerance', 1e-12))
            checks.append(self.slope_check('dry-run kappa=1 slope', Ts,
                                           [r['estimate'] for r in channels['a_error_k1']], -1.0,
                                           float(self.spec.option('dry_run_tolerance', 1e-9)), fits))
            if 'a_error_k2' in channels:
                worst = max(r['estimate'] for r in channels['a_error_k2'])
                checks.append(Check('dry-run kappa=2 exact', worst <= exact, worst, 0.0, exact))
            return self.build_report(results, checks, channels, fits)
        if 'grad_error_k1' in channels:
            checks.append(self.slope_check(
                'grad error slope kappa=1', Ts, [r['estimate'] for r in channels['grad_error_k1']],
                -d / 4, float(self.spec.option('grad_slope_tolerance', 0.15)), fits))
            checks.append(self.slope_check(
                'a error slope kappa=1', Ts, [r['estimate'] for r in channels['a_error_k1']],
                -d / 2, float(self.spec.option('a_slope_tolerance', 0.25)), fits))
        for kappa in self.ladder['kappas']:
            if int(kappa) > 1:
                try:
                    fits[f"a error slope kappa={kappa}"] = rate_fit(
                        Ts, [r['estimate'] for r in channels[f"a_error_k{kappa}"]]).to_dict()
                except ParameterError as e:
                    logger.warning(f"{self.name}: no fit for kappa={kappa}: {e}")
        return self.build_report(results, checks, channels, fits)


class CorrectorGrowth(Experiment):
    """Variance of phi_T at a site against log T in d = 2."""
    name = 'E4-corrector-growth'

    def sample(self, index: int) -> Dict[str, Any]:
        a = self.coefficient(index)
        e = int(self.spec.option('direction', 0))
        result: Dict[str, Any] = {}
        variances = []
        for T in self.ladder['T']:
            T = float(T)
            solved = self.attempt(result, f"T={T}", lambda: modified_corrector(a, T, e, self.cfg))
            if solved is None:
                variances.append(None)
                continue
            phi, _ = solved
            variances.append(float(np.sum(phi.values * phi.values)) / self.grid.n_sites)
        result['phi_sq'] = variances
        return result

    def reduce(self, results: SampleResults) -> ExperimentReport:
        Ts = [float(T) for T in self.ladder['T']]
        usable = self.usable(results)
        rows = []
        for k, T in enumerate(Ts):
            rows.append(mean_row(T, [r['phi_sq'][k] for _, r in usable if r['phi_sq'][k] is not None]))
        estimates = [r['estimate'] for r in rows]
        fits: Dict[str, Dict[str, Any]] = {}
        checks: List[Check] = []
        if all(v == 0 for v in estimates):
            logger.warning(f"{self.name}: corrector vanishes identically")
            return self.build_report(results, [], {'phi_variance': rows}, fits, degenerate=True)
        r2_min = float(self.spec.option('r2_min', 0.9))
        try:
            fit = linear_fit([math.log(T) for T in Ts], estimates)
        except ParameterError as e:
            checks.append(Check('variance linear in log T', False, None, r2_min, None, detail=str(e)))
        else:
            fits['variance vs log T'] = fit.to_dict()
            checks.append(Check('variance linear in log T', fit.r_squared >= r2_min, fit.r_squared, r2_min, None,
                                detail=f"slope {fit.slope:.4g}"))
            checks.append(Check('variance grows', fit.slope > 0, fit.slope, 0.0, None))
        return self.build_report(results, checks, {'phi_variance': rows}, fits)


class MinimalRadius(Experiment):
    """Empirical tail of the minimal radius r* of (phi_T, sigma_T)."""
    name = 'E8-minimal-radius'

    def sample(self, index: int) -> Dict[str, Any]:
        a = self.coefficient(index)
        T = float(self.ladder['T'])
        delta = float(self.ladder.get('delta', DEFAULT_DELTA))
        e = int(self.spec.option('direction', 0))
        result: Dict[str, Any] = {}
        ext = self.attempt(result, f"T={T}", lambda: assemble_extended_corrector(a, T, e, self.cfg))
        if ext is None:
            return result
        result['r_star'] = minimal_radius(ext.phi_T, ext.sigma_T, delta)
        return result

    @staticmethod
    def _log_tail_secant(p0: float, p1: float, r0: float, r1: float, n: int, d: int):
        """Slope of log P against r^d between two radii, with its delta-method error."""
        span = r1 ** d - r0 ** d
        var = sum((1 - p) / (n * p) for p in (p0, p1))
        return (math.log(p1) - math.log(p0)) / span, math.sqrt(var) / span

    def reduce(self, results: SampleResults) -> ExperimentReport:
        radii = dyadic_radii(self.grid.L)
        r_stars = np.asarray([r['r_star'] for _, r in self.usable(results) if 'r_star' in r], dtype=float)
        n = r_stars.size
        rows, counts = [], []
        for r in radii:
            count = int(np.sum(r_stars >= r))
            p = count / n if n else float('nan')
            counts.append(count)
            rows.append(row(r, p, math.sqrt(p * (1 - p) / n) if n else float('nan'), n))
        qualifying = [(r, rw['estimate']) for r, rw, c in zip(radii, rows, counts) if c >= MIN_TAIL_COUNT]
        checks: List[Check] = []
        d = self.grid.d
        extras: Dict[str, Any] = {'histogram': {str(r): int(np.sum(r_stars == r)) for r in radii}}
        degenerate = len(qualifying) < 2
        if degenerate:
            logger.warning(f"{self.name}: fewer than two radii with {MIN_TAIL_COUNT} tail counts")
        else:
            (r0, p0), (r1, p1), (r_last, p_last) = qualifying[0], qualifying[1], qualifying[-1]
            first, first_err = self._log_tail_secant(p0, p1, r0, r1, n, d)
            overall, overall_err = self._log_tail_secant(p0, p_last, r0, r_last, n, d)
            extras['log_tail_secants'] = {'first': first, 'overall': overall}
            checks.append(Check(f"log-tail decreases {r0:g}->{r_last:g}", overall < 0, overall, 0.0, None))
            # log P at least linear in r^d: the overall slope is no shallower than the first one
            allowance = self.n_stderr * math.sqrt(first_err ** 2 + overall_err ** 2)
            checks.append(Check('log-tail at least linear in r^d', -overall >= -first - allowance,
                                overall - first, 0.0, allowance,
                                detail=f"first secant {first:.4g}, overall secant {overall:.4g}"))
        return self.build_report(results, checks, {'tail': rows}, {}, degenerate=degenerate, extras=extras)
