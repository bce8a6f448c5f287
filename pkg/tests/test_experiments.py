import json
import numpy as np
import os
import pytest
from src.lattice.grid import TorusGrid, ScalarField
from src.ensembles.coefficients import EnsembleSpec
from src.experiments.spec import ExperimentSpec, default_ladder, STATUS_PASS, STATUS_FAIL, STATUS_DEGENERATE
from src.experiments.scheduler import schedule, execute, CheckpointStore
from src.experiments.engine import run_experiment, run_directory, ExperimentEngine
from src.experiments.elliptic_experiments import MinimalRadius, SystematicError
from src.experiments.two_scale import macroscopic_bump, two_scale_error_sq
from src.ensembles.coefficients import CoefficientField
from src.elliptic.solver import SolverConfig
from src.errors import ParameterError

CONSTANT = EnsembleSpec(kind='bernoulli', lam=0.25, p=0.0)
BERNOULLI = EnsembleSpec(kind='bernoulli', lam=0.25, p=0.5)


def make_spec(name, L=16, n=30, ensemble=BERNOULLI, **kwargs):
    return ExperimentSpec(name=name, ensemble=ensemble, grid=TorusGrid(2, L), n_samples=n,
                          master_seed=17, **kwargs)


def square(i):
    return {'value': i * i}


def test_schedule_partitions_indices():
    plan = schedule(range(1000), 7)
    flat = [i for chunk in plan.chunks for i in chunk]
    assert flat == list(range(1000))
    assert len(plan.chunks) == 7
    assert max(map(len, plan.chunks)) - min(map(len, plan.chunks)) <= 1


def test_schedule_edge_cases():
    assert schedule([], 4).chunks == ()
    assert execute(schedule([], 4), square) == {}
    assert len(schedule([3, 1], 8).chunks) == 2
    with pytest.raises(ParameterError):
        schedule([1, 2], 0)
    with pytest.raises(ParameterError):
        schedule([1, 1], 2)


def test_execute_is_independent_of_worker_count(tmp_path):
    serial = execute(schedule(range(12), 1), square)
    parallel = execute(schedule(range(12), 3), square, str(tmp_path))
    assert serial == parallel
    assert list(serial) == list(range(12))
    store = CheckpointStore(str(tmp_path))
    assert store.load(5) == {'value': 25}
    assert sorted(store.completed(range(20))) == list(range(12))


def test_spec_validation():
    with pytest.raises(ParameterError):
        make_spec('E1-clt-decay', n=10).validate()
    with pytest.raises(ParameterError):
        make_spec('E1-clt-decay', L=4).validate()
    with pytest.raises(ParameterError):
        make_spec('E9-unknown').validate()
    with pytest.raises(ParameterError):
        make_spec('E2-systematic-error', ladder={'T': [4, 6, 8, 16]}).validate()
    with pytest.raises(ParameterError):
        make_spec('E5-commutator-gaussianity', n=100).validate()
    three_d = ExperimentSpec('E4-corrector-growth', BERNOULLI, TorusGrid(3, 8), 30, 1)
    with pytest.raises(ParameterError):
        three_d.validate()


def test_default_ladders():
    ladder = default_ladder('E1-clt-decay', TorusGrid(2, 32))
    assert ladder['T'] == 16.0
    assert ladder['scales'][0] == 1.0 and ladder['scales'][-1] == pytest.approx(4.0)
    assert len(ladder['scales']) >= 4
    assert default_ladder('E2-systematic-error', TorusGrid(2, 8))['T'] == [4.0, 8.0, 16.0, 32.0]


def test_spec_hash_tracks_content():
    assert make_spec('E1-clt-decay').spec_hash() == make_spec('E1-clt-decay').spec_hash()
    assert make_spec('E1-clt-decay').spec_hash() != make_spec('E1-clt-decay', n=31).spec_hash()


def test_dry_run_systematic_error(tmp_path):
    spec = make_spec('E2-systematic-error', L=8, options={'dry_run': True})
    report = run_experiment(spec, output_dir=str(tmp_path))
    assert report.status == STATUS_PASS
    assert report.fits['dry-run kappa=1 slope']['slope'] == pytest.approx(-1.0, abs=1e-9)
    run_dir = run_directory(str(tmp_path), spec)
    for name in ('report.json', 'timing.json', 'seeds.json', 'summary.md', 'a_error_k1.csv'):
        assert os.path.exists(os.path.join(run_dir, name))


def test_systematic_gradient_error_covers_every_direction(grid8, rng):
    ref = [ScalarField(grid8, rng.normal(size=grid8.shape)) for _ in range(2)]
    assert SystematicError.gradient_error(ref, ref) == 0.0
    # a change to the e_2 corrector alone must register
    shifted = [ref[0], ScalarField(grid8, ref[1].values + np.cos(2 * np.pi * grid8.coordinates()[0] / 8))]
    diff = shifted[1].values - ref[1].values
    expected = sum(np.sum((np.roll(diff, -1, axis=i) - diff) ** 2) for i in range(2)) / (2 * grid8.n_sites)
    assert SystematicError.gradient_error(shifted, ref) == pytest.approx(expected, rel=1e-12)
    assert expected > 0


def test_constant_medium_runs_are_degenerate():
    assert run_experiment(make_spec('E1-clt-decay', L=32, ensemble=CONSTANT)).status == STATUS_DEGENERATE
    assert run_experiment(make_spec('E3-semigroup-decay', L=8, ensemble=CONSTANT)).status == STATUS_DEGENERATE
    assert run_experiment(make_spec('E4-corrector-growth', L=8, ensemble=CONSTANT)).status == STATUS_DEGENERATE
    assert run_experiment(make_spec('E8-minimal-radius', ensemble=CONSTANT)).status == STATUS_DEGENERATE


def test_commutator_run_on_constant_medium():
    report = run_experiment(make_spec('E5-commutator-gaussianity', n=200, ensemble=CONSTANT))
    assert report.status == STATUS_DEGENERATE
    assert all(c.passed for c in report.checks)


def test_report_does_not_depend_on_workers():
    spec = make_spec('E1-clt-decay')
    serial = run_experiment(spec, workers=1).to_dict()
    parallel = run_experiment(spec, workers=2).to_dict()
    assert json.dumps(serial, sort_keys=True) == json.dumps(parallel, sort_keys=True)


def test_resume_from_checkpoints(tmp_path):
    spec = make_spec('E1-clt-decay')
    run_experiment(spec, output_dir=str(tmp_path))
    run_dir = run_directory(str(tmp_path), spec)
    with open(os.path.join(run_dir, 'report.json')) as f:
        first = f.read()
    samples = os.path.join(run_dir, 'samples')
    for name in sorted(os.listdir(samples))[::3]:
        os.remove(os.path.join(samples, name))
    os.remove(os.path.join(run_dir, 'report.json'))
    run_experiment(spec, output_dir=str(tmp_path))
    with open(os.path.join(run_dir, 'report.json')) as f:
        assert f.read() == first


def test_engine_rejects_bad_workers():
    with pytest.raises(ParameterError):
        ExperimentEngine(make_spec('E1-clt-decay'), workers=0)


def test_minimal_radius_tail_reduction():
    experiment = MinimalRadius(make_spec('E8-minimal-radius', L=32))
    decaying = [(i, {'r_star': r}) for i, r in enumerate([1] * 30 + [2] * 20 + [4] * 10)]
    report = experiment.reduce(decaying)
    assert report.status == STATUS_PASS
    assert [r['estimate'] for r in report.channels['tail']][:3] == pytest.approx([1.0, 0.5, 1 / 6])

    flat = [(i, {'r_star': 8}) for i in range(40)]
    assert experiment.reduce(flat).status == STATUS_FAIL

    failed = decaying + [(60, {'failed': True, 'error': 'ConvergenceError: cap'})]
    assert experiment.reduce(failed).failures[0]['index'] == 60


def _radius_samples(histogram):
    values = [r for r, count in histogram.items() for _ in range(count)]
    return [(i, {'r_star': r}) for i, r in enumerate(values)]


def test_minimal_radius_heavy_tail_fails():
    experiment = MinimalRadius(make_spec('E8-minimal-radius', L=32))
    # P(r* >= r) = 1, .75, .5, .25: log P flattens out in r^2
    report = experiment.reduce(_radius_samples({1: 100, 2: 100, 4: 100, 8: 100}))
    assert report.status == STATUS_FAIL
    failing = [c.name for c in report.checks if not c.passed]
    assert failing == ['log-tail at least linear in r^d']

    slow = experiment.reduce(_radius_samples({1: 30, 2: 29, 4: 28, 8: 27}))
    assert slow.status == STATUS_FAIL


def test_minimal_radius_gaussian_tail_passes():
    experiment = MinimalRadius(make_spec('E8-minimal-radius', L=32))
    # P(r* >= r) close to exp(-0.1 (r^2 - 1)); r = 8 has too few tail counts to enter
    report = experiment.reduce(_radius_samples({1: 259, 2: 518, 4: 221, 8: 2}))
    assert report.status == STATUS_PASS
    secants = report.extras['log_tail_secants']
    assert secants['first'] == pytest.approx(-0.1, abs=2e-3)
    assert secants['overall'] == pytest.approx(-0.1, abs=2e-3)


def test_two_scale_error_vanishes_for_constant_medium():
    grid = TorusGrid(2, 32)
    f = macroscopic_bump(grid)
    assert abs(f.mean()) < 1e-12
    a = CoefficientField.constant(grid, 0.5)
    cfg = SolverConfig(rel_tolerance=1e-12)
    assert two_scale_error_sq(a, 0.5 * np.eye(2), f, cfg) < 1e-12
