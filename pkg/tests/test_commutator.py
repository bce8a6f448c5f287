import numpy as np
import pytest
from src.ensembles.coefficients import CoefficientField
from src.ensembles.sampler import sample
from src.parabolic.semigroup import evolve_semigroup
from src.parabolic.commutator import (
    commutator,
    centering_matrix,
    ensemble_abar,
    homogenization_error,
    homogenization_error_field,
)
from src.errors import ParameterError


@pytest.fixture
def trajectories(grid8, bernoulli, tight_cfg):
    a = sample(bernoulli, grid8, master_seed=9, index=2)
    return [evolve_semigroup(a, e, 8.0, 8, tight_cfg) for e in range(2)]


def test_constant_medium_has_zero_commutator(grid8):
    a = CoefficientField.constant(grid8, 0.4)
    trajs = [evolve_semigroup(a, e, 4.0) for e in range(2)]
    assert np.allclose(centering_matrix(trajs, 4.0), 0.4 * np.eye(2))
    for direction in range(2):
        assert np.all(commutator(trajs, 4.0, direction).Xi.values == 0)


def test_own_centering_gives_mean_zero(trajectories):
    for t in (1.0, 8.0):
        xi = commutator(trajectories, t, direction=1)
        assert np.max(np.abs(xi.Xi.mean())) < 1e-12


def test_ensemble_centering_is_used(trajectories):
    abar = np.array([[0.5, 0.0], [0.0, 0.5]])
    xi = commutator(trajectories, 2.0, 0, abar=abar)
    assert np.array_equal(xi.abar, abar)
    own = commutator(trajectories, 2.0, 0)
    assert not np.allclose(xi.Xi.values, own.Xi.values)


def test_commutator_needs_all_directions(trajectories):
    with pytest.raises(ParameterError):
        commutator(trajectories[:1], 1.0)
    with pytest.raises(ParameterError):
        commutator(trajectories, 1.0, direction=2)


def test_ensemble_abar():
    mats = [np.eye(2), 3 * np.eye(2)]
    assert np.allclose(ensemble_abar(mats), 2 * np.eye(2))
    with pytest.raises(ParameterError):
        ensemble_abar([])


def test_homogenization_error_vanishes_at_equal_times(trajectories):
    a_const = centering_matrix(trajectories, 8.0)
    err = homogenization_error(trajectories[0], 4.0, 4.0, a_const)
    assert np.all(err.values == 0)
    field = homogenization_error_field(trajectories[0], 4.0, 4.0, a_const)
    assert np.max(np.abs(field.values)) < 1e-14
    with pytest.raises(ParameterError):
        homogenization_error(trajectories[0], 8.0, 4.0, a_const)
