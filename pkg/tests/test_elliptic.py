import math
import os
import numpy as np
import pytest
import scipy.sparse.linalg as spla
from src.lattice.grid import TorusGrid, ScalarField, VectorField
from src.lattice.calculus import curl_rhs, discrete_laplacian, forward_difference
from src.ensembles.coefficients import CoefficientField
from src.ensembles.sampler import sample
from src.elliptic.solver import SolverConfig, solve_values, assemble_operator, apply_operator
from src.elliptic.corrector import (
    corrector,
    corrector_rhs,
    modified_corrector,
    assemble_extended_corrector,
    extended_correctors,
    homogenized_coefficient_a_hT,
    energy_identity_residual,
    vector_potential,
    auxiliary_g,
)
from src.elliptic.extrapolation import energy_coefficient
from src.elliptic.bundle import save_corrector_bundle, load_corrector_bundle
from src.errors import ParameterError, ConvergenceError


def test_solver_config_validation():
    with pytest.raises(ParameterError):
        SolverConfig(rel_tolerance=1e-2)
    with pytest.raises(ParameterError):
        SolverConfig(max_iterations=0)
    with pytest.raises(ParameterError):
        SolverConfig(preconditioner='multigrid')


@pytest.mark.parametrize("d", [2, 3])
def test_cg_matches_sparse_direct_solve(d, bernoulli, tight_cfg, rng):
    grid = TorusGrid(d, 4)
    a = sample(bernoulli, grid, master_seed=5, index=0)
    rhs = rng.normal(size=grid.shape)
    result = solve_values(a, 0.5, rhs, tight_cfg)
    direct = spla.spsolve(assemble_operator(a, 2.0).tocsc(), rhs.ravel())
    assert np.max(np.abs(result.solution.ravel() - direct)) < 1e-9


def test_massless_solve_gauge(field16, tight_cfg, rng):
    rhs = rng.normal(size=field16.grid.shape)
    with pytest.raises(ParameterError):
        solve_values(field16, 0.0, rhs + 1.0, tight_cfg)
    result = solve_values(field16, 0.0, rhs - rhs.mean(), tight_cfg)
    assert abs(result.solution.mean()) < 1e-12
    residual = apply_operator(field16, 0.0, result.solution) - (rhs - rhs.mean())
    assert np.linalg.norm(residual) <= 1e-10 * np.linalg.norm(rhs)


def test_cg_raises_on_iteration_cap(field16):
    rhs = corrector_rhs(field16, 0).values
    with pytest.raises(ConvergenceError) as info:
        solve_values(field16, 0.0, rhs, SolverConfig(rel_tolerance=1e-12, max_iterations=2))
    assert info.value.iterations == 2


def test_cg_energy_error_decreases(field16, tight_cfg):
    rhs = corrector_rhs(field16, 0).values
    exact = solve_values(field16, 1 / 16, rhs, tight_cfg).solution
    energies = []

    def record(x):
        err = x - exact
        energies.append(float(np.sum(err * apply_operator(field16, 1 / 16, err))))

    solve_values(field16, 1 / 16, rhs, SolverConfig(rel_tolerance=1e-6), callback=record)
    assert len(energies) > 2
    assert all(b <= a * (1 + 1e-9) + 1e-20 for a, b in zip(energies, energies[1:]))


def test_constant_medium_has_no_corrector(grid16):
    a = CoefficientField.constant(grid16, 0.7)
    for e in range(2):
        ext = assemble_extended_corrector(a, 16.0, e)
        assert np.all(ext.phi_T.values == 0)
        assert np.allclose(ext.a_hT_column, 0.7 * np.eye(2)[e])
    a_hT = homogenized_coefficient_a_hT(extended_correctors(a, math.inf))
    assert np.allclose(a_hT, 0.7 * np.eye(2))


def test_laminate_gives_harmonic_and_arithmetic_means(tight_cfg):
    grid = TorusGrid(2, 16)
    c1, c2 = 0.3, 0.9
    a = CoefficientField.laminate(grid, 0, c1, c2)
    across = corrector(a, 0, tight_cfg)[1].mean()[0]
    along = corrector(a, 1, tight_cfg)[1].mean()[1]
    assert abs(across - 2 * c1 * c2 / (c1 + c2)) < 1e-8
    assert abs(along - 0.5 * (c1 + c2)) < 1e-8


@pytest.mark.parametrize("T", [4.0, 64.0, math.inf])
def test_helmholtz_identity(field16, T):
    ext = assemble_extended_corrector(field16, T, 1, SolverConfig(rel_tolerance=1e-11))
    assert ext.helmholtz_residual <= 1e-7
    if math.isinf(T):
        assert np.all(ext.g_T.values == 0)


def test_a_hT_is_elliptic(field16, bernoulli, tight_cfg, rng):
    a_hT = homogenized_coefficient_a_hT(extended_correctors(field16, 8.0, tight_cfg))
    for xi in rng.normal(size=(100, 2)):
        assert xi @ a_hT @ xi >= bernoulli.lam * (xi @ xi) - 1e-9


def test_vector_potential_single_mode_closed_form():
    grid = TorusGrid(2, 16)
    T = 8.0
    k = np.array([1, 3])
    theta = 2 * np.pi * k / grid.L
    x = grid.coordinates()
    h = np.cos(np.tensordot(theta, x, axes=1))
    # q = (D_1 h, -D_0 h) has curl -(D_0^2 + D_1^2) h
    q = VectorField(grid, np.stack([forward_difference(h, 1), -forward_difference(h, 0)]))
    sigma = vector_potential(q, T).component(0, 1)

    symbol = np.exp(1j * theta) - 1.0
    c = -np.sum(symbol ** 2) / (1.0 / T + np.sum(4 * np.sin(theta / 2) ** 2))
    expected = np.real(c * np.exp(1j * np.tensordot(theta, x, axes=1)))
    assert np.max(np.abs(sigma - expected)) < 1e-12


def test_vector_potential_residual_and_constant_flux(rng):
    grid = TorusGrid(3, 8)
    T = 4.0
    q = VectorField(grid, rng.normal(size=(3,) + grid.shape))
    sigma = vector_potential(q, T)
    for j, k in grid.pairs:
        s = ScalarField(grid, sigma.component(j, k))
        residual = s.values / T - discrete_laplacian(s).values - curl_rhs(q, j, k).values
        assert np.max(np.abs(residual)) <= 1e-10

    flat = vector_potential(VectorField.constant(grid, [0.3, -1.0, 2.0]), T)
    assert np.max(np.abs(flat.values)) < 1e-14


def test_auxiliary_g_residual(grid8, bernoulli, tight_cfg):
    grid = grid8
    a = sample(bernoulli, grid, master_seed=11, index=3)
    T = 4.0
    phi, q = modified_corrector(a, T, 0, tight_cfg)
    g = auxiliary_g(q, phi, T)
    for i in range(2):
        gi = ScalarField(grid, g.values[i])
        rhs = q.values[i] - q.mean()[i] - forward_difference(phi.values, i)
        residual = gi.values - T * discrete_laplacian(gi).values - rhs
        assert np.max(np.abs(residual)) <= 1e-10


def test_auxiliary_g_vanishes_for_constant_medium(grid8, tight_cfg):
    a = CoefficientField.constant(grid8, 0.6)
    phi, q = modified_corrector(a, 16.0, 1, tight_cfg)
    assert np.max(np.abs(auxiliary_g(q, phi, 16.0).values)) < 1e-14


def test_a_hT_is_bounded_by_its_energy(field16, tight_cfg, rng):
    a_hT = homogenized_coefficient_a_hT(extended_correctors(field16, 8.0, tight_cfg))
    for xi in rng.normal(size=(100, 2)):
        image = a_hT @ xi
        assert xi @ image >= image @ image - 1e-9


@pytest.mark.parametrize("T", [2.0, 16.0])
def test_energy_coefficient_differs_by_massive_term(field16, tight_cfg, T):
    correctors = extended_correctors(field16, T, tight_cfg)
    a_hT = homogenized_coefficient_a_hT(correctors)
    phis = [c.phi_T for c in correctors]
    a_hT_1 = energy_coefficient(field16, phis)
    massive = np.array([[np.mean(phis[j].values * phis[i].values) for i in range(2)] for j in range(2)]) / T
    assert np.max(np.abs(a_hT - a_hT_1 - massive)) < 1e-9


def test_energy_identity(field16, tight_cfg):
    for T in (8.0, math.inf):
        phi, q = modified_corrector(field16, T, 0, tight_cfg)
        scale = float(np.sum(q.values ** 2))
        assert abs(energy_identity_residual(field16, T, phi, 0)) < 1e-8 * scale


def test_a_hT_needs_every_direction(field16):
    with pytest.raises(ParameterError):
        homogenized_coefficient_a_hT([assemble_extended_corrector(field16, 8.0, 0)])
    with pytest.raises(ParameterError):
        corrector_rhs(field16, 2)


def test_bundle_roundtrip_is_byte_identical(tmp_path, field16):
    ext = assemble_extended_corrector(field16, 16.0, 0)
    first, second = str(tmp_path / "one"), str(tmp_path / "two")
    save_corrector_bundle(first, ext, seed=11, index=3, ensemble_hash='abc')
    save_corrector_bundle(second, ext, seed=11, index=3, ensemble_hash='abc')
    for name in sorted(os.listdir(first)):
        with open(os.path.join(first, name), 'rb') as f1, open(os.path.join(second, name), 'rb') as f2:
            assert f1.read() == f2.read()

    loaded, manifest = load_corrector_bundle(first)
    assert manifest['sample_index'] == 3
    assert loaded.T == 16.0
    assert np.array_equal(loaded.sigma_T.values, ext.sigma_T.values)
    assert np.array_equal(loaded.a_hT_column, ext.a_hT_column)


def test_missing_bundle(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_corrector_bundle(str(tmp_path))
