import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from src.lattice.grid import TorusGrid, ScalarField, VectorField, SkewField
from src.lattice.calculus import (
    discrete_gradient,
    discrete_divergence,
    discrete_laplacian,
    curl_rhs,
    skew_divergence,
)
from src.lattice.operators import difference_matrix, laplacian_matrix
from src.errors import ParameterError


def test_grid_rejects_bad_sizes():
    with pytest.raises(ParameterError):
        TorusGrid(2, 6)
    with pytest.raises(ParameterError):
        TorusGrid(4, 8)
    with pytest.raises(ParameterError):
        TorusGrid(2, 2)


def test_field_shape_checked(grid8):
    with pytest.raises(ParameterError):
        ScalarField(grid8, np.zeros((8, 4)))
    with pytest.raises(ParameterError):
        VectorField(grid8, np.full((2, 8, 8), np.nan))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 31 - 1), d=st.sampled_from([2, 3]))
def test_summation_by_parts(seed, d):
    grid = TorusGrid(d, 4)
    rng = np.random.default_rng(seed)
    u = ScalarField(grid, rng.normal(size=grid.shape))
    F = VectorField(grid, rng.normal(size=(d,) + grid.shape))
    lhs = np.sum(discrete_gradient(u).values * F.values)
    rhs = -np.sum(u.values * discrete_divergence(F).values)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 31 - 1))
def test_skew_storage_is_antisymmetric(seed):
    grid = TorusGrid(3, 4)
    rng = np.random.default_rng(seed)
    sigma = SkewField(grid, rng.normal(size=(3,) + grid.shape))
    full = sigma.full()
    assert np.array_equal(full, -np.swapaxes(full, 0, 1))
    assert np.array_equal(sigma.component(2, 0), -sigma.component(0, 2))


def test_divergence_of_skew_divergence_vanishes(rng):
    grid = TorusGrid(3, 8)
    sigma = SkewField(grid, rng.normal(size=(3,) + grid.shape))
    div = discrete_divergence(skew_divergence(sigma))
    assert np.max(np.abs(div.values)) < 1e-12


def test_curl_of_gradient_vanishes(grid8, rng):
    u = ScalarField(grid8, rng.normal(size=grid8.shape))
    assert np.max(np.abs(curl_rhs(discrete_gradient(u), 0, 1).values)) < 1e-12
    with pytest.raises(ParameterError):
        curl_rhs(discrete_gradient(u), 1, 1)


def test_laplacian_is_divergence_of_gradient(grid8, rng):
    u = ScalarField(grid8, rng.normal(size=grid8.shape))
    lap = discrete_laplacian(u).values
    assert np.allclose(lap, discrete_divergence(discrete_gradient(u)).values, atol=1e-12)
    assert abs(lap.sum()) < 1e-10


def test_sparse_operators_match_stencils(rng):
    grid = TorusGrid(2, 4)
    u = ScalarField(grid, rng.normal(size=grid.shape))
    G = difference_matrix(grid)
    assert np.allclose(G @ u.values.ravel(), discrete_gradient(u).values.ravel(), atol=1e-14)
    lap = laplacian_matrix(grid) @ u.values.ravel()
    assert np.allclose(lap, discrete_laplacian(u).values.ravel(), atol=1e-12)
