import numpy as np
import pytest
from src.lattice.grid import TorusGrid, ScalarField
from src.ensembles.coefficients import CoefficientField
from src.elliptic.extrapolation import (
    dyadic_cutoffs,
    richardson_extrapolate,
    extrapolated_corrector,
    a_hT_kappa,
    resolvent_g_kappa,
    resolvent_defect,
    resolvent_bound_ratio,
)
from src.errors import ParameterError


def test_dyadic_cutoffs():
    assert dyadic_cutoffs(4.0, 3) == [4.0, 8.0, 16.0]


def test_richardson_removes_leading_terms():
    model = lambda T: 2.0 + 3.0 / T + 5.0 / T ** 2
    T = 8.0
    first = richardson_extrapolate([model(c) for c in dyadic_cutoffs(T, 2)], 2)
    assert abs(first - 2.0) < 5.0 / T ** 2
    assert abs(richardson_extrapolate([model(c) for c in dyadic_cutoffs(T, 3)], 3) - 2.0) < 1e-12
    assert richardson_extrapolate([1.5], 1) == 1.5


def test_richardson_on_fields(grid8, rng):
    base = rng.normal(size=grid8.shape)
    fields = [ScalarField(grid8, base + 1.0 / c) for c in dyadic_cutoffs(2.0, 2)]
    out = richardson_extrapolate(fields, 2)
    assert isinstance(out, ScalarField)
    assert np.allclose(out.values, base, atol=1e-12)


def test_richardson_argument_checks():
    with pytest.raises(ParameterError):
        richardson_extrapolate([1.0, 2.0], 3)
    with pytest.raises(ParameterError):
        richardson_extrapolate([], 0)


def test_resolvent_closed_forms():
    mu = np.logspace(-4, 2, 50)
    T = 16.0
    x = 1.0 / (mu * T)
    assert np.allclose(resolvent_bound_ratio(mu, T, 1), 1.0)
    assert np.allclose(resolvent_bound_ratio(mu, T, 2), (1 + x) / (2 + x))
    assert np.allclose(resolvent_bound_ratio(mu, T, 3), (1 + x) ** 2 / ((2 + x) * (4 + x)))


@pytest.mark.parametrize("kappa", [1, 2, 3])
def test_resolvent_ratio_bounded_below(kappa):
    mu = np.logspace(-6, 4, 200)
    ratio = resolvent_bound_ratio(mu, 32.0, kappa)
    assert ratio.min() >= 2.0 ** (-kappa * (kappa - 1) / 2) - 1e-12
    assert ratio.max() <= 1.0 + 1e-12


def test_resolvent_defect_matches_difference():
    mu = np.array([0.1, 1.0, 10.0])
    for kappa in (1, 2, 3):
        direct = resolvent_g_kappa(mu, 8.0, kappa) - 1.0 / mu
        assert np.allclose(resolvent_defect(mu, 8.0, kappa), direct, rtol=1e-8, atol=1e-14)
    with pytest.raises(ParameterError):
        resolvent_g_kappa(-1.0, 8.0, 1)


def test_extrapolated_corrector_fills_cache(field16, tight_cfg):
    cache = {}
    phi = extrapolated_corrector(field16, 4.0, 0, 3, tight_cfg, cache)
    assert sorted(cache) == [4.0, 8.0, 16.0]
    again = extrapolated_corrector(field16, 4.0, 0, 3, tight_cfg, cache)
    assert np.array_equal(phi.values, again.values)


def test_a_hT_kappa_constant_medium(grid16):
    a = CoefficientField.constant(grid16, 0.5)
    assert np.allclose(a_hT_kappa(a, 8.0, 2), 0.5 * np.eye(2))
