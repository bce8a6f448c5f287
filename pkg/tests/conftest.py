import numpy as np
import pytest
from src.lattice.grid import TorusGrid
from src.ensembles.coefficients import EnsembleSpec
from src.ensembles.sampler import sample
from src.elliptic.solver import SolverConfig


@pytest.fixture
def grid8():
    return TorusGrid(2, 8)


@pytest.fixture
def grid16():
    return TorusGrid(2, 16)


@pytest.fixture
def bernoulli():
    return EnsembleSpec(kind='bernoulli', lam=0.25, p=0.5)


@pytest.fixture
def tight_cfg():
    return SolverConfig(rel_tolerance=1e-12)


@pytest.fixture
def field16(grid16, bernoulli):
    return sample(bernoulli, grid16, master_seed=11, index=3)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
