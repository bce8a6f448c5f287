from .solver import SolverConfig, solve_massive_elliptic, conjugate_gradient, assemble_operator
from .corrector import (
    ExtendedCorrector,
    modified_corrector,
    corrector,
    vector_potential,
    auxiliary_g,
    assemble_extended_corrector,
    extended_correctors,
    homogenized_coefficient_a_hT,
)
from .extrapolation import (
    richardson_extrapolate,
    extrapolated_corrector,
    energy_coefficient,
    a_hT_kappa,
    resolvent_g_kappa,
)
from .radius import minimal_radius
from .bundle import save_corrector_bundle, load_corrector_bundle
