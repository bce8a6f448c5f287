from .timegrid import dyadic_times, dyadic_time_grid
from .semigroup import SemigroupTrajectory, evolve_semigroup, propagate_S
from .propagators import propagate_S_hom, propagate_S_h, leray_projection, helmholtz_split
from .commutator import (
    CommutatorField,
    commutator,
    centering_matrix,
    ensemble_abar,
    homogenization_error,
    homogenization_error_field,
)
