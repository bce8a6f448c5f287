from .coefficients import EnsembleSpec, CoefficientField, KINDS
from .sampler import sample, philox_key
from .diagnostics import empirical_range_check, RangeCheck
