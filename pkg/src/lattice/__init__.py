from .grid import TorusGrid, ScalarField, VectorField, SkewField
from .calculus import (
    discrete_gradient,
    discrete_divergence,
    discrete_laplacian,
    curl_rhs,
    skew_divergence,
)
from .spectral import gaussian_mollify, fft_poisson_solve
