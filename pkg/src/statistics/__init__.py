from .regression import RateFit, rate_fit, linear_fit
from .clt import CltProfile, clt_profile, clt_profile_from_values
from .covariance import CovarianceEstimate, covariance_Q, covariance_Q_from_means, covariance_Q_windowed
from .normality import (
    NormalityReport,
    CorrelationEstimate,
    normality_report,
    independence_check,
    functional_correlation,
    gaussian_test_function,
)
