"""Nonparametric tail dependence for functional data on a grid.

Simulation of the Smith model and the Pareto process, rank-based tail
copula and stable tail dependence estimators, closed-form tail copulas,
multivariate normal probabilities, and a test of tail copula stationarity.
"""

from .core import (
    RankMatrix,
    TailCopulaQuery,
    compute_ranks,
    empirical_stdf,
    empirical_tail_copula,
    estimate_partial_derivative,
    pairwise_tdc_matrix,
    tail_empirical_df,
)
from .errors import DegenerateDataError, NumericalError, TailfieldError, ValidationError
from .mvn import MvnResult, mvn_cdf, range_cdf, range_pdf
from .sim import FunctionalSample, Grid, distort_grid, simulate_pareto, simulate_smith
from .stattest import (
    TestConfig,
    TestResult,
    estimate_VN_covariance,
    integral_statistic,
    monte_carlo_experiment,
    stationarity_test,
    test_statistic,
    theoretical_VN_covariance,
)
from .theory import (
    Model,
    bivariate_R,
    gaussian_min_exp,
    hatW_covariance,
    husler_reiss_partial,
    pareto_dvariate_R,
    rho2,
    smith_dvariate_R,
)

__all__ = [
    "RankMatrix",
    "TailCopulaQuery",
    "compute_ranks",
    "empirical_stdf",
    "empirical_tail_copula",
    "estimate_partial_derivative",
    "pairwise_tdc_matrix",
    "tail_empirical_df",
    "DegenerateDataError",
    "NumericalError",
    "TailfieldError",
    "ValidationError",
    "MvnResult",
    "mvn_cdf",
    "range_cdf",
    "range_pdf",
    "FunctionalSample",
    "Grid",
    "distort_grid",
    "simulate_pareto",
    "simulate_smith",
    "TestConfig",
    "TestResult",
    "estimate_VN_covariance",
    "integral_statistic",
    "monte_carlo_experiment",
    "stationarity_test",
    "test_statistic",
    "theoretical_VN_covariance",
    "Model",
    "bivariate_R",
    "gaussian_min_exp",
    "hatW_covariance",
    "husler_reiss_partial",
    "pareto_dvariate_R",
    "rho2",
    "smith_dvariate_R",
]

__version__ = "0.1.0"
