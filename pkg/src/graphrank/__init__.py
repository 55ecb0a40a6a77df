"""Least-squares merit estimation and ranking on paired-comparison graphs."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .covariates import (CovariateDesign, CovariateFit, build_design, check_identifiability,
                         fit_with_covariates)
from .errors import (ConfigError, DataError, DegenerateFitError, GraphRankError,
                     IdentifiabilityError)
from .estimator import Constraint, MeritFit, fit, ranks, reconstrain, row_sum_estimate
from .graph import ComparisonGraph, ComparisonRecord, EdgeWeights, build_graph, laplacian
from .inference import (bootstrap_ranks, rank_distance, test_all_distinct, test_all_equal,
                        test_contrasts, test_item_not_worst)
from .spectral import pinv_laplacian, pinv_symmetric, spectral_summary

__all__ = [
    "BACKEND", "ComparisonGraph", "ComparisonRecord", "ConfigError", "Constraint",
    "CovariateDesign", "CovariateFit", "DataError", "DegenerateFitError", "EdgeWeights",
    "GraphRankError", "IdentifiabilityError", "MeritFit", "bootstrap_ranks", "build_design",
    "build_graph", "check_identifiability", "fit", "fit_with_covariates", "laplacian",
    "pinv_laplacian", "pinv_symmetric", "rank_distance", "ranks", "reconstrain",
    "row_sum_estimate", "spectral_summary", "test_all_distinct", "test_all_equal",
    "test_contrasts", "test_item_not_worst",
]
