"""Exact finite-state checks of the cyclical-chain convergence theory."""
from .chain import FiniteChain, build_chain, discretize, mh_matrix, tempered_vector
from .gaps import (
    NumericalFailure,
    alpha_j,
    alpha_profile,
    alpha_random_search,
    bar_kernel,
    capital_lambda,
    capital_lambda_from,
    lambda_j,
    q_matrix,
    spectrum,
    w_matrix,
)
from .lyapunov import LyapunovReport, check_lyapunov_lemma, drift_image
from .theorems import (
    DriftFit,
    ScalingRow,
    SpectralReport,
    Theorem2Report,
    Trajectory,
    check_path_sampling,
    drift_union_bound,
    escape_probabilities,
    fit_drift,
    log_normalizer,
    propagate_exact,
    restricted_end_laws,
    restricted_kernel,
    unrolled_bound,
    verify_prop1_scaling,
    verify_theorem1,
    verify_theorem2,
)

__all__ = [
    "FiniteChain", "build_chain", "discretize", "mh_matrix", "tempered_vector",
    "NumericalFailure", "alpha_j", "alpha_profile", "alpha_random_search", "bar_kernel",
    "capital_lambda", "capital_lambda_from", "lambda_j", "q_matrix", "spectrum", "w_matrix",
    "LyapunovReport", "check_lyapunov_lemma", "drift_image",
    "DriftFit", "ScalingRow", "SpectralReport", "Theorem2Report", "Trajectory",
    "check_path_sampling", "drift_union_bound", "escape_probabilities", "fit_drift",
    "log_normalizer", "propagate_exact", "restricted_end_laws", "restricted_kernel",
    "unrolled_bound", "verify_prop1_scaling", "verify_theorem1", "verify_theorem2",
]
