"""Profile estimation for finite populations under Bernoulli subsampling.

A population of k typed items is observed through a thinned sample (each
item kept independently with probability p).  This package estimates the
population's *profile* (the empirical distribution of type sizes) by a
minimum-distance LP fit, quantifies what any estimator can achieve
through truncated modulus-of-continuity programs of the binomial thinning
kernel, and certifies lower bounds on those programs with scaled-Laguerre
witness sequences.
"""

__version__ = "0.1.0"

from .population import (
    Urn,
    Profile,
    Fingerprint,
    profile_of_urn,
    sample_bernoulli,
    fingerprint,
    observed_distribution,
    tv_distance,
    wasserstein1,
    sorted_empirical_baseline,
    make_urn,
    urn_from_json,
    urn_to_json,
    profile_from_json,
    profile_to_json,
)
from .kernel import BinomialKernel
from .lp import LpProblem, LpSolution, solve_lp, format_problem
from .estimator import (
    EstimateReport,
    ProfileEstimator,
    min_distance_estimate,
    estimate_functional,
    distinct_elements_estimate,
)
from .modulus import (
    ModulusResult,
    tv_modulus,
    signed_l1_modulus,
    modulus_pair,
    modulus_grid,
    signed_to_pair,
    modulus_decay_bound,
    minimax_risk_bracket,
    default_truncation,
)
from .witness import (
    WitnessCoefficients,
    scaled_laguerre,
    build_witness,
    certified_l1_modulus_lower,
    consecutive_coefficient_check,
    hinf_witness_check,
    coefficient_norm_check,
    verify_generating_identity,
)
from .risk_lab import (
    ExperimentConfig,
    RiskRow,
    run_risk_sweep,
    hard_pair_from_witness,
    concentration_check,
    labeled_distribution_risk_bound,
)

__all__ = [
    "__version__",
    "Urn", "Profile", "Fingerprint", "profile_of_urn", "sample_bernoulli",
    "fingerprint", "observed_distribution", "tv_distance", "wasserstein1",
    "sorted_empirical_baseline", "make_urn", "urn_from_json", "urn_to_json",
    "profile_from_json", "profile_to_json",
    "BinomialKernel",
    "LpProblem", "LpSolution", "solve_lp", "format_problem",
    "EstimateReport", "ProfileEstimator", "min_distance_estimate",
    "estimate_functional", "distinct_elements_estimate",
    "ModulusResult", "tv_modulus", "signed_l1_modulus", "modulus_pair",
    "modulus_grid", "signed_to_pair", "modulus_decay_bound",
    "minimax_risk_bracket", "default_truncation",
    "WitnessCoefficients", "scaled_laguerre", "build_witness",
    "certified_l1_modulus_lower", "consecutive_coefficient_check",
    "hinf_witness_check", "coefficient_norm_check", "verify_generating_identity",
    "ExperimentConfig", "RiskRow", "run_risk_sweep", "hard_pair_from_witness",
    "concentration_check", "labeled_distribution_risk_bound",
]
