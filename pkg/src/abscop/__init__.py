"""Approximate Bayesian inference for copula dependence functionals.

Posterior samples for Spearman's rho, its multivariate versions and tail
dependence indices are obtained by weighting prior proposals with an
exponentially tilted empirical likelihood and resampling.
"""

__version__ = "0.1.0"

from .baselines import (
    FrequentistInterval,
    IntervalMethod,
    ThetaChain,
    TruncatedNormalPrior,
    chain_to_rho,
    freq_interval,
    mh_theta_chain,
    rho_asymptotic_variance,
)
from .betel import BetelSolution, Status, log_betel, solve_tilt
from .copula_models import (
    CopulaSpec,
    Family,
    FunctionalKind,
    Kind,
    ParameterDomainError,
    UnsupportedDimensionError,
    copula_cdf,
    copula_log_density,
    sample_copula,
    spearman_of_theta,
    true_functional,
)
from .engine import (
    DegeneratePosterior,
    MarginalMode,
    MarginalSource,
    PosteriorSummary,
    PriorSpec,
    WeightedPosterior,
    draw_pseudo_data,
    resample,
    run_abscop,
    summarize,
)
from .functionals import empirical_copula_at, estimate, moment_vector, per_observation, pseudo_observations

__all__ = [
    "BetelSolution", "CopulaSpec", "DegeneratePosterior", "Family", "FrequentistInterval",
    "FunctionalKind", "IntervalMethod", "Kind", "MarginalMode", "MarginalSource",
    "ParameterDomainError", "PosteriorSummary", "PriorSpec", "Status", "ThetaChain",
    "TruncatedNormalPrior", "UnsupportedDimensionError", "WeightedPosterior", "chain_to_rho",
    "copula_cdf", "copula_log_density", "draw_pseudo_data", "empirical_copula_at", "estimate",
    "freq_interval", "log_betel", "mh_theta_chain", "moment_vector", "per_observation",
    "pseudo_observations", "resample", "rho_asymptotic_variance", "run_abscop", "sample_copula",
    "solve_tilt", "spearman_of_theta", "summarize", "true_functional",
]
