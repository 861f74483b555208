"""Predictive probabilities and confidence intervals for count time series."""

from .asymptotic import delta_ci_param, longrun_sigma, nonparam_ci, predictive_gradient, z_quantile
from .bootstrap import (
    BootstrapResult,
    BootstrapScenario,
    basic_interval,
    percentile_interval,
    run_bootstrap,
)
from .estimation import FitResult, conditional_loglik, fit_cml, information_matrix
from .estimators import NonparametricPredictor, ParametricPredictor, check_count_series
from .exceptions import (
    CountPredError,
    DegeneratePoint,
    DegenerateSeries,
    InsufficientVisits,
    InvalidState,
    NonConvergence,
    ParseError,
    SingularInformation,
    TooManyRefitFailures,
    TruncationTooTight,
    ZeroGradient,
    ZeroLikelihood,
)
from .experiments import (
    CoverageReport,
    ExperimentConfig,
    pseudo_true_target,
    run_experiment,
    standard_dgps,
    write_report,
)
from .models import (
    FiniteMarkovModel,
    Geometric,
    InarchModel,
    InarModel,
    NegBinomial,
    Poisson,
    empirical_transition_model,
    get_family,
    inar_transition_prob,
    inarch_transition_prob,
    innovation_pmf,
    simulate_finite_chain,
    simulate_inar,
    simulate_inarch,
)
from .prediction import (
    PredictiveEstimate,
    hstep_predictive_prob,
    model_predictive_prob,
    predictive_prob_from_row,
    predictive_prob_nonparam,
    predictive_prob_nonparam_order_p,
    predictive_prob_param,
)
from .series import (
    ConfidenceInterval,
    CountSeries,
    PredictionSet,
    load_series,
    summary,
    write_series,
)

__version__ = "0.1.0"

__all__ = [
    "delta_ci_param",
    "longrun_sigma",
    "nonparam_ci",
    "predictive_gradient",
    "z_quantile",
    "BootstrapResult",
    "BootstrapScenario",
    "basic_interval",
    "percentile_interval",
    "run_bootstrap",
    "FitResult",
    "conditional_loglik",
    "fit_cml",
    "information_matrix",
    "NonparametricPredictor",
    "ParametricPredictor",
    "check_count_series",
    "CountPredError",
    "DegeneratePoint",
    "DegenerateSeries",
    "InsufficientVisits",
    "InvalidState",
    "NonConvergence",
    "ParseError",
    "SingularInformation",
    "TooManyRefitFailures",
    "TruncationTooTight",
    "ZeroGradient",
    "ZeroLikelihood",
    "CoverageReport",
    "ExperimentConfig",
    "pseudo_true_target",
    "run_experiment",
    "standard_dgps",
    "write_report",
    "FiniteMarkovModel",
    "Geometric",
    "InarchModel",
    "InarModel",
    "NegBinomial",
    "Poisson",
    "empirical_transition_model",
    "get_family",
    "inar_transition_prob",
    "inarch_transition_prob",
    "innovation_pmf",
    "simulate_finite_chain",
    "simulate_inar",
    "simulate_inarch",
    "PredictiveEstimate",
    "hstep_predictive_prob",
    "model_predictive_prob",
    "predictive_prob_from_row",
    "predictive_prob_nonparam",
    "predictive_prob_nonparam_order_p",
    "predictive_prob_param",
    "ConfidenceInterval",
    "CountSeries",
    "PredictionSet",
    "load_series",
    "summary",
    "write_series",
    "__version__",
]
