"""Uncertainty evaluation for nominal properties.

Classifier outputs, and nominal measurements generally, carry their full
uncertainty in a probability mass function over the classes.  This
package represents such PMFs, summarizes their dispersion with the
normalized statistics used for nominal data, scores labeled prediction
sets with proper scoring rules, propagates class uncertainty into
downstream quantitative models, and provides a conjugate Bayesian
Gaussian classifier whose predictive PMFs exercise the whole chain.
"""

from .bayes import (
    BayesianQDA,
    GaussianPosterior,
    NIWParams,
    PredictiveOutput,
    TrainingSet,
    default_prior,
    fit_posterior,
    plug_in_predict,
    posterior_predictive_closed,
    posterior_predictive_mc,
    predict_over_realizations,
    predictive_probs_closed,
    predictive_probs_mc,
    predictive_probs_plug_in,
    synth_gaussian_dataset,
)
from .dispersion import (
    STATISTIC_NAMES,
    DispersionStatistics,
    StatisticSummary,
    UncertaintyReport,
    alpha_quadratic_entropy,
    cnv,
    entropy_norm,
    entropy_star,
    iqv,
    report_all,
    sdm,
    sdm_sampling_variance,
    star_transform,
    summarize,
    uvr,
    wvr,
)
from .errors import (
    NominalUQError,
    NumericalError,
    ParseError,
    ValidationError,
)
from .pmf import (
    EPS_MODE,
    EPS_NORM,
    ModeSummary,
    Pmf,
    expected_distance_to_class,
    mode_summary,
    sample_class,
    sample_classes,
)
from .propagate import (
    ConditionalQuantModel,
    PropagationResult,
    analytic_mean,
    analytic_variance,
    mc_propagate,
)
from .scoring import (
    EPS_CLIP,
    ConfusionMatrix,
    LabeledProbabilities,
    brier_per_obs,
    brier_scores,
    confusion,
    ebs,
    exe,
    test_prior,
    xe_per_obs,
    xe_scores,
)

__version__ = "0.1.0"

__all__ = [
    "BayesianQDA",
    "ConditionalQuantModel",
    "ConfusionMatrix",
    "DispersionStatistics",
    "EPS_CLIP",
    "EPS_MODE",
    "EPS_NORM",
    "GaussianPosterior",
    "LabeledProbabilities",
    "ModeSummary",
    "NIWParams",
    "NominalUQError",
    "NumericalError",
    "ParseError",
    "Pmf",
    "PredictiveOutput",
    "PropagationResult",
    "STATISTIC_NAMES",
    "StatisticSummary",
    "TrainingSet",
    "UncertaintyReport",
    "ValidationError",
    "alpha_quadratic_entropy",
    "analytic_mean",
    "analytic_variance",
    "brier_per_obs",
    "brier_scores",
    "cnv",
    "confusion",
    "default_prior",
    "ebs",
    "entropy_norm",
    "entropy_star",
    "exe",
    "expected_distance_to_class",
    "fit_posterior",
    "iqv",
    "mc_propagate",
    "mode_summary",
    "plug_in_predict",
    "posterior_predictive_closed",
    "posterior_predictive_mc",
    "predict_over_realizations",
    "predictive_probs_closed",
    "predictive_probs_mc",
    "predictive_probs_plug_in",
    "report_all",
    "sample_class",
    "sample_classes",
    "sdm",
    "sdm_sampling_variance",
    "star_transform",
    "summarize",
    "synth_gaussian_dataset",
    "test_prior",
    "uvr",
    "wvr",
    "xe_per_obs",
    "xe_scores",
]
