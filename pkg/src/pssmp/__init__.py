"""Lamperti-based simulation of positive self-similar Markov processes.

The Lévy process in the Lamperti representation is sampled on a grid, its
exponential functional is discretized and inverted, and the resulting
discretization errors are compared with their limit laws.
"""

__version__ = "0.1.0"

from .conditioned import (
    ConditionedSpec,
    bessel3_exact,
    bessel3_lamperti_model,
    htransform_cdf_estimator,
)
from .lamperti import (
    HittingResult,
    IntegralApprox,
    PssmpSample,
    Scheme,
    integral,
    invert,
    sample_pssmp,
    sample_from_path,
    time_shift,
)
from .levy import GridPath, LevyModel, coarsen, extend_path, make_model, sample_path, stable_increment
from .limits import (
    ErrorRecord,
    coupled_records,
    delta_surrogate,
    error_bounds,
    limit_inverse_error,
    prelimit_integral_error,
    prelimit_inverse_error,
    relative_error_limit,
    relative_error_prelimit,
    zoom_trajectory,
)
from .mc import ExperimentConfig, run_experiment
from .rng import Stream
from .stats import HistogramSpec, hill_tail_index, ks_distance, trimmed_histogram

__all__ = [
    "ConditionedSpec",
    "ErrorRecord",
    "ExperimentConfig",
    "GridPath",
    "HistogramSpec",
    "HittingResult",
    "IntegralApprox",
    "LevyModel",
    "PssmpSample",
    "Scheme",
    "Stream",
    "bessel3_exact",
    "bessel3_lamperti_model",
    "coarsen",
    "coupled_records",
    "delta_surrogate",
    "error_bounds",
    "extend_path",
    "hill_tail_index",
    "htransform_cdf_estimator",
    "integral",
    "invert",
    "ks_distance",
    "limit_inverse_error",
    "make_model",
    "prelimit_integral_error",
    "prelimit_inverse_error",
    "relative_error_limit",
    "relative_error_prelimit",
    "run_experiment",
    "sample_from_path",
    "sample_path",
    "sample_pssmp",
    "stable_increment",
    "time_shift",
    "trimmed_histogram",
    "zoom_trajectory",
]
