"""Left-tail probabilities of Gaussian quadratic forms by importance sampling."""

from .baselines import ImhofConfig, SpaConfig, imhof_cdf, spa_cdf
from .bounds import bound_report, bre_constant, marcum_lower_bound, zero_mean_lower_bound
from .canonical import CanonicalForm, QuadFormProblem, reduce, symmetric_sqrt, validate_problem
from .genmat import db_to_linear, toeplitz_power, toeplitz_problem
from .planner import AccuracySpec, is_runs_required, mc_runs_required
from .sampler import EstimateResult, importance_sampling, make_biased_spec, naive_mc

__version__ = "0.1.0"

__all__ = [
    "AccuracySpec",
    "CanonicalForm",
    "EstimateResult",
    "ImhofConfig",
    "QuadFormProblem",
    "SpaConfig",
    "bound_report",
    "bre_constant",
    "db_to_linear",
    "imhof_cdf",
    "importance_sampling",
    "is_runs_required",
    "make_biased_spec",
    "marcum_lower_bound",
    "mc_runs_required",
    "naive_mc",
    "reduce",
    "spa_cdf",
    "symmetric_sqrt",
    "toeplitz_power",
    "toeplitz_problem",
    "validate_problem",
    "zero_mean_lower_bound",
]
