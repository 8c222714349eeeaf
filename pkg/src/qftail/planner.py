"""Number of runs needed to reach a target relative error.

For a confidence multiplier C and target eps, the relative half-width
C/P * sqrt(V/M) falls to eps once M >= (C / (eps P))^2 V, where V is the
per-sample variance: P(1 - P) for crude Monte Carlo and the importance
sampling variance of the weighted indicator otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .canonical import CanonicalForm
from .errors import DegenerateProbabilityError, QFTailInputError, ZeroEstimateError
from .sampler import DEFAULT_C, EstimateResult, importance_sampling

DEFAULT_PILOT = 10_000


@dataclass(frozen=True)
class AccuracySpec:
    epsilon: float = 0.05
    confidence_c: float = DEFAULT_C

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise QFTailInputError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not self.confidence_c > 0:
            raise QFTailInputError(f"confidence_c must be positive, got {self.confidence_c}")


def _runs(c_over_eps_sq: float, ratio: float) -> int:
    return max(1, math.ceil(c_over_eps_sq * ratio))


def mc_runs_required(p: float, spec: AccuracySpec | None = None) -> int:
    """ceil((C / eps)^2 (1 - p) / p)."""
    spec = spec or AccuracySpec()
    p = float(p)
    if not 0 < p < 1:
        raise DegenerateProbabilityError(f"p must lie strictly inside (0, 1), got {p}")
    return _runs((spec.confidence_c / spec.epsilon) ** 2, (1.0 - p) / p)


def is_runs_from_estimate(result: EstimateResult, spec: AccuracySpec | None = None) -> int:
    spec = spec or AccuracySpec()
    if result.estimate <= 0:
        raise ZeroEstimateError("pilot estimate is zero; cannot plan a relative error")
    if result.rel_error is not None and result.rel_error > 0:
        # scale-free form, immune to under/overflow of estimate^2
        ratio = (result.rel_error / result.confidence_c) ** 2 * result.samples
    else:
        ratio = result.variance / result.estimate**2
    return _runs((spec.confidence_c / spec.epsilon) ** 2, ratio)


def is_runs_required(
    cf: CanonicalForm,
    gamma0: float,
    spec: AccuracySpec | None = None,
    pilot: int = DEFAULT_PILOT,
    seed: int = 0,
    *,
    workers: int | None = None,
    full_output: bool = False,
):
    """Runs of the importance-sampling estimator needed for ``spec``.

    The variance is taken from a pilot run of ``pilot`` samples, so the
    answer carries the pilot's sampling noise.  With ``full_output`` the
    pilot :class:`EstimateResult` is returned alongside the count.
    """
    spec = spec or AccuracySpec()
    if pilot < 1000:
        raise QFTailInputError(f"pilot must be at least 1000 samples, got {pilot}")
    res = importance_sampling(cf, gamma0, pilot, seed, workers=workers, confidence_c=spec.confidence_c)
    runs = is_runs_from_estimate(res, spec)
    return (runs, res) if full_output else runs
