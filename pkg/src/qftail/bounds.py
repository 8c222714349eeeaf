"""Analytic lower bounds on P(S_d <= gamma0) and the bounded-relative-error constant.

The product bound follows from the inclusion
    {lambda_i (Z_i + alpha_i)^2 <= gamma0/d for all i}  subset of  {S_d <= gamma0}
and independence of the Z_i.  Both bounds are accumulated as sums of logs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .canonical import CanonicalForm
from .errors import NonPositiveThresholdError, NonZeroMeanError
from .special import log_lower_incomplete_gamma, log_marcum_q_half_complement

_LOG_PI_E = math.log(math.pi * math.e)

_CONSTANT_NOTE = (
    "bre_constant bounds limsup E*[1{{S<=g}} L^2] / P^2 as g -> 0; it is an upper "
    "bound, not an estimate, and grows exponentially with d ({d} here)"
)


@dataclass(frozen=True)
class BoundReport:
    lower_bound: float
    bre_constant: float | None
    note: str

    def as_dict(self) -> dict:
        return {"lower_bound": self.lower_bound, "bre_constant": self.bre_constant, "note": self.note}


def _check(gamma0: float) -> float:
    gamma0 = float(gamma0)
    if not gamma0 > 0:
        raise NonPositiveThresholdError(f"gamma0 must be positive, got {gamma0}")
    return gamma0


def log_marcum_lower_bound(cf: CanonicalForm, gamma0: float) -> float:
    gamma0 = _check(gamma0)
    b = np.sqrt(gamma0 / (cf.d * cf.lambdas))
    return math.fsum(log_marcum_q_half_complement(a, bi) for a, bi in zip(cf.alphas, b))


def marcum_lower_bound(cf: CanonicalForm, gamma0: float) -> float:
    """prod_i [1 - Q_{1/2}(alpha_i, sqrt(gamma0 / (d lambda_i)))] <= P."""
    return min(math.exp(log_marcum_lower_bound(cf, gamma0)), 1.0)


def zero_mean_lower_bound(cf: CanonicalForm, gamma0: float) -> float:
    """pi^{-d/2} prod_i gamma(1/2, gamma0 / (2 d lambda_i)) for a central form."""
    gamma0 = _check(gamma0)
    if not cf.zero_mean:
        raise NonZeroMeanError("zero_mean_lower_bound requires all offsets to be zero")
    x = gamma0 / (2.0 * cf.d * cf.lambdas)
    log_bound = math.fsum(log_lower_incomplete_gamma(0.5, xi) for xi in x) - 0.5 * cf.d * math.log(math.pi)
    return min(math.exp(log_bound), 1.0)


def bre_constant(cf: CanonicalForm) -> tuple[float | None, str]:
    """Constant C with limsup second moment / P^2 <= C as gamma0 -> 0.

    ``prod_i pi e / alpha_i^2`` when every offset is non-zero,
    ``(pi e / 2)^d`` when every offset is zero; ``None`` for a mixture,
    which neither argument covers.  Returns ``(constant, note)``; the
    constant is ``inf`` if it overflows a double.
    """
    note = _CONSTANT_NOTE.format(d=cf.d)
    zero = cf.alphas == 0.0
    if np.all(zero):
        log_c = cf.d * (_LOG_PI_E - math.log(2.0))
    elif np.any(zero):
        return None, (
            "bre_constant unavailable: offsets mix zero and non-zero values, "
            "which neither the non-central nor the central argument covers"
        )
    else:
        log_c = math.fsum(_LOG_PI_E - 2.0 * math.log(abs(a)) for a in cf.alphas)
    try:
        return math.exp(log_c), note
    except OverflowError:
        return math.inf, note


def bound_report(cf: CanonicalForm, gamma0: float) -> BoundReport:
    constant, note = bre_constant(cf)
    return BoundReport(marcum_lower_bound(cf, gamma0), constant, note)
