"""Scalar special functions: normal CDF, Marcum-Q of order 1/2, lower incomplete gamma."""

from __future__ import annotations

import math

import numpy as np
from scipy import special as sc

from .errors import IterationLimitError

_SQRT2 = math.sqrt(2.0)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

# Gauss-Legendre rule on [-1, 1]; exact to ~1e-16 for the smooth integrand
# used below on intervals of length <= 2 standard deviations.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(40)
_QUADRATURE_MAX_B = 2.0

MAX_ITER = 500


def normal_cdf(x):
    """Standard normal CDF via the complementary error function."""
    return np.clip(0.5 * sc.erfc(-np.asarray(x, dtype=float) / _SQRT2), 0.0, 1.0)[()]


def normal_sf(x):
    return np.clip(0.5 * sc.erfc(np.asarray(x, dtype=float) / _SQRT2), 0.0, 1.0)[()]


def normal_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x - _LOG_SQRT_2PI)[()]


def _log_ncx1_cdf_quad(a: float, b: float) -> float:
    # P(|Z + a| <= b) = int_0^b [phi(u - a) + phi(u + a)] du, summed in log space
    u = 0.5 * b * (_GL_NODES + 1.0)
    log_f = -0.5 * (u - a) ** 2 - _LOG_SQRT_2PI + np.log1p(np.exp(-2.0 * a * u))
    return float(sc.logsumexp(log_f, b=0.5 * b * _GL_WEIGHTS))


def log_marcum_q_half_complement(a: float, b: float) -> float:
    """log(1 - Q_{1/2}(a, b)) = log P((Z + a)^2 <= b^2), accurate for tiny values.

    ``a`` enters only through its magnitude.
    """
    a = abs(float(a))
    b = float(b)
    if b < 0 or math.isnan(a) or math.isnan(b):
        raise ValueError(f"marcum_q_half requires b >= 0, got a={a}, b={b}")
    if b == 0.0:
        return -math.inf
    if math.isinf(b):
        return 0.0
    if b <= _QUADRATURE_MAX_B:
        return min(_log_ncx1_cdf_quad(a, b), 0.0)
    # Phi(b - a) - Phi(-b - a); the second term is at most exp(-2ab) times the first
    hi = sc.log_ndtr(b - a)
    lo = sc.log_ndtr(-b - a)
    return float(min(hi + math.log1p(-math.exp(lo - hi)), 0.0))


def marcum_q_half_complement(a: float, b: float) -> float:
    """1 - Q_{1/2}(a, b), the CDF of the non-central chi-square(1) at b^2."""
    return math.exp(log_marcum_q_half_complement(a, b))


def marcum_q_half(a: float, b: float) -> float:
    """Generalized Marcum-Q function of order 1/2.

    Q_{1/2}(a, b) = P((Z + a)^2 > b^2) = Phi(a - b) + Phi(-a - b) for Z ~ N(0, 1).
    Computed directly from the two upper tails, so small values keep full
    relative precision; use :func:`marcum_q_half_complement` when the lower
    tail is wanted.
    """
    a = abs(float(a))
    b = float(b)
    if b < 0 or math.isnan(a) or math.isnan(b):
        raise ValueError(f"marcum_q_half requires b >= 0, got a={a}, b={b}")
    if b <= _QUADRATURE_MAX_B:
        return min(max(-math.expm1(log_marcum_q_half_complement(a, b)), 0.0), 1.0)
    q = 0.5 * math.erfc((b - a) / _SQRT2) + 0.5 * math.erfc((b + a) / _SQRT2)
    return min(max(q, 0.0), 1.0)


def _log_gamma_series(s: float, x: float) -> float:
    # gamma(s, x) = x^s e^{-x} sum_n x^n / (s (s+1) ... (s+n))
    term = 1.0 / s
    total = term
    ap = s
    for _ in range(MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-16:
            return s * math.log(x) - x + math.log(total)
    raise IterationLimitError(f"incomplete gamma series did not converge for s={s}, x={x}")


def _log_upper_gamma_cf(s: float, x: float) -> float:
    # Gamma(s, x) = x^s e^{-x} / (x + 1 - s - 1*(1-s)/(x + 3 - s - ...)), modified Lentz
    tiny = 1e-300
    b = x + 1.0 - s
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, MAX_ITER + 1):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return s * math.log(x) - x + math.log(h)
    raise IterationLimitError(f"incomplete gamma continued fraction did not converge for s={s}, x={x}")


def log_lower_incomplete_gamma(s: float, x: float) -> float:
    """log of the (unregularized) lower incomplete gamma function."""
    if not s > 0:
        raise ValueError(f"s must be positive, got {s}")
    if not x >= 0:
        raise ValueError(f"x must be non-negative, got {x}")
    if x == 0.0:
        return -math.inf
    if math.isinf(x):
        return math.lgamma(s)
    if x < s + 1.0:
        return _log_gamma_series(s, x)
    lg = math.lgamma(s)
    upper_ratio = math.exp(_log_upper_gamma_cf(s, x) - lg)
    return lg + math.log1p(-upper_ratio)


def lower_incomplete_gamma(s: float, x: float) -> float:
    """gamma(s, x) = int_0^x t^{s-1} e^{-t} dt.

    Series expansion below x = s + 1, Lentz continued fraction for the
    upper function above it.
    """
    return math.exp(log_lower_incomplete_gamma(s, x))
