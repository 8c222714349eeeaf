"""Deterministic baselines: Imhof inversion and the Lugannani-Rice saddle-point approximation.

Both work on a :class:`~qftail.canonical.CanonicalForm`, i.e. on
S = sum_i lambda_i (Z_i + alpha_i)^2 with one degree of freedom per term.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy import special as sc

from .canonical import CanonicalForm
from .errors import (
    AtMeanSingularityError,
    NoConvergenceError,
    NonPositiveThresholdError,
    QFTailInputError,
    QuadratureFailure,
)

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class ImhofConfig:
    abs_tol: float = 1e-12
    max_interval: float = 500.0
    max_evals: int = 50_000

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise QFTailInputError("abs_tol must be positive")
        if not self.max_interval > 0:
            raise QFTailInputError("max_interval must be positive")
        if self.max_evals < 100:
            raise QFTailInputError("max_evals must be at least 100")


@dataclass(frozen=True)
class SpaConfig:
    newton_tol: float = 1e-10
    max_iter: int = 200
    bracket_expansion: float = 2.0

    def __post_init__(self):
        if not self.newton_tol > 0:
            raise QFTailInputError("newton_tol must be positive")
        if self.max_iter < 1:
            raise QFTailInputError("max_iter must be at least 1")
        if not self.bracket_expansion > 1:
            raise QFTailInputError("bracket_expansion must exceed 1")


@dataclass(frozen=True)
class ImhofInfo:
    value: float
    raw: float
    error_estimate: float
    reliable: bool
    evaluations: int
    upper_limit: float


@dataclass(frozen=True)
class SpaInfo:
    value: float
    s_hat: float
    residual: float
    k2: float
    w: float
    v: float
    iterations: int


def _check(gamma0: float) -> float:
    gamma0 = float(gamma0)
    if not gamma0 > 0:
        raise NonPositiveThresholdError(f"gamma0 must be positive, got {gamma0}")
    return gamma0


# ---------------------------------------------------------------- Imhof

class _ImhofIntegrand:
    """sin(theta(u)) / (u rho(u)) and its slowly varying pieces."""

    def __init__(self, cf: CanonicalForm, x: float):
        self.lam = cf.lambdas
        self.a2 = cf.alphas**2
        self.x = x
        self.slope0 = 0.5 * float(np.sum(self.lam * (1.0 + self.a2))) - 0.5 * x

    def phase(self, u):
        # theta(u) + x u / 2
        lu = np.multiply.outer(u, self.lam)
        return 0.5 * np.sum(np.arctan(lu) + self.a2 * lu / (1.0 + lu * lu), axis=-1)

    def log_rho(self, u):
        lu2 = np.multiply.outer(u, self.lam) ** 2
        return np.sum(0.25 * np.log1p(lu2) + 0.5 * self.a2 * lu2 / (1.0 + lu2), axis=-1)

    def __call__(self, u):
        u = float(u)
        if u < 1e-8:
            return self.slope0
        theta = self.phase(u) - 0.5 * self.x * u
        return math.sin(theta) / (u * math.exp(self.log_rho(u)))

    def tail_sin(self, u):
        # coefficient of cos(x u / 2)
        return math.sin(self.phase(u)) / (u * math.exp(self.log_rho(u)))

    def tail_cos(self, u):
        # coefficient of -sin(x u / 2)
        return math.cos(self.phase(u)) / (u * math.exp(self.log_rho(u)))

    def amplitude_cutoff(self, tol: float, cap: float) -> float:
        """Smallest u (within a factor 2, at most ``cap``) with 1/(u rho(u)) <= tol."""
        u = 1.0
        target = -math.log(tol)
        while u < cap and math.log(u) + self.log_rho(u) < target:
            u *= 2.0
        return min(u, cap)


def imhof_cdf(cf: CanonicalForm, gamma0: float, cfg: ImhofConfig | None = None, full_output: bool = False):
    """P(S <= gamma0) by Imhof's inversion formula.

    P = 1/2 - (1/pi) int_0^inf sin(theta(u)) / (u rho(u)) du, with
    theta(u) = 1/2 sum_i [arctan(lambda_i u) + alpha_i^2 lambda_i u / (1 + lambda_i^2 u^2)] - gamma0 u / 2,
    rho(u) = prod_i (1 + lambda_i^2 u^2)^{1/4} exp(1/2 sum_i alpha_i^2 lambda_i^2 u^2 / (1 + lambda_i^2 u^2)).

    The integral is split at U: adaptive Gauss-Kronrod on [0, U], and a
    Fourier-weighted rule on [U, inf) after writing
    sin(theta) = sin(phase) cos(gamma0 u/2) - cos(phase) sin(gamma0 u/2).

    Since P is obtained as a difference of O(1) quantities, values below
    about ``10 * abs_tol`` are cancellation noise; they are returned clamped
    to [0, 1] with ``reliable=False`` in the info record.

    Returns
    -------
    float, or (float, ImhofInfo) when ``full_output`` is set.

    Raises
    ------
    QuadratureFailure
        If the combined error estimate exceeds ``abs_tol``.
    """
    x = _check(gamma0)
    cfg = cfg or ImhofConfig()
    f = _ImhofIntegrand(cf, x)
    upper = f.amplitude_cutoff(cfg.abs_tol, cfg.max_interval)
    limit = max(cfg.max_evals // 21, 10)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        head, err_head, info = integrate.quad(
            f, 0.0, upper, epsabs=0.5 * cfg.abs_tol, epsrel=0.0, limit=limit, full_output=1
        )[:3]
        evals = info["neval"]
        omega = 0.5 * x
        t1, e1, i1 = integrate.quad(
            f.tail_sin, upper, np.inf, weight="cos", wvar=omega, epsabs=0.25 * cfg.abs_tol, limlst=100, full_output=1
        )[:3]
        t2, e2, i2 = integrate.quad(
            f.tail_cos, upper, np.inf, weight="sin", wvar=omega, epsabs=0.25 * cfg.abs_tol, limlst=100, full_output=1
        )[:3]
        evals += i1.get("neval", 0) + i2.get("neval", 0)

    integral = head + t1 - t2
    err = err_head + e1 + e2
    raw = 0.5 - integral / math.pi
    err_p = err / math.pi
    if not (err_p <= cfg.abs_tol) or not math.isfinite(raw):
        raise QuadratureFailure(
            f"Imhof quadrature error estimate {err_p:.3e} exceeds abs_tol {cfg.abs_tol:.1e} ({evals} evaluations)"
        )
    value = min(max(raw, 0.0), 1.0)
    reliable = raw >= 10.0 * cfg.abs_tol and raw <= 1.0 + cfg.abs_tol
    if full_output:
        return value, ImhofInfo(value, raw, err_p, bool(reliable), int(evals), upper)
    return value


# ----------------------------------------------------------------- spa

class CumulantGeneratingFunction:
    """K(s) = sum_i [-1/2 log(1 - 2 s lambda_i) + s lambda_i alpha_i^2 / (1 - 2 s lambda_i)].

    Defined for s < 1 / (2 lambda_max).
    """

    def __init__(self, cf: CanonicalForm):
        self.lam = cf.lambdas
        self.a2 = cf.alphas**2
        self.s_max = 0.5 / float(np.max(self.lam))

    def __call__(self, s: float) -> float:
        t = 1.0 - 2.0 * s * self.lam
        return float(np.sum(-0.5 * np.log(t) + s * self.lam * self.a2 / t))

    def first(self, s: float) -> float:
        t = 1.0 - 2.0 * s * self.lam
        return float(np.sum(self.lam / t + self.lam * self.a2 / t**2))

    def second(self, s: float) -> float:
        t = 1.0 - 2.0 * s * self.lam
        l2 = self.lam**2
        return float(np.sum(2.0 * l2 / t**2 + 4.0 * l2 * self.a2 / t**3))


def _solve_saddlepoint(k: CumulantGeneratingFunction, x: float, d: int, cfg: SpaConfig):
    """Safeguarded Newton for K'(s) = x; K' is increasing so a sign bracket always exists."""
    mean = k.first(0.0)
    if x < mean:
        lo, hi = -d / (2.0 * x), 0.0
        for _ in range(cfg.max_iter):
            if k.first(lo) < x:
                break
            hi = lo
            lo *= cfg.bracket_expansion
        else:
            raise NoConvergenceError("could not bracket the saddle point")
        s = min(max(-d / (2.0 * x), lo), hi)
    else:
        lo, hi = 0.0, k.s_max
        step = 0.5 * k.s_max
        for _ in range(cfg.max_iter):
            cand = k.s_max - step
            if k.first(cand) > x:
                hi = cand
                break
            lo = cand
            step /= cfg.bracket_expansion
        else:
            raise NoConvergenceError("could not bracket the saddle point")
        s = 0.5 * (lo + hi)

    for it in range(1, cfg.max_iter + 1):
        r = k.first(s) - x
        if abs(r) <= cfg.newton_tol:
            return s, r, it
        if r > 0:
            hi = s
        else:
            lo = s
        step = r / k.second(s)
        s_new = s - step
        if not (lo < s_new < hi):
            s_new = 0.5 * (lo + hi)
        if s_new == s:
            break
        s = s_new
    r = k.first(s) - x
    if abs(r) <= cfg.newton_tol:
        return s, r, cfg.max_iter
    raise NoConvergenceError(f"saddle-point equation unsolved: |K'(s) - x| = {abs(r):.3e}")


def spa_cdf(cf: CanonicalForm, gamma0: float, cfg: SpaConfig | None = None, full_output: bool = False):
    """Lugannani-Rice approximation of P(S <= gamma0).

    Solves K'(s) = gamma0 and returns Phi(w) + phi(w) (1/w - 1/v) with
    w = sign(s) sqrt(2 (s gamma0 - K(s))) and v = s sqrt(K''(s)).  In the
    left tail the sum is evaluated as phi(w) [Phi(w)/phi(w) + 1/w - 1/v]
    so it keeps relative precision far below 1e-300/phi scale.

    Raises
    ------
    AtMeanSingularityError
        If gamma0 is within 1e-8 (relative) of E[S], where the formula is 0/0.
    NoConvergenceError
        If the saddle point cannot be located within ``max_iter`` steps.
    """
    x = _check(gamma0)
    cfg = cfg or SpaConfig()
    k = CumulantGeneratingFunction(cf)
    mean = k.first(0.0)
    if abs(x - mean) <= 1e-8 * mean:
        raise AtMeanSingularityError(f"gamma0={x} coincides with the mean {mean}")

    s, resid, iters = _solve_saddlepoint(k, x, cf.d, cfg)
    k2 = k.second(s)
    if not k2 > 0:
        raise NoConvergenceError(f"K''(s) = {k2} is not positive at the saddle point")
    w = math.copysign(math.sqrt(max(2.0 * (s * x - k(s)), 0.0)), s)
    v = s * math.sqrt(k2)
    if w < 0:
        mills = math.sqrt(0.5 * math.pi) * float(sc.erfcx(-w / math.sqrt(2.0)))
        bracket = mills + 1.0 / w - 1.0 / v
        value = math.exp(-0.5 * w * w - _LOG_SQRT_2PI) * bracket if bracket > 0 else 0.0
    else:
        value = float(sc.ndtr(w)) + math.exp(-0.5 * w * w - _LOG_SQRT_2PI) * (1.0 / w - 1.0 / v)
    value = min(max(value, 0.0), 1.0)
    if full_output:
        return value, SpaInfo(value, s, resid, k2, w, v, iters)
    return value
