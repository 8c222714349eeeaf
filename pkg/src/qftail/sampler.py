"""Naive Monte Carlo and importance-sampling estimators of P(S_d <= gamma0).

Samples are drawn in fixed-size chunks.  Chunk ``k`` uses its own stream seeded
from ``(seed, k)`` and the per-chunk moments are merged in chunk order, so a
result depends only on ``(seed, m)`` and never on the number of workers.
"""

from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .canonical import CanonicalForm
from .errors import DegenerateWeightError, NonPositiveThresholdError, QFTailInputError

logger = logging.getLogger(__name__)

CHUNK_SIZE = 2**14
DEFAULT_C = 1.96

NAIVE_MC = "naive_mc"
IMPORTANCE_SAMPLING = "importance_sampling"


@dataclass(frozen=True)
class BiasedDensitySpec:
    """Per-coordinate Gaussian proposal N(means[i], scales[i]^2) for Z_i."""

    means: np.ndarray
    scales: np.ndarray

    @property
    def d(self) -> int:
        return self.scales.size

    @property
    def log_cap(self) -> float:
        """log of the bound on the likelihood ratio over the event S_d <= gamma0.

        Equals sum_i log(scales[i]) + d/2, i.e.
        log[(gamma0/d)^{d/2} prod_i lambda_i^{-1/2} e^{d/2}].
        """
        return float(np.sum(np.log(self.scales)) + 0.5 * self.d)


@dataclass(frozen=True)
class EstimateResult:
    estimate: float
    variance: float
    rel_error: float | None
    ci_halfwidth: float
    samples: int
    seconds: float
    method: str
    confidence_c: float = DEFAULT_C

    @property
    def std_error(self) -> float:
        return math.sqrt(self.variance / self.samples)

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "estimate": self.estimate,
            "variance": self.variance,
            "rel_error": self.rel_error,
            "ci_halfwidth": self.ci_halfwidth,
            "samples": self.samples,
            "seconds": self.seconds,
        }


class Moments(NamedTuple):
    """Count, mean and sum of squared deviations of a sample."""

    count: int
    mean: float
    m2: float

    @classmethod
    def of(cls, values: np.ndarray) -> "Moments":
        n = values.size
        if n == 0:
            return cls(0, 0.0, 0.0)
        mean = float(np.mean(values))
        dev = values - mean
        return cls(n, mean, float(np.dot(dev, dev)))

    def merge(self, other: "Moments") -> "Moments":
        # Chan et al. pairwise update
        if self.count == 0:
            return other
        if other.count == 0:
            return self
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / n
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / n
        return Moments(n, mean, m2)

    @property
    def variance(self) -> float:
        return self.m2 / (self.count - 1) if self.count > 1 else 0.0


def chunk_rng(seed: int, chunk_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk_index,)))


def _chunk_sizes(m: int) -> list[int]:
    full, rest = divmod(m, CHUNK_SIZE)
    return [CHUNK_SIZE] * full + ([rest] if rest else [])


def _default_workers() -> int:
    return min(8, os.cpu_count() or 1)


def _run_chunks(kernel: Callable[[int, int], Moments], m: int, workers: int | None) -> Moments:
    sizes = _chunk_sizes(m)
    workers = _default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(sizes) == 1:
        parts = [kernel(k, size) for k, size in enumerate(sizes)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(kernel, range(len(sizes)), sizes))
    total = Moments(0, 0.0, 0.0)
    for part in parts:
        total = total.merge(part)
    return total


def _check_gamma0(gamma0: float) -> float:
    gamma0 = float(gamma0)
    if not (gamma0 > 0):
        raise NonPositiveThresholdError(f"gamma0 must be positive, got {gamma0}")
    return gamma0


def _finish(estimate, variance, m, seconds, method, c) -> EstimateResult:
    half = c * math.sqrt(variance / m)
    rel = half / estimate if estimate > 0 else None
    return EstimateResult(
        estimate=float(estimate),
        variance=float(variance),
        rel_error=rel,
        ci_halfwidth=half,
        samples=int(m),
        seconds=seconds,
        method=method,
        confidence_c=c,
    )


def make_biased_spec(cf: CanonicalForm, gamma0: float) -> BiasedDensitySpec:
    """Proposal centred at -alpha with sigma_i = sqrt(gamma0 / (d lambda_i)).

    Under it every lambda_i (Z_i + alpha_i)^2 has mean gamma0/d, so the
    biased mean of S_d is exactly gamma0.
    """
    gamma0 = _check_gamma0(gamma0)
    means = -cf.alphas.copy()
    scales = np.sqrt(gamma0 / (cf.d * cf.lambdas))
    means.setflags(write=False)
    scales.setflags(write=False)
    return BiasedDensitySpec(means, scales)


def draw_importance_samples(cf: CanonicalForm, spec: BiasedDensitySpec, rng: np.random.Generator, n: int):
    """Draw ``n`` proposal points.

    Returns
    -------
    sums : ndarray (n,)
        S_d evaluated at each draw.
    log_weights : ndarray (n,)
        log likelihood ratio log f(z)/f*(z)
        = sum_i log sigma_i + 1/2 sum_i [((z_i + alpha_i)/sigma_i)^2 - z_i^2].
    """
    eps = rng.standard_normal((n, cf.d))
    z = spec.means + spec.scales * eps
    shifted = z + cf.alphas
    sums = shifted**2 @ cf.lambdas
    log_weights = np.sum(np.log(spec.scales)) + 0.5 * np.sum((shifted / spec.scales) ** 2 - z * z, axis=1)
    return sums, log_weights


def naive_mc(
    cf: CanonicalForm,
    gamma0: float,
    m: int,
    seed: int = 0,
    *,
    workers: int | None = None,
    confidence_c: float = DEFAULT_C,
) -> EstimateResult:
    """Crude Monte Carlo: fraction of M draws of S_d that fall at or below gamma0.

    The reported variance is the Bernoulli form p(1 - p) M / (M - 1).
    """
    gamma0 = _check_gamma0(gamma0)
    m = int(m)
    if m < 1:
        raise QFTailInputError("naive_mc needs m >= 1")
    start = time.perf_counter()

    def kernel(k: int, size: int) -> Moments:
        z = chunk_rng(seed, k).standard_normal((size, cf.d))
        hits = int(np.count_nonzero(cf.sample(z) <= gamma0))
        return Moments(size, hits / size, hits * (size - hits) / size)

    total = _run_chunks(kernel, m, workers)
    p = round(total.mean * total.count) / m
    variance = p * (1.0 - p) * m / (m - 1) if m > 1 else 0.0
    return _finish(p, variance, m, time.perf_counter() - start, NAIVE_MC, confidence_c)


def importance_sampling(
    cf: CanonicalForm,
    gamma0: float,
    m_star: int,
    seed: int = 0,
    *,
    workers: int | None = None,
    confidence_c: float = DEFAULT_C,
) -> EstimateResult:
    """Importance-sampling estimate of P(S_d <= gamma0).

    Draws Z from :func:`make_biased_spec` and averages the indicator times the
    likelihood ratio.  Weights are accumulated relative to the likelihood cap
    ``exp(spec.log_cap)`` so they stay in [0, 1] whatever d and gamma0 are.

    Raises
    ------
    DegenerateWeightError
        If a non-finite likelihood ratio appears on an accepted sample.
    """
    gamma0 = _check_gamma0(gamma0)
    m_star = int(m_star)
    if m_star < 2:
        raise QFTailInputError("importance_sampling needs m_star >= 2")
    start = time.perf_counter()
    spec = make_biased_spec(cf, gamma0)
    log_cap = spec.log_cap

    def kernel(k: int, size: int) -> Moments:
        sums, log_w = draw_importance_samples(cf, spec, chunk_rng(seed, k), size)
        hit = sums <= gamma0
        if not np.all(np.isfinite(log_w[hit])):
            raise DegenerateWeightError("non-finite likelihood ratio on an accepted sample")
        scaled = np.where(hit, np.exp(log_w - log_cap), 0.0)
        return Moments.of(scaled)

    total = _run_chunks(kernel, m_star, workers)
    scale = math.exp(log_cap)
    estimate = total.mean * scale
    variance = total.variance * scale * scale
    res = _finish(estimate, variance, m_star, time.perf_counter() - start, IMPORTANCE_SAMPLING, confidence_c)
    if total.mean > 0 and (estimate == 0.0 or variance == 0.0 and total.variance > 0):
        # result under/overflowed in linear scale; keep the scale-free relative error
        rel = confidence_c * math.sqrt(total.variance / m_star) / total.mean
        res = EstimateResult(
            res.estimate, res.variance, rel, res.ci_halfwidth, res.samples, res.seconds, res.method, confidence_c
        )
    logger.debug("IS d=%d gamma0=%g m*=%d -> %g", cf.d, gamma0, m_star, res.estimate)
    return res
