"""Reduction of X^T Sigma X to a weighted sum of non-central chi-square(1) terms.

With X ~ N(mu, Sigma_X) and A = Sigma_X^{1/2} Sigma Sigma_X^{1/2} = U diag(lam) U^T,

    X^T Sigma X  =d=  sum_i lam_i (Z_i + alpha_i)^2,   alpha = U^T Sigma_X^{-1/2} mu,

with Z_i i.i.d. standard normal.  Directions where A has a (numerically) zero
eigenvalue contribute nothing and are dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateFormError,
    NonPositiveThresholdError,
    NonSymmetricError,
    NotPositiveDefiniteError,
    NotPSDError,
    QFTailInputError,
)

RANK_TOL = 1e-12
SYMMETRY_TOL = 1e-10


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class QuadFormProblem:
    """P(X^T Sigma X <= gamma0) for X ~ N(mu, sigma_x)."""

    mu: np.ndarray
    sigma_x: np.ndarray
    sigma: np.ndarray
    gamma0: float

    def __post_init__(self):
        object.__setattr__(self, "mu", _frozen(self.mu))
        object.__setattr__(self, "sigma_x", _frozen(self.sigma_x))
        object.__setattr__(self, "sigma", _frozen(self.sigma))
        object.__setattr__(self, "gamma0", float(self.gamma0))

    @property
    def n(self) -> int:
        return self.mu.shape[0]


@dataclass(frozen=True)
class CanonicalForm:
    """Eigenvalues and offsets of S_d = sum_i lambdas[i] (Z_i + alphas[i])^2.

    ``lambdas`` are strictly positive and sorted in descending order.  Use
    :meth:`from_arrays` to build one directly from (unsorted) arrays.
    """

    lambdas: np.ndarray
    alphas: np.ndarray
    n_original: int = field(default=-1)

    def __post_init__(self):
        lam = _frozen(self.lambdas).reshape(-1)
        alpha = _frozen(self.alphas).reshape(-1)
        if lam.shape != alpha.shape:
            raise QFTailInputError("lambdas and alphas must have equal length")
        if lam.size == 0:
            raise DegenerateFormError("canonical form needs at least one term")
        if not np.all(np.isfinite(lam)) or not np.all(np.isfinite(alpha)):
            raise QFTailInputError("lambdas and alphas must be finite")
        if np.any(lam <= 0):
            raise QFTailInputError("lambdas must be strictly positive")
        if np.any(np.diff(lam) > 0):
            raise QFTailInputError("lambdas must be sorted in descending order")
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "alphas", alpha)
        if self.n_original < 0:
            object.__setattr__(self, "n_original", lam.size)
        elif self.n_original < lam.size:
            raise QFTailInputError("n_original smaller than the number of terms")

    @classmethod
    def from_arrays(cls, lambdas, alphas=None) -> "CanonicalForm":
        lam = np.asarray(lambdas, dtype=float).reshape(-1)
        alpha = np.zeros_like(lam) if alphas is None else np.asarray(alphas, dtype=float).reshape(-1)
        order = np.argsort(-lam, kind="stable")
        return cls(lam[order], alpha[order] if alpha.shape == lam.shape else alpha)

    @property
    def d(self) -> int:
        return self.lambdas.size

    @property
    def dropped_mass(self) -> int:
        return self.n_original - self.d

    @property
    def mean(self) -> float:
        """E[S_d] = sum lambda_i (1 + alpha_i^2)."""
        return float(np.sum(self.lambdas * (1.0 + self.alphas**2)))

    @property
    def zero_mean(self) -> bool:
        return bool(np.all(self.alphas == 0.0))

    def sample(self, z: np.ndarray) -> np.ndarray:
        """Evaluate S_d on standard-normal draws of shape (..., d)."""
        return np.sum(self.lambdas * (z + self.alphas) ** 2, axis=-1)


def _check_symmetric(a: np.ndarray, name: str) -> np.ndarray:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise QFTailInputError(f"{name} must be a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise QFTailInputError(f"{name} has non-finite entries")
    scale = np.max(np.abs(a)) if a.size else 0.0
    if np.max(np.abs(a - a.T), initial=0.0) > SYMMETRY_TOL * scale:
        raise NonSymmetricError(f"{name} is not symmetric")
    return 0.5 * (a + a.T)


def validate_problem(p: QuadFormProblem, rank_tol: float = RANK_TOL) -> QuadFormProblem:
    """Check the problem invariants.

    Returns a copy with both matrices symmetrized as (A + A^T)/2; raises a
    :class:`~qftail.errors.QFTailInputError` subclass otherwise.
    """
    n = p.mu.shape[0] if p.mu.ndim == 1 else -1
    if n < 1:
        raise QFTailInputError("mu must be a non-empty vector")
    if p.sigma_x.shape != (n, n) or p.sigma.shape != (n, n):
        raise QFTailInputError(
            f"dimension mismatch: mu has {n} entries, sigma_x {p.sigma_x.shape}, sigma {p.sigma.shape}"
        )
    if not np.all(np.isfinite(p.mu)):
        raise QFTailInputError("mu has non-finite entries")
    sigma_x = _check_symmetric(p.sigma_x, "sigma_x")
    sigma = _check_symmetric(p.sigma, "sigma")

    ev = np.linalg.eigvalsh(sigma_x)
    if ev[0] <= rank_tol * max(abs(ev[-1]), np.finfo(float).tiny):
        raise NotPositiveDefiniteError(
            f"sigma_x is not positive definite (smallest eigenvalue {ev[0]:.3e})"
        )
    ev = np.linalg.eigvalsh(sigma)
    if ev[0] < -rank_tol * max(abs(ev[-1]), abs(ev[0])):
        raise NotPSDError(f"sigma is not positive semi-definite (smallest eigenvalue {ev[0]:.3e})")
    if not (np.isfinite(p.gamma0) and p.gamma0 > 0):
        raise NonPositiveThresholdError(f"gamma0 must be positive, got {p.gamma0}")
    return QuadFormProblem(p.mu, sigma_x, sigma, p.gamma0)


def _spd_power(m: np.ndarray, power: float, rank_tol: float = RANK_TOL) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    if w[0] <= rank_tol * max(abs(w[-1]), np.finfo(float).tiny):
        raise NotPositiveDefiniteError(f"matrix is not positive definite (smallest eigenvalue {w[0]:.3e})")
    r = (v * w**power) @ v.T
    return 0.5 * (r + r.T)


def symmetric_sqrt(m) -> np.ndarray:
    """Symmetric positive definite square root R of ``m`` (R @ R == m)."""
    m = np.asarray(m, dtype=float)
    m = _check_symmetric(m, "matrix")
    return _spd_power(m, 0.5)


def reduce(p: QuadFormProblem, rank_tol: float = RANK_TOL) -> CanonicalForm:
    """Reduce a quadratic-form problem to its canonical weighted chi-square sum.

    Parameters
    ----------
    p : QuadFormProblem
        Validated on entry.
    rank_tol : float
        Eigenvalues of Sigma_X^{1/2} Sigma Sigma_X^{1/2} at or below
        ``rank_tol * lambda_max`` are treated as zero and dropped.

    Returns
    -------
    CanonicalForm
        Eigenvalues in descending order (ties keep the eigensolver's order)
        and the matching offsets.  Signs of the offsets inside degenerate
        eigenspaces are whatever the eigensolver produces; only the
        distribution of S_d is meaningful.
    """
    p = validate_problem(p, rank_tol)
    w, v = np.linalg.eigh(p.sigma_x)
    root = (v * np.sqrt(w)) @ v.T
    inv_root = (v / np.sqrt(w)) @ v.T
    a = root @ p.sigma @ root
    a = 0.5 * (a + a.T)
    lam, u = np.linalg.eigh(a)
    alpha = u.T @ (inv_root @ p.mu)

    order = np.argsort(-lam, kind="stable")
    lam, alpha = lam[order], alpha[order]
    if lam[0] <= 0:
        raise DegenerateFormError("sigma has no positive eigenvalue; X^T Sigma X is identically zero")
    keep = lam > rank_tol * lam[0]
    return CanonicalForm(lam[keep], alpha[keep], n_original=p.n)
