"""Test-problem generators: Toeplitz power matrices and constant mean vectors."""

from __future__ import annotations

import numpy as np
from scipy.linalg import toeplitz

from .canonical import QuadFormProblem
from .errors import BaseOutOfRangeError, QFTailInputError


def toeplitz_power(n: int, base: float) -> np.ndarray:
    """M[i, j] = base ** |i - j|; positive definite for 0 < base < 1."""
    if n < 1:
        raise QFTailInputError(f"n must be positive, got {n}")
    if not 0 < base < 1:
        raise BaseOutOfRangeError(f"base must lie in (0, 1), got {base}")
    return toeplitz(float(base) ** np.arange(n))


def constant_mean(n: int, value: float) -> np.ndarray:
    if n < 1:
        raise QFTailInputError(f"n must be positive, got {n}")
    return np.full(n, float(value))


def toeplitz_problem(n: int, xi: float, rho: float, mu_value: float, gamma0: float) -> QuadFormProblem:
    """Form matrix xi^|i-j|, covariance rho^|i-j| and a constant mean."""
    return QuadFormProblem(constant_mean(n, mu_value), toeplitz_power(n, rho), toeplitz_power(n, xi), gamma0)


def db_to_linear(db: float) -> float:
    return 10.0 ** (float(db) / 10.0)
