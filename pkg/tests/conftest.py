import numpy as np
import pytest

from qftail.canonical import CanonicalForm, QuadFormProblem, reduce
from qftail.genmat import db_to_linear, toeplitz_problem


def family_form(n, xi=0.4, rho=0.8, mu=1.0) -> CanonicalForm:
    return reduce(toeplitz_problem(n, xi, rho, mu, 1.0))


def random_spd(rng, n, ridge=0.1):
    """Small Wishart-style SPD matrix for property tests."""
    a = rng.standard_normal((n, n + 2))
    m = a @ a.T / (n + 2) + ridge * np.eye(n)
    return 0.5 * (m + m.T)


def random_problem(rng, n, gamma0=1.0, psd_rank=None):
    sigma_x = random_spd(rng, n)
    if psd_rank is None:
        sigma = random_spd(rng, n)
    else:
        b = rng.standard_normal((n, psd_rank))
        sigma = b @ b.T
    mu = rng.normal(0.0, 1.0, n)
    return QuadFormProblem(mu, sigma_x, sigma, gamma0)


@pytest.fixture(scope="session")
def family_forms():
    """Canonical forms of the Toeplitz family xi=0.4, rho=0.8, mu=1."""
    return {n: family_form(n) for n in (5, 10, 20, 30, 40, 60, 80, 100)}


@pytest.fixture
def db():
    return db_to_linear


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record a criterion's PASS/FAIL line, then assert on it."""

    def record(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
