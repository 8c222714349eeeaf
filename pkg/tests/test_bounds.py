import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from qftail.baselines import imhof_cdf
from qftail.bounds import (
    bound_report,
    bre_constant,
    log_marcum_lower_bound,
    marcum_lower_bound,
    zero_mean_lower_bound,
)
from qftail.canonical import CanonicalForm
from qftail.errors import NonPositiveThresholdError, NonZeroMeanError


def test_single_term_is_exact():
    # d = 1: the inclusion is an equality
    cf = CanonicalForm.from_arrays([1.0], [0.5])
    assert marcum_lower_bound(cf, 1.0) == pytest.approx(stats.ncx2.cdf(1.0, 1, 0.25), rel=1e-12)
    assert marcum_lower_bound(cf, 1.0) == pytest.approx(imhof_cdf(cf, 1.0), rel=1e-10)


def test_two_term_central_example():
    cf = CanonicalForm.from_arrays([1.0, 1.0])
    bound = marcum_lower_bound(cf, 1.0)
    assert bound == pytest.approx(math.erf(0.5) ** 2, rel=1e-13)
    assert bound < -math.expm1(-0.5)


def test_two_term_noncentral_below_truth():
    cf = CanonicalForm.from_arrays([1.0, 0.5], [1.0, 2.0])
    assert marcum_lower_bound(cf, 1.0) == pytest.approx(0.05362551894408381, rel=1e-10)
    assert marcum_lower_bound(cf, 1.0) < imhof_cdf(cf, 1.0)


@pytest.mark.parametrize("d", [1, 2, 5, 30])
@pytest.mark.parametrize("g", [1e-6, 0.1, 3.0])
def test_zero_mean_forms_agree(d, g):
    cf = CanonicalForm.from_arrays(np.linspace(2.0, 0.5, d))
    a = zero_mean_lower_bound(cf, g)
    b = marcum_lower_bound(cf, g)
    assert a == pytest.approx(b, rel=1e-10)


def test_zero_mean_requires_central():
    with pytest.raises(NonZeroMeanError):
        zero_mean_lower_bound(CanonicalForm.from_arrays([1.0], [0.1]), 1.0)


def test_threshold_validation():
    with pytest.raises(NonPositiveThresholdError):
        marcum_lower_bound(CanonicalForm.from_arrays([1.0]), 0.0)


def test_log_bound_no_underflow(family_forms):
    lb = log_marcum_lower_bound(family_forms[100], 1e-5)
    assert math.isfinite(lb) and lb < -700


@pytest.mark.parametrize("n", [5, 10, 20])
def test_monotone_in_threshold(family_forms, n):
    gs = np.logspace(-3, 1.5, 25)
    vals = [log_marcum_lower_bound(family_forms[n], g) for g in gs]
    assert np.all(np.diff(vals) > 0)


@settings(max_examples=40, deadline=None)
@given(
    lam=st.lists(st.floats(0.1, 5.0), min_size=1, max_size=4),
    shift=st.floats(-2.0, 2.0),
    g=st.floats(0.05, 20.0),
)
def test_never_exceeds_exact(lam, shift, g):
    alphas = shift * np.linspace(1.0, 0.3, len(lam))
    cf = CanonicalForm.from_arrays(lam, alphas)
    exact = imhof_cdf(cf, g)
    assert marcum_lower_bound(cf, g) <= exact + 1e-10


class TestConstant:
    def test_noncentral(self):
        c, note = bre_constant(CanonicalForm.from_arrays([1.0], [1.0]))
        assert c == pytest.approx(math.pi * math.e, rel=1e-14)
        assert "upper bound" in note

    def test_noncentral_scales_with_offset(self):
        c, _ = bre_constant(CanonicalForm.from_arrays([2.0, 1.0], [2.0, 0.5]))
        assert c == pytest.approx((math.pi * math.e) ** 2 / (4.0 * 0.25), rel=1e-13)

    def test_central(self):
        c, _ = bre_constant(CanonicalForm.from_arrays([1.0, 1.0]))
        assert c == pytest.approx((math.pi * math.e / 2) ** 2, rel=1e-14)
        assert c == pytest.approx(18.2318, abs=1e-4)

    def test_mixed_unavailable(self):
        c, note = bre_constant(CanonicalForm.from_arrays([1.0, 1.0], [1.0, 0.0]))
        assert c is None and "unavailable" in note

    def test_overflow_is_inf(self):
        c, _ = bre_constant(CanonicalForm.from_arrays(np.ones(400), np.full(400, 0.01)))
        assert c == math.inf

    def test_report(self, family_forms):
        rep = bound_report(family_forms[10], 1.0)
        assert 0 < rep.lower_bound < 1
        assert rep.bre_constant > 1
        assert "10 here" in rep.note
        assert set(rep.as_dict()) == {"lower_bound", "bre_constant", "note"}
