import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from peakdomain.cocycle import peak_profile
from peakdomain.hopf import (
    Classification,
    QuadratureDivergence,
    classify_point,
    classify_points,
    dichotomy_case,
    estimate_H_volume,
    recurrence_check,
    sum_integral_check,
    transitivity_report,
    wandering_check,
    wilson_interval,
)
from peakdomain.observables import AffineOf, indicator
from peakdomain.systems import CAT_MAP, FULL_SHIFT, NORTH_SOUTH, NoJacobianError, ShiftPoint

D, C, U = Classification.DISSIPATIVE, Classification.CONSERVATIVE_SUSPECT, Classification.UNKNOWN


@pytest.mark.parametrize("u, expected", [(0.5, D), (0.01, D), (0.99, D), (0.0, U), (1.0, U)])
def test_classify_ns(u, expected):
    assert classify_point(NORTH_SOUTH, u, 200) is expected


def test_classify_cat_conservative():
    pts = np.random.default_rng(0).random((10, 2))
    assert classify_points(CAT_MAP, pts, 100) == [C] * 10


def test_classify_shift_rejected():
    with pytest.raises(NoJacobianError):
        classify_point(FULL_SHIFT, ShiftPoint.periodic("0"), 20)


def test_classify_profile_rising_tail_unknown():
    from peakdomain.hopf import classify_profile

    spin = AffineOf(indicator(1), 2, -1)
    prof = peak_profile(FULL_SHIFT, spin, ShiftPoint("0", "", "1"), 40)
    assert classify_profile(prof) is U


@pytest.mark.parametrize("k, n, lo, hi", [
    (5, 10, 0.2366, 0.7634),
    (0, 10, 0.0, 0.2775),
    (10, 10, 0.7225, 1.0),
    (0, 0, 0.0, 1.0),
])
def test_wilson_known_values(k, n, lo, hi):
    got = wilson_interval(k, n)
    assert got == pytest.approx((lo, hi), abs=1e-4)


def test_wilson_exact_extremes():
    assert wilson_interval(0, 2000)[0] == 0.0
    assert wilson_interval(2000, 2000)[1] == 1.0


@given(st.integers(1, 5000), st.data())
def test_wilson_contains_estimate(n, data):
    k = data.draw(st.integers(0, n))
    lo, hi = wilson_interval(k, n)
    assert 0 <= lo <= k / n <= hi <= 1
    lo99, hi99 = wilson_interval(k, n, 0.99)
    assert lo99 <= lo and hi <= hi99


def test_volume_ns_dissipative():
    rep = estimate_H_volume(NORTH_SOUTH, 200, 200, seed=4)
    assert rep.counts[D] == 200
    assert rep.estimate == 1.0
    assert dichotomy_case(rep) == 1
    assert rep.transitivity_bound == 0.0


def test_volume_cat_null():
    rep = estimate_H_volume(CAT_MAP, 100, 100, seed=4)
    assert rep.counts[C] == 100
    assert rep.estimate == 0.0
    assert dichotomy_case(rep) == 2


def test_volume_excludes_unknown():
    rep = estimate_H_volume(NORTH_SOUTH, 0, 200, points=[0.0, 0.5, 1.0, 0.3])
    assert rep.counts[U] == 2
    assert rep.decided == 2
    assert rep.estimate == 1.0


def test_volume_workers_invariant():
    a = estimate_H_volume(NORTH_SOUTH, 300, 100, seed=9, workers=1)
    b = estimate_H_volume(NORTH_SOUTH, 300, 100, seed=9, workers=2)
    assert a.points == b.points and a.classes == b.classes


@pytest.mark.parametrize("W, K, passed", [
    ((Fraction(1, 3), Fraction(3, 7)), 5, True),
    ((Fraction(1, 3), Fraction(3, 5)), 5, False),
    ((0.6 / 1.3, 0.6), 25, True),
    ((0.2, 0.6), 3, False),
    ((0.5, 0.5), 4, True),
])
def test_ns_wandering(W, K, passed):
    cert = wandering_check(NORTH_SOUTH, W, K)
    assert cert.passed is passed
    if not passed:
        assert cert.overlap is not None


def test_ns_wandering_fundamental_interval_touches():
    # [g(b), b) and [b', ...) share only endpoints: half-open images are disjoint
    cert = wandering_check(NORTH_SOUTH, (Fraction(1, 3), Fraction(1, 2)), 10)
    assert cert.passed
    assert cert.min_separation == 0.0


@pytest.mark.parametrize("W, K, passed", [
    (((0.1, 0.12), (0.3, 0.31)), 1, True),
    (((0.1, 0.5), (0.1, 0.5)), 1, False),
    (((0.0, 0.1), (0.0, 0.1)), 2, False),  # closed rectangle contains the fixed point 0
])
def test_torus_wandering(W, K, passed):
    assert wandering_check(CAT_MAP, W, K).passed is passed


def test_wandering_argument_errors():
    with pytest.raises(ValueError):
        wandering_check(NORTH_SOUTH, (0.6, 0.2), 3)
    with pytest.raises(ValueError):
        wandering_check(NORTH_SOUTH, (0.2, 0.6), -1)
    with pytest.raises(TypeError):
        wandering_check(FULL_SHIFT, (0, 1), 1)


def test_sum_integral_fundamental_domain():
    W = (Fraction(1, 3), Fraction(1, 2))
    rep = sum_integral_check(NORTH_SOUTH, W, 60)
    assert rep.oracle == pytest.approx(1.0, abs=1e-15)
    assert rep.value == pytest.approx(rep.oracle, abs=1e-7)
    assert rep.value <= rep.m_total + 1e-9


def test_sum_integral_zero_horizon():
    rep = sum_integral_check(NORTH_SOUTH, (Fraction(1, 4), Fraction(1, 2)), 0)
    assert rep.value == 0.25 and rep.oracle == 0.25


def test_sum_integral_divergence():
    with pytest.raises(QuadratureDivergence):
        sum_integral_check(NORTH_SOUTH, (0.0, 0.2), 5)


def test_recurrence_everything_returns():
    rep = recurrence_check(((0.1, 0.3), (0.2, 0.4)), 64, 2000, seed=1)
    assert rep.fractions[0] == 1.0
    assert rep.returns.min() >= 10


def test_recurrence_fixed_point():
    rep = recurrence_check(((0.0, 0.1), (0.0, 0.1)), 0, 50, points=[(0.0, 0.0)])
    assert rep.returns.tolist() == [50]


def test_transitivity():
    assert transitivity_report(8, 20000, 0.2, seed=3) == 1.0
    # the fixed point is never dense
    assert transitivity_report(0, 1000, 0.2, points=[(0.0, 0.0)]) == 0.0
    assert transitivity_report(0, 0, 1.0, points=[(0.0, 0.0)]) == 1.0
    with pytest.raises(ValueError):
        transitivity_report(1, 10, 0.0)
