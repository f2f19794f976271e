import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from peakdomain.cocycle import (
    HORIZON_CAP,
    CertificationError,
    Certified,
    HorizonError,
    Uncertified,
    cocycle_eval,
    cocycle_table,
    cocycle_tables,
    fundamental_domain_test,
    peak_profile,
    peak_profiles,
    section_pi,
    verify_shift_relation,
)
from peakdomain.observables import AffineOf, Constant, LogJacobian, NSLogJacobian, TorusTrig, indicator
from peakdomain.systems import CAT_MAP, FULL_SHIFT, NORTH_SOUTH, ShiftPoint

LOGJ = NSLogJacobian()
SPIN = AffineOf(indicator(1), 2, -1)  # +1 on y0 = 1, -1 on y0 = 0
# ...111.000...: future all zeros, past all ones
HETERO = ShiftPoint("1", "", "0", 0)

interior = st.floats(0.05, 0.95)
shift_points = st.builds(
    ShiftPoint, st.text("01", min_size=1, max_size=5), st.text("01", max_size=8),
    st.text("01", min_size=1, max_size=5), st.integers(-8, 8),
)


def test_cocycle_zero():
    assert cocycle_eval(FULL_SHIFT, SPIN, HETERO, 0) == 0
    assert cocycle_eval(NORTH_SOUTH, LOGJ, 0.3, 0) == 0.0


def test_ns_cocycle_is_log_derivative():
    # phi_n = log (g^n)'(u), and (g^n)'(u) = 2^n / (2^n (1-u) + u)^2
    u = 0.3
    for n in (-7, -1, 1, 5):
        t = 2.0**n
        assert cocycle_eval(NORTH_SOUTH, LOGJ, u, n) == pytest.approx(math.log(t / (t * (1 - u) + u) ** 2), abs=1e-12)


@pytest.mark.parametrize("n, expected", [(1, -1), (3, -3), (-1, -1), (-4, -4)])
def test_shift_cocycle_exact(n, expected):
    assert cocycle_eval(FULL_SHIFT, SPIN, HETERO, n) == expected


@given(shift_points, st.integers(-30, 30), st.integers(-30, 30))
@settings(max_examples=80)
def test_cocycle_identity_exact(x, n, k):
    lhs = cocycle_eval(FULL_SHIFT, SPIN, x, n + k)
    rhs = cocycle_eval(FULL_SHIFT, SPIN, x, k) + cocycle_eval(FULL_SHIFT, SPIN, x.shift(k), n)
    assert lhs == rhs


@given(interior, st.integers(-15, 15), st.integers(-15, 15))
def test_cocycle_identity_ns(u, n, k):
    lhs = cocycle_eval(NORTH_SOUTH, LOGJ, u, n + k)
    rhs = cocycle_eval(NORTH_SOUTH, LOGJ, u, k) + cocycle_eval(NORTH_SOUTH, LOGJ, NORTH_SOUTH.iterate(u, k), n)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)


def test_horizon_cap():
    with pytest.raises(HorizonError):
        cocycle_eval(NORTH_SOUTH, LOGJ, 0.5, HORIZON_CAP + 1)


def test_table_matches_pointwise():
    tab = cocycle_table(FULL_SHIFT, SPIN, HETERO, 6)
    assert tab.exact
    assert [tab.at(n) for n in range(-6, 7)] == [cocycle_eval(FULL_SHIFT, SPIN, HETERO, n) for n in range(-6, 7)]
    assert list(tab.indices) == list(range(-6, 7))
    with pytest.raises(IndexError):
        tab.at(7)


def test_tables_fraction_values():
    phi = AffineOf(indicator(1), Fraction(1, 3), Fraction(-1, 2))
    V = cocycle_tables(FULL_SHIFT, phi, [HETERO], 3)
    assert V[0, 3] == 0 and V[0, 4] == Fraction(-1, 2)


def test_tables_need_positive_horizon():
    with pytest.raises(ValueError):
        cocycle_tables(NORTH_SOUTH, LOGJ, np.array([0.5]), 0)


def test_shift_profile_heteroclinic():
    prof = peak_profile(FULL_SHIFT, SPIN, HETERO, 40)
    assert prof.phi_max == 0
    assert prof.peak_times == (0,)
    assert prof.n_f == 0
    assert isinstance(prof.certificate, Certified)
    assert prof.certificate.decay_rate == pytest.approx(1.0)


def test_ns_profile_peak_time():
    u = NORTH_SOUTH.iterate(0.5, -3)
    prof = peak_profile(NORTH_SOUTH, LOGJ, u, 40)
    closed = [n * math.log(2) - 2 * math.log(2.0**n * (1 - u) + u) for n in range(-40, 41)]
    assert prof.certified
    assert prof.n_f == int(np.argmax(closed)) - 40
    assert prof.phi_max == pytest.approx(max(closed), abs=1e-12)
    n_f, pi = section_pi(NORTH_SOUTH, LOGJ, u, 40)
    assert pi == pytest.approx(NORTH_SOUTH.iterate(u, n_f))


@pytest.mark.parametrize("x, reason", [
    (ShiftPoint.periodic("0"), "constant"),
    (ShiftPoint.periodic("01"), "forward"),
    (ShiftPoint("0", "", "0", 0), "constant"),
    (ShiftPoint("0", "", "1", 0), "forward"),
    (ShiftPoint.periodic("1"), "constant"),
])
def test_uncertified_reasons(x, reason):
    prof = peak_profile(FULL_SHIFT, SPIN, x, 40)
    assert isinstance(prof.certificate, Uncertified)
    assert reason in prof.certificate.reason


def test_backward_tail_failure():
    # zeros on both sides: forward decays, backward climbs
    prof = peak_profile(FULL_SHIFT, SPIN, ShiftPoint("0", "1", "0"), 40)
    assert not prof.certified
    assert "backward" in prof.certificate.reason


def test_cat_map_log_jacobian_uncertified():
    rng = np.random.default_rng(3)
    for prof in peak_profiles(CAT_MAP, LogJacobian(), rng.random((20, 2)), 60):
        assert prof.certificate == Uncertified("constant cocycle tails")


def test_torus_trig_tables_batch():
    rng = np.random.default_rng(4)
    pts = rng.random((5, 2))
    V = cocycle_tables(CAT_MAP, TorusTrig(), pts, 8)
    assert V.shape == (5, 17)
    assert V[2, 9] == pytest.approx(TorusTrig()(CAT_MAP, tuple(pts[2])))


def test_tie_tolerance_collects_peaks():
    prof = peak_profile(FULL_SHIFT, SPIN, ShiftPoint("1", "01", "0", 0), 40)
    assert prof.peak_times == (0, 2)
    assert prof.n_f == 2


def test_drift_window_validation():
    with pytest.raises(ValueError):
        peak_profile(FULL_SHIFT, SPIN, HETERO, 10, drift_window=11)


def test_section_pi_requires_certification():
    with pytest.raises(CertificationError) as err:
        section_pi(FULL_SHIFT, SPIN, ShiftPoint.periodic("0"), 20)
    assert err.value.profile is not None


@given(st.integers(-15, 15))
def test_shift_relation_exact(k):
    assert verify_shift_relation(FULL_SHIFT, SPIN, ShiftPoint("1", "0110", "0", 2), k, 60) == 0


@given(st.integers(-10, 10))
def test_section_invariance_shift(k):
    x = ShiftPoint("1", "0110", "0", 2)
    _, pi_x = section_pi(FULL_SHIFT, SPIN, x, 60)
    n_f, pi_y = section_pi(FULL_SHIFT, SPIN, x.shift(k), 60)
    assert pi_x == pi_y


def test_fundamental_domain_ns():
    sample = [Fraction(k, 7) for k in range(1, 7)]
    rep = fundamental_domain_test(NORTH_SOUTH, LOGJ, sample, 40, 20)
    assert rep.certified == 6
    assert rep.passed
    for n_f, hits in zip(rep.n_f, rep.hit_times):
        assert hits == (n_f,)


def test_fundamental_domain_shift_uncertified_ignored():
    rep = fundamental_domain_test(FULL_SHIFT, SPIN, [HETERO, ShiftPoint.periodic("0")], 40, 10)
    assert rep.counts == [1, None]
    assert rep.passed


def test_constant_observable_uncertified():
    prof = peak_profile(FULL_SHIFT, Constant(-1), HETERO, 20)
    assert prof.certificate == Uncertified("constant cocycle tails")
