from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from peakdomain.birkhoff import (
    Bernoulli,
    BernoulliSource,
    CertificationError,
    DiracPeriodic,
    IndistinguishableError,
    Lebesgue,
    PeriodicSource,
    birkhoff_average,
    birkhoff_averages,
    ergodic_obstruction_demo,
    expected_value,
    heteroclinic_peak_check,
    separating_observable,
    splice,
)
from peakdomain.cocycle import cocycle_eval
from peakdomain.observables import (
    AffineOf,
    Constant,
    NSLogJacobian,
    TorusTrig,
    cylinder_dictionary,
    cylinder_indicator,
    indicator,
)
from peakdomain.systems import FULL_SHIFT, NORTH_SOUTH, ShiftPoint

probs = st.fractions(Fraction(1, 100), Fraction(99, 100))


@pytest.mark.parametrize("p", [0, 1, -0.2, 1.5])
def test_bernoulli_range(p):
    with pytest.raises(ValueError):
        Bernoulli(p)


def test_bernoulli_exact_parameter():
    assert Bernoulli(0.1).p == Fraction(1, 10)
    assert Bernoulli("1/2").entropy() == pytest.approx(0.6931471805599453)


def test_dirac_validation():
    with pytest.raises(ValueError):
        DiracPeriodic("")
    with pytest.raises(ValueError):
        DiracPeriodic("012")


@pytest.mark.parametrize("mu, phi, expected", [
    (Bernoulli("1/4"), indicator(1), Fraction(1, 4)),
    (Bernoulli("1/4"), cylinder_indicator("11", 0), Fraction(1, 16)),
    (Bernoulli("1/4"), cylinder_indicator("010", -1), Fraction(9, 64)),
    (DiracPeriodic("001"), indicator(1), Fraction(1, 3)),
    (DiracPeriodic("01"), cylinder_indicator("11", 0), 0),
    (Bernoulli("1/2"), AffineOf(indicator(1), 2, -1), 0),
    (Bernoulli("1/2"), Constant(3), 3),
    (Lebesgue(), TorusTrig(((2.0, 0, 0, 0.0), (1.0, 1, 1, 0.0))), 2.0),
])
def test_expected_value(mu, phi, expected):
    assert expected_value(mu, phi) == expected


def test_expected_value_unsupported():
    with pytest.raises(TypeError):
        expected_value(Lebesgue(), NSLogJacobian())


@given(probs, st.integers(0, 2))
def test_dictionary_integrates_to_one(p, r):
    start = sum(1 << (2 * j + 1) for j in range(r))
    dic = cylinder_dictionary(2)[start:start + (1 << (2 * r + 1))]
    assert sum(expected_value(Bernoulli(p), phi) for phi in dic) == 1


def test_separating_observable_example():
    phi = separating_observable(Bernoulli("1/2"), Bernoulli("1/10"), [indicator(1)])
    assert (phi.a, phi.b) == (-5, Fraction(3, 2))
    assert expected_value(Bernoulli("1/2"), phi) == -1
    assert expected_value(Bernoulli("1/10"), phi) == 1


@given(probs, probs)
def test_separating_observable_normalised(p, q):
    mu, nu = Bernoulli(p), Bernoulli(q)
    if p == q:
        with pytest.raises(IndistinguishableError):
            separating_observable(mu, nu)
        return
    phi = separating_observable(mu, nu)
    assert expected_value(mu, phi) == -1
    assert expected_value(nu, phi) == 1


def test_separating_observable_periodic_measures():
    phi = separating_observable(DiracPeriodic("01"), DiracPeriodic("0011"))
    assert expected_value(DiracPeriodic("01"), phi) == -1
    assert expected_value(DiracPeriodic("0011"), phi) == 1


def test_birkhoff_average_exact():
    x = ShiftPoint.periodic("001")
    assert birkhoff_average(FULL_SHIFT, indicator(1), x, 9) == Fraction(1, 3)
    assert birkhoff_average(FULL_SHIFT, indicator(1), x, 9, "backward") == Fraction(-1, 3)
    assert birkhoff_averages(x, [indicator(1), cylinder_indicator("00", 0)], 9) == [Fraction(1, 3), Fraction(1, 3)]


def test_birkhoff_average_float_system():
    assert birkhoff_average(NORTH_SOUTH, NSLogJacobian(), 0.0, 5) == pytest.approx(-0.6931471805599453)


@pytest.mark.parametrize("n, direction", [(0, "forward"), (5, "sideways")])
def test_birkhoff_average_arguments(n, direction):
    with pytest.raises(ValueError):
        birkhoff_average(FULL_SHIFT, indicator(1), ShiftPoint.periodic("0"), n, direction)


def test_bernoulli_source_deterministic():
    src = BernoulliSource("1/2", 3)
    assert src.block(50, 1) == BernoulliSource("1/2", 3).block(50, 1)
    assert src.block(50, 1) != src.block(50, 2)
    assert src.block(80, 1)[:50] == src.block(50, 1)


def test_periodic_splice():
    x = splice(PeriodicSource("0000000001"), PeriodicSource("01"), 0)
    assert x.window(-3, 3) == "0010101"
    with pytest.raises(ValueError):
        splice(BernoulliSource("1/2", 0), PeriodicSource("01"), 0)
    with pytest.raises(ValueError):
        splice(PeriodicSource("0"), PeriodicSource("1"), -1)


def test_bernoulli_splice_blocks():
    past, fut = BernoulliSource("1/10", 5), BernoulliSource("1/2", 5)
    x = splice(past, fut, 32)
    assert x.window(-32, -1) == past.block(32, 1)
    assert x.window(0, 31) == fut.block(32, 2)


def test_heteroclinic_check_periodic():
    mu, nu = DiracPeriodic("01"), DiracPeriodic("0000000001")
    x = splice(PeriodicSource("0000000001"), PeriodicSource("01"), 0)
    chk = heteroclinic_peak_check(x, mu, nu, 60)
    assert chk.profile.certified
    assert chk.junction < 20
    for n in range(chk.junction + 1, 61):
        assert cocycle_eval(FULL_SHIFT, chk.observable, x, n) < 0
        assert cocycle_eval(FULL_SHIFT, chk.observable, x, -n) < 0


def test_heteroclinic_check_reports_failure():
    # both sides from the same measure: no decay, so no certificate
    x = splice(PeriodicSource("01"), PeriodicSource("01"), 0)
    with pytest.raises(CertificationError, match="not certified"):
        heteroclinic_peak_check(x, Bernoulli("1/2"), Bernoulli("1/10"), 40)


def test_obstruction_demo_periodic_all_typical():
    # mu-typical in both directions, so the splice property fails for every sample
    frac = ergodic_obstruction_demo(DiracPeriodic("01"), 3, n=100, tol=0.02, dictionary=[indicator(1)])
    assert frac == 1.0


def test_obstruction_demo_bernoulli_typical():
    a = ergodic_obstruction_demo(Bernoulli("1/2"), 8, n=2000, tol=0.05, seed=1)
    b = ergodic_obstruction_demo(Bernoulli("1/2"), 8, n=2000, tol=0.05, seed=1)
    assert a == b == 1.0
