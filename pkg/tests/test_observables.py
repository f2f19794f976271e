from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from peakdomain.observables import (
    AffineOf,
    Constant,
    LogJacobian,
    NSLogJacobian,
    ShiftWindow,
    TorusTrig,
    as_exact,
    cylinder_dictionary,
    cylinder_indicator,
    indicator,
    series,
)
from peakdomain.systems import CAT_MAP, FULL_SHIFT, NORTH_SOUTH, ShiftPoint

words = st.text("01", min_size=1, max_size=6)
points = st.builds(ShiftPoint, words, st.text("01", max_size=10), words, st.integers(-10, 10))


@pytest.mark.parametrize("v, expected", [
    (3, 3),
    (True, 1),
    (Fraction(4, 2), 2),
    ("1/3", Fraction(1, 3)),
    (0.1, Fraction(1, 10)),
])
def test_as_exact(v, expected):
    got = as_exact(v)
    assert got == expected
    assert type(got) is type(expected)


def test_as_exact_rejects_objects():
    with pytest.raises(TypeError):
        as_exact(object())


def test_indicator_reads_coordinate():
    x = ShiftPoint.from_window("10", 0)
    assert indicator(1)(FULL_SHIFT, x) == 1
    assert indicator(1, 1)(FULL_SHIFT, x) == 0
    assert indicator(0, -1)(FULL_SHIFT, x) == 1


def test_cylinder_indicator():
    phi = cylinder_indicator("011", -1)
    assert phi.radius == 1
    assert phi(FULL_SHIFT, ShiftPoint.from_window("011", -1)) == 1
    assert phi(FULL_SHIFT, ShiftPoint.from_window("111", -1)) == 0


def test_cylinder_dictionary_partitions():
    dic = cylinder_dictionary(2)
    assert len(dic) == 2 + 8 + 32
    x = ShiftPoint("01", "11010", "001", 2)
    for r, size in ((0, 2), (1, 8), (2, 32)):
        start = sum(1 << (2 * j + 1) for j in range(r))
        assert sum(phi(FULL_SHIFT, x) for phi in dic[start:start + size]) == 1


def test_shift_window_validation():
    with pytest.raises(ValueError):
        ShiftWindow(-1, [0])
    with pytest.raises(ValueError):
        ShiftWindow(0, [0, 1, 2])
    with pytest.raises(ValueError):
        ShiftWindow(1, {"01": 1})


def test_shift_window_mapping_and_exactness():
    phi = ShiftWindow(0, {"1": Fraction(1, 2)})
    assert phi.exact and phi.denominator == 2
    assert not ShiftWindow(0, [0.0, 1.0]).exact
    assert phi.affine(2, -1).values == (-1, 0)


@given(points, st.integers(-20, 20), st.integers(1, 20))
def test_along_matches_pointwise(x, start, length):
    phi = ShiftWindow(1, [Fraction(k, 3) - 1 for k in range(8)])
    vals = phi.along(x, start, start + length)
    assert list(vals) == [phi(FULL_SHIFT, x.shift(j)) for j in range(start, start + length)]
    assert phi.sum_along(x, start, start + length) == sum(vals)


@given(points)
def test_widen_preserves_values(x):
    phi = cylinder_indicator("10", 0)
    assert phi.widen(3)(FULL_SHIFT, x) == phi(FULL_SHIFT, x)


def test_widen_cannot_shrink():
    with pytest.raises(ValueError):
        cylinder_indicator("101", -1).widen(0)


def test_affine_folds_to_table():
    obs = AffineOf(AffineOf(indicator(1), 2, 1), Fraction(1, 2), 0)
    folded = obs.folded()
    assert isinstance(folded, ShiftWindow)
    assert folded.values == (Fraction(1, 2), Fraction(3, 2))
    assert AffineOf(Constant(2), 3, 1).folded() == Constant(7)


def test_affine_exactness():
    assert AffineOf(indicator(1), 2, 1).exact_on(FULL_SHIFT)
    assert not AffineOf(indicator(1), 0.5, 1).exact_on(FULL_SHIFT)


def test_ns_log_jacobian_observable():
    assert NSLogJacobian()(NORTH_SOUTH, 1.0) == pytest.approx(np.log(2))
    assert not NSLogJacobian().supports(CAT_MAP)
    assert LogJacobian().supports(CAT_MAP)
    assert not LogJacobian().supports(FULL_SHIFT)


def test_torus_trig():
    phi = TorusTrig(((1.0, 1, 0, 0.0), (0.5, 0, 0, 0.0)))
    assert phi(CAT_MAP, (0.0, 0.3)) == pytest.approx(1.5)
    assert phi(CAT_MAP, (0.5, 0.3)) == pytest.approx(-0.5)
    assert phi.mean() == 0.5
    assert phi(CAT_MAP, np.zeros((4, 2))).shape == (4,)


def test_series_shapes_and_consistency():
    pts = np.array([0.2, 0.5, 0.9])
    s = series(NORTH_SOUTH, NSLogJacobian(), pts, -3, 4)
    assert s.shape == (3, 7)
    for i, u in enumerate(pts):
        expected = [NORTH_SOUTH.log_jacobian(NORTH_SOUTH.iterate(u, j)) for j in range(-3, 4)]
        assert np.allclose(s[i], expected, rtol=0, atol=1e-12)


def test_series_independent_of_range():
    a = series(NORTH_SOUTH, NSLogJacobian(), 0.4, -5, 5)
    b = series(NORTH_SOUTH, NSLogJacobian(), 0.4, 2, 4)
    assert np.array_equal(a[7:9], b)


def test_series_constant_on_shift_is_exact():
    vals = series(FULL_SHIFT, Constant(2), ShiftPoint.periodic("0"), 0, 3)
    assert vals.dtype == np.int64 and list(vals) == [2, 2, 2]


def test_series_rejects_unsupported():
    with pytest.raises(TypeError):
        series(FULL_SHIFT, NSLogJacobian(), ShiftPoint.periodic("0"), 0, 3)
    with pytest.raises(ValueError):
        series(NORTH_SOUTH, NSLogJacobian(), 0.5, 3, 1)
