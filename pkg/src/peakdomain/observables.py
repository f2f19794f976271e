"""Continuous observables phi: X -> R and their evaluation along orbits.

Shift observables are finite-window tables and evaluate exactly when the
table holds ints or Fractions; everything else is float64.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from itertools import product
from typing import Callable, Mapping, Sequence

import numpy as np

from .systems import CatMap, FullShift, NorthSouth, ShiftPoint, System

__all__ = [
    "Observable",
    "NSLogJacobian",
    "Constant",
    "ShiftWindow",
    "TorusTrig",
    "AffineOf",
    "LogJacobian",
    "indicator",
    "cylinder_indicator",
    "cylinder_dictionary",
    "as_exact",
    "series",
]


def as_exact(v):
    """Exact rational for an int/Fraction/str; floats are read by their repr."""
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else v
    if isinstance(v, (float, np.floating, str)):
        f = Fraction(repr(float(v)) if not isinstance(v, str) else v)
        return int(f) if f.denominator == 1 else f
    raise TypeError(f"cannot convert {v!r} to an exact rational")


class Observable:
    """phi in C(X, R)."""

    def supports(self, sys: System) -> bool:
        raise NotImplementedError

    def exact_on(self, sys: System) -> bool:
        return False

    def __call__(self, sys: System, x):
        """phi(x); x may be an array of NS/torus points."""
        raise NotImplementedError

    def raw(self, sys: System, x):
        """phi(x) without domain validation."""
        return self(sys, x)


@dataclass(frozen=True)
class NSLogJacobian(Observable):
    def supports(self, sys):
        return isinstance(sys, NorthSouth)

    def __call__(self, sys, x):
        return sys.log_jacobian(x)

    def raw(self, sys, x):
        return sys.raw_log_jacobian(x)


@dataclass(frozen=True)
class LogJacobian(Observable):
    """log J_f of whichever smooth system it is evaluated on."""

    def supports(self, sys):
        return sys.has_jacobian

    def __call__(self, sys, x):
        return sys.log_jacobian(x)

    def raw(self, sys, x):
        return sys.raw_log_jacobian(x)


@dataclass(frozen=True)
class Constant(Observable):
    c: float | int | Fraction = 0

    def supports(self, sys):
        return True

    def exact_on(self, sys):
        return sys.exact and not isinstance(self.c, float)

    def __call__(self, sys, x):
        if isinstance(x, np.ndarray):
            shape = x.shape[:-1] if isinstance(sys, CatMap) else x.shape
            return np.full(shape, float(self.c))
        return self.c


@dataclass(frozen=True)
class TorusTrig(Observable):
    """Sum of amp * cos(2 pi (kx x + ky y) + phase) over (amp, kx, ky, phase) terms."""

    terms: tuple = ((1.0, 1, 0, 0.0),)

    def supports(self, sys):
        return isinstance(sys, CatMap)

    def mean(self) -> float:
        return sum(a * math.cos(ph) for a, kx, ky, ph in self.terms if kx == 0 and ky == 0)

    def __call__(self, sys, x):
        arr = np.asarray(x, dtype=float)
        tot = np.zeros(arr.shape[:-1])
        for a, kx, ky, ph in self.terms:
            tot = tot + a * np.cos(2 * np.pi * (kx * arr[..., 0] + ky * arr[..., 1]) + ph)
        return tot if isinstance(x, np.ndarray) else float(tot)


class ShiftWindow(Observable):
    """phi(y) = table[y_{-r} ... y_r], the word read with y_{-r} as most significant bit."""

    def __init__(self, radius: int, table: Mapping[str, object] | Sequence):
        if radius < 0:
            raise ValueError("radius must be >= 0")
        self.radius = radius
        size = 1 << (2 * radius + 1)
        if isinstance(table, Mapping):
            vals = [0] * size
            for word, v in table.items():
                if len(word) != 2 * radius + 1 or word.strip("01"):
                    raise ValueError(f"bad window word {word!r} for radius {radius}")
                vals[int(word, 2)] = v
        else:
            vals = list(table)
            if len(vals) != size:
                raise ValueError(f"table needs {size} entries, got {len(vals)}")
        self.exact = all(isinstance(v, (int, np.integer, Fraction)) for v in vals)
        if self.exact:
            vals = [as_exact(v) for v in vals]
            self.denominator = reduce(math.lcm, (Fraction(v).denominator for v in vals), 1)
            self._numerators = np.array([int(Fraction(v) * self.denominator) for v in vals], dtype=np.int64)
        else:
            self.denominator = None
            self._numerators = None
        self.values = tuple(vals)
        self._float_table = np.array([float(v) for v in vals])

    @classmethod
    def from_function(cls, radius: int, fn: Callable[[tuple], object]) -> ShiftWindow:
        """Table built from fn(word), word = (y_{-r}, ..., y_r) as ints."""
        words = product((0, 1), repeat=2 * radius + 1)
        return cls(radius, [fn(w) for w in words])

    def supports(self, sys):
        return isinstance(sys, FullShift)

    def exact_on(self, sys):
        return self.exact

    def __eq__(self, other):
        return isinstance(other, ShiftWindow) and (self.radius, self.values) == (other.radius, other.values)

    def __hash__(self):
        return hash((self.radius, self.values))

    def __repr__(self):
        return f"ShiftWindow(radius={self.radius}, values={self.values})"

    def codes(self, bits: np.ndarray) -> np.ndarray:
        """Window codes for every full (2r+1)-window of ``bits``."""
        w = 2 * self.radius + 1
        n = len(bits) - w + 1
        out = np.zeros(max(n, 0), dtype=np.int64)
        for t in range(w):
            out = (out << 1) | bits[t:t + n]
        return out

    def along(self, x: ShiftPoint, start: int, stop: int):
        """phi(sigma^j x) for j in [start, stop): int64/object array if exact else float."""
        r = self.radius
        c = self.codes(x.bits(start - r, stop - 1 + r))
        if not self.exact:
            return self._float_table[c]
        nums = self._numerators[c]
        if self.denominator == 1:
            return nums
        return np.array([Fraction(int(v), self.denominator) for v in nums], dtype=object)

    def sum_along(self, x: ShiftPoint, start: int, stop: int):
        """Sum of phi(sigma^j x) over j in [start, stop), exact where possible."""
        r = self.radius
        c = self.codes(x.bits(start - r, stop - 1 + r))
        if not self.exact:
            return float(np.sum(self._float_table[c]))
        total = int(np.sum(self._numerators[c]))
        return as_exact(Fraction(total, self.denominator))

    def __call__(self, sys, x: ShiftPoint):
        return self.values[int(x.window(-self.radius, self.radius), 2)]

    def affine(self, a, b) -> ShiftWindow:
        return ShiftWindow(self.radius, [a * v + b for v in self.values])

    def widen(self, radius: int) -> ShiftWindow:
        """Same function on a larger window."""
        if radius < self.radius:
            raise ValueError("cannot shrink a window")
        d = radius - self.radius
        inner = 2 * self.radius + 1
        vals = []
        for code in range(1 << (2 * radius + 1)):
            vals.append(self.values[(code >> d) & ((1 << inner) - 1)])
        return ShiftWindow(radius, vals)


@dataclass(frozen=True)
class AffineOf(Observable):
    """a * other + b."""

    other: Observable
    a: object = 1
    b: object = 0

    def supports(self, sys):
        return self.other.supports(sys)

    def exact_on(self, sys):
        return self.other.exact_on(sys) and not isinstance(self.a, float) and not isinstance(self.b, float)

    def folded(self) -> Observable:
        """Collapse into a single table (shift) or constant when possible."""
        inner = self.other.folded() if isinstance(self.other, AffineOf) else self.other
        if isinstance(inner, ShiftWindow):
            return inner.affine(self.a, self.b)
        if isinstance(inner, Constant):
            return Constant(self.a * inner.c + self.b)
        return self

    def __call__(self, sys, x):
        return self.a * self.other(sys, x) + self.b

    def raw(self, sys, x):
        return self.a * self.other.raw(sys, x) + self.b


def indicator(symbol: int = 1, coordinate: int = 0) -> ShiftWindow:
    """1 if y_coordinate == symbol else 0."""
    r = abs(coordinate)
    return ShiftWindow.from_function(r, lambda w: int(w[r + coordinate] == symbol))


def cylinder_indicator(word: str, start: int = 0) -> ShiftWindow:
    """1 if y_start ... y_{start+len-1} == word, on the smallest symmetric window."""
    end = start + len(word) - 1
    r = max(abs(start), abs(end))

    def fn(w):
        return int("".join(map(str, w[r + start:r + end + 1])) == word)

    return ShiftWindow.from_function(r, fn)


def cylinder_dictionary(max_radius: int = 2) -> list[ShiftWindow]:
    """Indicators of every centred cylinder [y_{-r..r} = w], r <= max_radius, in (r, w) order."""
    out = []
    for r in range(max_radius + 1):
        for code in range(1 << (2 * r + 1)):
            word = format(code, f"0{2 * r + 1}b")
            out.append(cylinder_indicator(word, -r))
    return out


def _normalize(obs: Observable) -> Observable:
    return obs.folded() if isinstance(obs, AffineOf) else obs


def series(sys: System, obs: Observable, x, start: int, stop: int):
    """phi(f^j x) for j in [start, stop).

    Iterates are taken from x itself (forward for j >= 0, inverse for j < 0),
    so the value at a given j does not depend on the requested range.
    For NS/torus, x may be a batch (leading axis = points); the result then
    has shape (points, stop - start).
    """
    if not obs.supports(sys):
        raise TypeError(f"{obs!r} is not defined on {sys.kind}")
    obs = _normalize(obs)
    if stop < start:
        raise ValueError("empty range")
    if isinstance(sys, FullShift):
        if isinstance(obs, ShiftWindow):
            return obs.along(x, start, stop)
        if isinstance(obs, Constant):
            dtype = float if isinstance(obs.c, float) else object
            arr = np.empty(stop - start, dtype=dtype)
            arr[:] = obs.c
            return arr.astype(np.int64) if isinstance(obs.c, int) else arr
        return np.array([obs(sys, x.shift(j)) for j in range(start, stop)])
    return _smooth_series(sys, obs, x, start, stop)


def _smooth_series(sys, obs, x, start, stop):
    batch = isinstance(x, np.ndarray) and (x.ndim == (2 if isinstance(sys, CatMap) else 1))
    pts = np.atleast_1d(np.asarray(x, dtype=float))
    if isinstance(sys, CatMap) and pts.ndim == 1:
        pts = pts[None, :]
    sys.check(pts)
    m = pts.shape[0]
    out = np.empty((m, stop - start))
    fwd_lo, fwd_hi = max(start, 0), max(stop, 0)
    if fwd_hi > fwd_lo:
        y = pts.copy()
        for j in range(fwd_hi):
            if j >= fwd_lo:
                out[:, j - start] = obs.raw(sys, y)
            if j + 1 < fwd_hi:
                y = sys.raw_apply(y)
    bwd_lo, bwd_hi = min(start, 0), min(stop, 0)
    if bwd_hi > bwd_lo:
        y = pts.copy()
        for j in range(-1, bwd_lo - 1, -1):
            y = sys.raw_inverse(y)
            if j < bwd_hi:
                out[:, j - start] = obs.raw(sys, y)
    return out if batch else out[0]
