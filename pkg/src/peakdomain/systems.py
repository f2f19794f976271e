"""Reference dynamical systems: North-South interval map, cat map, full 2-shift.

Every system exposes the same small surface (``apply``, ``inverse``,
``iterate``, ``orbit``, ``distance`` and, where defined, ``log_jacobian``).
NS and torus maps accept scalars or numpy arrays; the shift is exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import NamedTuple

import numpy as np

__all__ = [
    "DomainError",
    "NoJacobianError",
    "TorusPoint",
    "ShiftPoint",
    "System",
    "NorthSouth",
    "CatMap",
    "FullShift",
    "NORTH_SOUTH",
    "CAT_MAP",
    "FULL_SHIFT",
    "get_system",
    "ns_apply",
    "ns_inverse",
    "ns_log_jacobian",
    "cat_apply",
    "cat_inverse",
    "shift_apply",
    "distance",
    "orbit",
]


class DomainError(ValueError):
    """Point outside the phase space of the system."""


class NoJacobianError(TypeError):
    """The system has no log-Jacobian (e.g. the symbolic shift)."""


# ---------------------------------------------------------------------------
# North-South map on [0, 1]: S = 0 attracting, N = 1 repelling.

def _check_unit(u):
    if isinstance(u, np.ndarray):
        if np.any((u < 0) | (u > 1)) or np.any(np.isnan(u)):
            raise DomainError("North-South coordinate outside [0, 1]")
    elif not 0 <= u <= 1:
        raise DomainError(f"North-South coordinate {u!r} outside [0, 1]")


def ns_apply(u):
    """g(u) = u / (2 - u). Exact for Fraction input."""
    _check_unit(u)
    return u / (2 - u)


def ns_inverse(v):
    """g^{-1}(v) = 2v / (1 + v)."""
    _check_unit(v)
    return 2 * v / (1 + v)


def ns_log_jacobian(u):
    """log g'(u) = log(2 / (2 - u)^2), w.r.t. Lebesgue measure."""
    _check_unit(u)
    return _ns_logj(u)


def _ns_g(u):
    return u / (2 - u)


def _ns_ginv(v):
    return 2 * v / (1 + v)


def _ns_logj(u):
    if isinstance(u, np.ndarray):
        return np.log(2.0) - 2.0 * np.log(2.0 - u)
    return math.log(2.0) - 2.0 * math.log(2.0 - float(u))


def ns_iterate_closed_form(u, n: int):
    """g^n(u) = u / (2^n (1 - u) + u) for n >= 0 (exact for Fractions)."""
    if n >= 0:
        return u / (2**n * (1 - u) + u)
    m = -n
    # g^{-m}(v) solves v = w / (2^m (1 - w) + w)
    return 2**m * u / (1 + (2**m - 1) * u)


# ---------------------------------------------------------------------------
# Cat map on the 2-torus.

class TorusPoint(NamedTuple):
    x: float
    y: float


def _wrap(a):
    # a % 1.0 rounds tiny negatives up to 1.0; fold those back to 0
    r = np.mod(a, 1.0)
    if isinstance(r, np.ndarray):
        r[r >= 1.0] = 0.0
        return r
    r = float(r)
    return 0.0 if r >= 1.0 else r


def cat_apply(p):
    """(x, y) -> ((2x + y) mod 1, (x + y) mod 1)."""
    if isinstance(p, np.ndarray):
        x, y = p[..., 0], p[..., 1]
        return np.stack([_wrap(2.0 * x + y), _wrap(x + y)], axis=-1)
    x, y = p
    return TorusPoint(_wrap(2.0 * x + y), _wrap(x + y))


def cat_inverse(p):
    """Inverse matrix [[1, -1], [-1, 2]], reduced mod 1."""
    if isinstance(p, np.ndarray):
        x, y = p[..., 0], p[..., 1]
        return np.stack([_wrap(x - y), _wrap(2.0 * y - x)], axis=-1)
    x, y = p
    return TorusPoint(_wrap(x - y), _wrap(2.0 * y - x))


def _torus_distance(p, q) -> float:
    dx = abs(p[0] - q[0]) % 1.0
    dy = abs(p[1] - q[1]) % 1.0
    dx = min(dx, 1.0 - dx)
    dy = min(dy, 1.0 - dy)
    return math.hypot(dx, dy)


# ---------------------------------------------------------------------------
# Points of the full 2-shift.

def _primitive_root(w: str) -> str:
    n = len(w)
    for d in range(1, n + 1):
        if n % d == 0 and w[:d] * (n // d) == w:
            return w[:d]
    return w


def _cyclic_slice(w: str, start: int, count: int) -> str:
    """Characters w[(start + i) % len(w)] for i in range(count)."""
    if count <= 0:
        return ""
    s = start % len(w)
    reps = (s + count) // len(w) + 1
    return (w * reps)[s:s + count]


@dataclass(frozen=True, eq=False)
class ShiftPoint:
    """Bi-infinite binary sequence, eventually periodic in both directions.

    Coordinate ``n`` lives at index ``n + offset`` of ``center``; indices past
    the end of ``center`` continue with ``right`` repeated, indices below zero
    read ``left`` cyclically so that index -1 is ``left[-1]``.
    """

    left: str
    center: str
    right: str
    offset: int = 0

    def __post_init__(self):
        if not self.left or not self.right:
            raise ValueError("periodic words must be nonempty")
        for w in (self.left, self.center, self.right):
            if w.strip("01"):
                raise ValueError(f"non-binary word {w!r}")

    @classmethod
    def periodic(cls, word: str, offset: int = 0) -> ShiftPoint:
        """The periodic point ...www.www... with w[0] at coordinate -offset."""
        return cls(word, "", word, offset)

    @classmethod
    def from_window(cls, word: str, start: int, left: str = "0", right: str = "0") -> ShiftPoint:
        """Point carrying ``word`` on coordinates [start, start+len(word))."""
        return cls(left, word, right, -start)

    def __getitem__(self, n: int) -> int:
        return int(self.coordinate(n))

    def coordinate(self, n: int) -> str:
        j = n + self.offset
        lc = len(self.center)
        if 0 <= j < lc:
            return self.center[j]
        if j >= lc:
            return self.right[(j - lc) % len(self.right)]
        return self.left[j % len(self.left)]

    def window(self, lo: int, hi: int) -> str:
        """Symbols on coordinates lo..hi inclusive, as a '0'/'1' string."""
        if hi < lo:
            return ""
        jl, jh = lo + self.offset, hi + self.offset
        lc = len(self.center)
        parts = []
        if jl < 0:
            parts.append(_cyclic_slice(self.left, jl, min(jh, -1) - jl + 1))
        a, b = max(jl, 0), min(jh + 1, lc)
        if a < b:
            parts.append(self.center[a:b])
        if jh >= lc:
            start = max(jl, lc)
            parts.append(_cyclic_slice(self.right, start - lc, jh - start + 1))
        return "".join(parts)

    def bits(self, lo: int, hi: int) -> np.ndarray:
        """Window lo..hi as a uint8 array."""
        s = self.window(lo, hi).encode("ascii")
        return np.frombuffer(s, dtype=np.uint8) - ord("0")

    def shift(self, k: int = 1) -> ShiftPoint:
        """sigma^k: (sigma^k x)_i = x_{i+k}."""
        return replace(self, offset=self.offset + k)

    def _key(self):
        lw, rw = _primitive_root(self.left), _primitive_root(self.right)
        s = -self.offset
        e = s + len(self.center)
        x = self.coordinate
        if len(lw) == len(rw):
            p = len(rw)
            if all(x(n) == x(n + p) for n in range(s - p, e)):
                return ("periodic", self.window(0, p - 1))
        pl, pr = len(lw), len(rw)
        r = e
        while x(r - 1) == x(r - 1 + pr):
            r -= 1
        left_end = s
        while left_end < r and x(left_end) == x(left_end - pl):
            left_end += 1
        return (
            "eventually-periodic",
            self.window(left_end - pl, left_end - 1),
            self.window(left_end, r - 1),
            self.window(r, r + pr - 1),
            left_end,
        )

    def __eq__(self, other):
        if not isinstance(other, ShiftPoint):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return f"ShiftPoint(...{self.window(-6, -1)}.{self.window(0, 5)}...; {self.left!r}|{self.center!r}|{self.right!r}@{self.offset})"


def _shift_distance(x: ShiftPoint, y: ShiftPoint) -> float:
    if x == y:
        return 0.0
    n = 0
    while True:
        if x.coordinate(n) != y.coordinate(n) or x.coordinate(-n) != y.coordinate(-n):
            return 2.0 ** (-n)
        n += 1


def shift_apply(x: ShiftPoint, k: int = 1) -> ShiftPoint:
    return x.shift(k)


# ---------------------------------------------------------------------------
# Uniform system handles.

class System:
    """Homeomorphism f: X -> X with a metric."""

    kind: str = ""
    exact: bool = False
    has_jacobian: bool = False

    def apply(self, x):
        raise NotImplementedError

    def inverse(self, x):
        raise NotImplementedError

    def iterate(self, x, k: int):
        """f^k x, by repeated application of f or f^{-1} starting from x."""
        step = self.apply if k >= 0 else self.inverse
        for _ in range(abs(k)):
            x = step(x)
        return x

    def orbit(self, x, n_from: int, n_to: int) -> list:
        """[f^{n_from} x, ..., f^{n_to} x]."""
        if n_from > n_to:
            raise ValueError("n_from must not exceed n_to")
        # both directions start from x: re-entering from f^{n_from} x would
        # amplify rounding along the expanding direction
        fwd = [x]
        for _ in range(max(n_to, 0)):
            fwd.append(self.apply(fwd[-1]))
        bwd = [x]
        for _ in range(max(-n_from, 0)):
            bwd.append(self.inverse(bwd[-1]))
        full = bwd[:0:-1] + fwd  # f^{-B} x ... f^{-1} x, x, f x ...
        lo = min(n_from, 0)
        return full[n_from - lo:n_to - lo + 1]

    def distance(self, x, y) -> float:
        raise NotImplementedError

    def log_jacobian(self, x):
        raise NoJacobianError(f"{self.kind} has no log-Jacobian")

    # Unchecked kernels for inner loops; callers validate the start point once.
    def raw_apply(self, x):
        return self.apply(x)

    def raw_inverse(self, x):
        return self.inverse(x)

    def raw_log_jacobian(self, x):
        return self.log_jacobian(x)

    def check(self, x):
        """Raise DomainError unless x (or every point of a batch) lies in X."""

    def contains(self, x) -> bool:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}()"


class NorthSouth(System):
    kind = "north-south"
    has_jacobian = True

    apply = staticmethod(ns_apply)
    inverse = staticmethod(ns_inverse)
    log_jacobian = staticmethod(ns_log_jacobian)
    raw_apply = staticmethod(_ns_g)
    raw_inverse = staticmethod(_ns_ginv)
    raw_log_jacobian = staticmethod(_ns_logj)
    check = staticmethod(_check_unit)

    def contains(self, x) -> bool:
        return isinstance(x, (float, int, Fraction, np.floating)) and 0 <= x <= 1

    def distance(self, x, y) -> float:
        if not (self.contains(x) and self.contains(y)):
            raise DomainError("points are not North-South coordinates")
        return abs(float(x) - float(y))


class CatMap(System):
    """Linear Anosov automorphism [[2, 1], [1, 1]] of the torus; log J = 0."""

    kind = "cat-map"
    has_jacobian = True
    matrix = ((2, 1), (1, 1))

    apply = staticmethod(cat_apply)
    inverse = staticmethod(cat_inverse)

    def log_jacobian(self, x):
        if isinstance(x, np.ndarray):
            return np.zeros(x.shape[:-1])
        return 0.0

    def contains(self, x) -> bool:
        if isinstance(x, (ShiftPoint, str)):
            return False
        try:
            a = np.asarray(x, dtype=float)
        except (TypeError, ValueError):
            return False
        return a.shape == (2,) and bool(np.all((a >= 0) & (a < 1)))

    def check(self, x):
        a = np.asarray(x, dtype=float)
        if a.shape[-1:] != (2,) or np.any((a < 0) | (a >= 1)) or np.any(np.isnan(a)):
            raise DomainError("torus coordinates must lie in [0, 1)")

    def distance(self, x, y) -> float:
        if not (self.contains(x) and self.contains(y)):
            raise DomainError("points are not torus points")
        return _torus_distance(x, y)


class FullShift(System):
    """Two-sided full shift on {0, 1}^Z with d(x, y) = 2^{-min{|n| : x_n != y_n}}."""

    kind = "shift"
    exact = True

    def apply(self, x: ShiftPoint) -> ShiftPoint:
        return x.shift(1)

    def inverse(self, x: ShiftPoint) -> ShiftPoint:
        return x.shift(-1)

    def iterate(self, x: ShiftPoint, k: int) -> ShiftPoint:
        return x.shift(k)

    def contains(self, x) -> bool:
        return isinstance(x, ShiftPoint)

    def check(self, x):
        if not isinstance(x, ShiftPoint):
            raise DomainError("not a shift point")

    def distance(self, x, y) -> float:
        if not (self.contains(x) and self.contains(y)):
            raise DomainError("points are not shift points")
        return _shift_distance(x, y)


NORTH_SOUTH = NorthSouth()
CAT_MAP = CatMap()
FULL_SHIFT = FullShift()

_SYSTEMS = {s.kind: s for s in (NORTH_SOUTH, CAT_MAP, FULL_SHIFT)}


def get_system(name: str) -> System:
    try:
        return _SYSTEMS[name]
    except KeyError:
        raise ValueError(f"unknown system {name!r}; choose from {sorted(_SYSTEMS)}") from None


def distance(sys: System, x, y) -> float:
    return sys.distance(x, y)


def orbit(sys: System, x, n_from: int, n_to: int) -> list:
    return sys.orbit(x, n_from, n_to)
