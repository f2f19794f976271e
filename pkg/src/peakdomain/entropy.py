"""Bowen entropy on the 2-shift by exact cylinder counting.

A Bowen ball of depth k at resolution 2^-m is the cylinder fixing the
coordinates [-m, k-1+m], so covers and separated sets reduce to counting
the distinct words a set realizes on that window.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .observables import as_exact
from .parallel import chunked_map, sample_rng
from .systems import FULL_SHIFT, ShiftPoint

__all__ = [
    "MAX_WINDOW",
    "BRUTE_FORCE_MAX",
    "WindowCapError",
    "DegenerateSetError",
    "FullShiftSet",
    "FrequencyBand",
    "SplicedFamily",
    "ExplicitList",
    "Union",
    "EntropyEstimate",
    "UnionReport",
    "AsymmetryReport",
    "bowen_ball_window",
    "cover_window",
    "binary_entropy",
    "cover_count",
    "separated_count",
    "brute_force_count",
    "h_estimate",
    "union_max_check",
    "heteroclinic_asymmetry",
]

MAX_WINDOW = 28
BRUTE_FORCE_MAX = 22
BRUTE_CHUNK = 1 << 16
FIT_ROUNDING = 1e-12


class WindowCapError(ValueError):
    pass


class DegenerateSetError(ValueError):
    pass


def bowen_ball_window(k: int, m: int, direction: str = "forward") -> tuple[int, int]:
    """Coordinates fixed by the depth-k Bowen ball of radius 2^-m.

    Forward iterates sigma^i, 0 <= i < k, see [-m, k-1+m]; the inverse shift
    sees the mirror window [-(k-1)-m, m].
    """
    if k < 1 or m < 0:
        raise ValueError("need k >= 1 and m >= 0")
    if direction == "forward":
        return -m, k - 1 + m
    if direction == "backward":
        return -(k - 1) - m, m
    raise ValueError("direction is 'forward' or 'backward'")


def binary_entropy(p: float) -> float:
    """H(p) in nats."""
    if p in (0, 1):
        return 0.0
    return -p * math.log(p) - (1 - p) * math.log(1 - p)


def _band(p, tol, length: int) -> list[int]:
    """Counts j in [0, length] with |j - p*length| <= tol, decided exactly."""
    p, tol = Fraction(as_exact(p)), Fraction(as_exact(tol))
    centre = p * length
    lo = max(0, math.ceil(centre - tol))
    hi = min(length, math.floor(centre + tol))
    return list(range(lo, hi + 1))


def _popcount(codes: np.ndarray) -> np.ndarray:
    return np.bitwise_count(codes.astype(np.uint64)).astype(np.int64)


def _sample_from_band(rng, length: int, allowed: Sequence[int]) -> str:
    weights = np.array([math.comb(length, j) for j in allowed], dtype=float)
    j = int(rng.choice(allowed, p=weights / weights.sum()))
    bits = np.zeros(length, dtype=np.uint8)
    bits[rng.choice(length, size=j, replace=False)] = 1
    return "".join(map(str, bits))


# ---------------------------------------------------------------------------
# Word-set oracles: subsets E of the shift, seen through a coordinate window.

class WordSet:
    """Protocol: ``count`` (closed form), ``mask`` (direct membership of window words)."""

    def popcounts(self, length: int):
        """Allowed numbers of 1s if membership depends only on that, else None."""
        return None

    def count(self, lo: int, hi: int) -> int:
        raise NotImplementedError

    def mask(self, codes: np.ndarray, lo: int, hi: int) -> np.ndarray:
        raise NotImplementedError

    def contains(self, word: str, lo: int) -> bool:
        hi = lo + len(word) - 1
        return bool(self.mask(np.array([int(word, 2)], dtype=np.int64), lo, hi)[0])


@dataclass(frozen=True)
class FullShiftSet(WordSet):
    def popcounts(self, length):
        return list(range(length + 1))

    def count(self, lo, hi):
        return 1 << (hi - lo + 1)

    def mask(self, codes, lo, hi):
        return np.ones(len(codes), dtype=bool)


@dataclass(frozen=True)
class FrequencyBand(WordSet):
    """Words w with |freq_1(w) - p| <= delta."""

    p: object
    delta: object

    def __post_init__(self):
        object.__setattr__(self, "p", as_exact(self.p))
        object.__setattr__(self, "delta", as_exact(self.delta))
        if not 0 <= self.p <= 1 or self.delta < 0:
            raise ValueError("need 0 <= p <= 1 and delta >= 0")

    def popcounts(self, length):
        return _band(self.p, Fraction(self.delta) * length, length)

    def count(self, lo, hi):
        L = hi - lo + 1
        return sum(math.comb(L, j) for j in self.popcounts(L))

    def mask(self, codes, lo, hi):
        return np.isin(_popcount(codes), self.popcounts(hi - lo + 1))

    def sample_word(self, rng, lo, hi):
        L = hi - lo + 1
        return _sample_from_band(rng, L, self.popcounts(L))


@dataclass(frozen=True)
class SplicedFamily(WordSet):
    """Past coordinates (< junction) typical for past_p, the rest for future_p.

    Typicality on a side of length l means |#1 - p*l| <= slack.
    """

    past_p: object
    future_p: object
    junction: int = 0
    slack: object = 1

    def __post_init__(self):
        for name in ("past_p", "future_p", "slack"):
            object.__setattr__(self, name, as_exact(getattr(self, name)))

    def _sides(self, lo, hi):
        past = max(0, min(hi, self.junction - 1) - lo + 1)
        return past, (hi - lo + 1) - past

    def count(self, lo, hi):
        lp, lf = self._sides(lo, hi)
        cp = sum(math.comb(lp, j) for j in _band(self.past_p, self.slack, lp))
        cf = sum(math.comb(lf, j) for j in _band(self.future_p, self.slack, lf))
        return cp * cf

    def mask(self, codes, lo, hi):
        lp, lf = self._sides(lo, hi)
        future = codes & ((1 << lf) - 1)
        past = codes >> lf
        ok_p = np.isin(_popcount(past), _band(self.past_p, self.slack, lp))
        ok_f = np.isin(_popcount(future), _band(self.future_p, self.slack, lf))
        return ok_p & ok_f

    def sample_word(self, rng, lo, hi):
        lp, lf = self._sides(lo, hi)
        return (_sample_from_band(rng, lp, _band(self.past_p, self.slack, lp))
                + _sample_from_band(rng, lf, _band(self.future_p, self.slack, lf)))


@dataclass(frozen=True)
class ExplicitList(WordSet):
    """Finitely many points; strings are read as periodic points."""

    points: tuple

    def __post_init__(self):
        pts = tuple(ShiftPoint.periodic(p) if isinstance(p, str) else p for p in self.points)
        object.__setattr__(self, "points", pts)

    def words(self, lo, hi) -> set[str]:
        return {x.window(lo, hi) for x in self.points}

    def count(self, lo, hi):
        return len(self.words(lo, hi))

    def mask(self, codes, lo, hi):
        return np.isin(codes, [int(w, 2) for w in self.words(lo, hi)])


@dataclass(frozen=True)
class Union(WordSet):
    parts: tuple

    def popcounts(self, length):
        sets = [p.popcounts(length) for p in self.parts]
        if any(s is None for s in sets):
            return None
        return sorted(set().union(*sets))

    def count(self, lo, hi):
        L = hi - lo + 1
        allowed = self.popcounts(L)
        if allowed is not None:
            return sum(math.comb(L, j) for j in allowed)
        structured = [p for p in self.parts if not isinstance(p, ExplicitList)]
        explicit = [p for p in self.parts if isinstance(p, ExplicitList)]
        if len(structured) <= 1:
            base = structured[0].count(lo, hi) if structured else 0
            words = set().union(*(e.words(lo, hi) for e in explicit))
            if structured:
                codes = np.array([int(w, 2) for w in words], dtype=np.int64)
                words = {w for w, inside in zip(words, structured[0].mask(codes, lo, hi)) if not inside}
            return base + len(words)
        if L <= BRUTE_FORCE_MAX:
            return brute_force_count(self, lo, hi)
        raise WindowCapError(f"no closed form for this union at window length {L}")

    def mask(self, codes, lo, hi):
        out = np.zeros(len(codes), dtype=bool)
        for p in self.parts:
            out |= p.mask(codes, lo, hi)
        return out


# ---------------------------------------------------------------------------
# Counting.

def cover_window(n: int, m: int, direction: str = "forward") -> tuple[int, int]:
    """Window of depth n: iterates 0..n, so length n + 2m + 1."""
    return bowen_ball_window(n + 1, m, direction)


def _window(n, m, direction, max_window):
    lo, hi = cover_window(n, m, direction)
    if hi - lo + 1 > max_window:
        raise WindowCapError(f"window length {hi - lo + 1} exceeds cap {max_window}")
    return lo, hi


def cover_count(E: WordSet, n: int, m: int, direction: str = "forward", max_window: int = MAX_WINDOW) -> int:
    """Minimal number of depth-n Bowen balls of radius 2^-m covering E."""
    lo, hi = _window(n, m, direction, max_window)
    return E.count(lo, hi)


def _brute_chunk(start, stop, E, lo, hi):
    codes = np.arange(start, stop, dtype=np.int64)
    return [int(np.count_nonzero(E.mask(codes, lo, hi)))]


def brute_force_count(E: WordSet, lo: int, hi: int, workers: int | None = None) -> int:
    """Words on [lo, hi] accepted by E.mask, by scanning all 2^L words."""
    L = hi - lo + 1
    if L > BRUTE_FORCE_MAX:
        raise WindowCapError(f"brute force limited to window length {BRUTE_FORCE_MAX}")
    return sum(chunked_map(_brute_chunk, 1 << L, (E, lo, hi), workers, size=BRUTE_CHUNK))


def _bowen_distance(x: ShiftPoint, y: ShiftPoint, n: int, direction: str) -> float:
    step = 1 if direction == "forward" else -1
    return max(FULL_SHIFT.distance(x.shift(step * i), y.shift(step * i)) for i in range(n + 1))


def separated_count(E: WordSet, n: int, m: int, direction: str = "forward",
                    max_window: int = MAX_WINDOW, workers: int | None = None) -> int:
    """Size of a maximal (n, 2^-m)-separated subset of E.

    Explicit sets are scanned greedily with the Bowen metric d_n; other sets
    realize every window word, so the answer is the number of words, counted
    by brute force up to ``BRUTE_FORCE_MAX`` and in closed form beyond.
    """
    lo, hi = _window(n, m, direction, max_window)
    if isinstance(E, ExplicitList):
        eps = 2.0 ** -m
        kept: list[ShiftPoint] = []
        for x in E.points:
            if all(_bowen_distance(x, y, n, direction) >= eps for y in kept):
                kept.append(x)
        return len(kept)
    if hi - lo + 1 <= BRUTE_FORCE_MAX:
        return brute_force_count(E, lo, hi, workers)
    return E.count(lo, hi)


def _lsq_fit(xs, ys) -> tuple[float, float]:
    """Least-squares slope and its standard error."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    xc = x - x.mean()
    slope = float(xc @ (y - y.mean()) / (xc @ xc))
    resid = y - y.mean() - slope * xc
    se = math.sqrt(float(resid @ resid) / max(1, len(x) - 2) / float(xc @ xc))
    return slope, se


def _crossing(c0: int, n0: int, c1: int, n1: int, iters: int = 80) -> tuple[float, float]:
    """Bracket the t at which c0 e^{-t n0} = c1 e^{-t n1} (n1 > n0) by bisection."""
    lo, hi = -1.0, 2.0
    g = lambda t: math.log(c1) - t * n1 - (math.log(c0) - t * n0)  # noqa: E731
    while g(lo) < 0:
        lo -= 1.0
    while g(hi) > 0:
        hi += 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    return lo, hi


@dataclass
class EntropyEstimate:
    m: int
    ns: tuple
    counts: tuple
    slope: float
    t_lo: float
    t_hi: float
    direction: str = "forward"

    @property
    def log_counts(self) -> tuple:
        return tuple(math.log(c) for c in self.counts)

    def rows(self) -> list[tuple]:
        """CSV rows: m, n, count, log_count, slope, t_lo, t_hi."""
        return [(self.m, n, c, lc, self.slope, self.t_lo, self.t_hi)
                for n, c, lc in zip(self.ns, self.counts, self.log_counts)]


def h_estimate(E: WordSet, m: int, n_range: Sequence[int], direction: str = "forward",
               max_window: int = MAX_WINDOW) -> EntropyEstimate:
    """Exponential growth rate of cover counts in the depth n.

    The slope is the least-squares fit of log N(n) against n.  Between
    consecutive depths the surrogate N(n) e^{-tn} switches from growing to
    shrinking at one t, located by bisection.  The least-squares slope is a
    positive average of those switching points, so [t_lo, t_hi] spans them,
    padded by the fit's standard error and a rounding margin.
    """
    ns = sorted(set(n_range))
    if len(ns) < 4:
        raise ValueError("need at least 4 depths")
    counts = [cover_count(E, n, m, direction, max_window) for n in ns]
    if min(counts) == 0:
        raise DegenerateSetError("E realizes no words at some depth")
    slope, se = _lsq_fit(ns, [math.log(c) for c in counts])
    brackets = [_crossing(c0, n0, c1, n1) for n0, c0, n1, c1 in zip(ns, counts, ns[1:], counts[1:])]
    pad = se + FIT_ROUNDING  # fit error
    return EntropyEstimate(m, tuple(ns), tuple(counts), slope,
                           min(b[0] for b in brackets) - pad, max(b[1] for b in brackets) + pad, direction)


@dataclass
class UnionReport:
    parts: tuple
    union: EntropyEstimate
    subadditive: bool  # max part count <= union count <= sum of part counts, every n
    gap: float  # |slope(union) - max slope(parts)|
    tol: float

    @property
    def passed(self) -> bool:
        return self.subadditive and self.gap <= self.tol


def union_max_check(E1: WordSet, E2: WordSet, m: int, n_range: Sequence[int], tol: float = 0.03) -> UnionReport:
    e1, e2 = h_estimate(E1, m, n_range), h_estimate(E2, m, n_range)
    eu = h_estimate(Union((E1, E2)), m, n_range)
    sub = all(max(a, b) <= u <= a + b for a, b, u in zip(e1.counts, e2.counts, eu.counts))
    return UnionReport((e1, e2), eu, sub, abs(eu.slope - max(e1.slope, e2.slope)), tol)


@dataclass
class AsymmetryReport:
    forward: EntropyEstimate
    backward: EntropyEstimate
    forward_target: float
    backward_target: float
    witnesses_ok: bool = field(default=True)

    @property
    def forward_slope(self) -> float:
        return self.forward.slope

    @property
    def backward_slope(self) -> float:
        return self.backward.slope


def heteroclinic_asymmetry(p, q, m: int = 1, n_range: Sequence[int] = range(8, 25), seed: int = 0,
                           slack=1, n_witnesses: int = 16) -> AsymmetryReport:
    """Forward and inverse-shift growth rates of SplicedFamily(q past, p future).

    Forward windows lie mostly in the future, so the forward slope tracks H(p);
    inverse-shift windows lie mostly in the past and track H(q).  The seed
    draws sample words from each window for a membership sanity check.
    """
    E = SplicedFamily(q, p, 0, slack)
    fwd = h_estimate(E, m, n_range, "forward")
    bwd = h_estimate(E, m, n_range, "backward")
    ok = True
    for i, n in enumerate(sorted(set(n_range))):
        rng = sample_rng(seed, i)
        for direction in ("forward", "backward"):
            lo, hi = cover_window(n, m, direction)
            for _ in range(n_witnesses):
                ok &= E.contains(E.sample_word(rng, lo, hi), lo)
    return AsymmetryReport(fwd, bwd, binary_entropy(float(as_exact(p))), binary_entropy(float(as_exact(q))), ok)
