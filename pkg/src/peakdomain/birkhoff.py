"""Birkhoff averages, separating observables and heteroclinic points on the 2-shift."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .cocycle import CertificationError, PeakProfile, cocycle_eval, cocycle_table, peak_profile
from .observables import (
    AffineOf,
    Constant,
    Observable,
    ShiftWindow,
    TorusTrig,
    as_exact,
    cylinder_dictionary,
    indicator,
)
from .parallel import sample_rng
from .systems import FULL_SHIFT, ShiftPoint, System

__all__ = [
    "Bernoulli",
    "DiracPeriodic",
    "Lebesgue",
    "BernoulliSource",
    "PeriodicSource",
    "IndistinguishableError",
    "HeteroclinicCheck",
    "birkhoff_average",
    "birkhoff_averages",
    "expected_value",
    "separating_observable",
    "splice",
    "heteroclinic_peak_check",
    "ergodic_obstruction_demo",
]


# ---------------------------------------------------------------------------
# Invariant measures.

@dataclass(frozen=True)
class Bernoulli:
    """i.i.d. product measure on {0,1}^Z with P(y_0 = 1) = p."""

    p: object

    def __post_init__(self):
        p = as_exact(self.p)
        if not 0 < p < 1:
            raise ValueError("Bernoulli parameter must lie in (0, 1)")
        object.__setattr__(self, "p", p)

    def entropy(self) -> float:
        p = float(self.p)
        return -p * math.log(p) - (1 - p) * math.log(1 - p)


@dataclass(frozen=True)
class DiracPeriodic:
    """Equidistribution on the orbit of the periodic point ...www.www..."""

    word: str

    def __post_init__(self):
        if not self.word or self.word.strip("01"):
            raise ValueError("DiracPeriodic needs a nonempty binary word")


@dataclass(frozen=True)
class Lebesgue:
    """Lebesgue measure on the torus."""


def expected_value(mu, phi: Observable):
    """Exact integral of a window observable (Fraction for shift measures)."""
    if isinstance(phi, AffineOf):
        return phi.a * expected_value(mu, phi.other) + phi.b
    if isinstance(phi, Constant):
        return phi.c
    if isinstance(mu, Lebesgue) and isinstance(phi, TorusTrig):
        return phi.mean()
    if isinstance(phi, ShiftWindow):
        if isinstance(mu, Bernoulli):
            p, q = Fraction(mu.p), 1 - Fraction(mu.p)
            width = 2 * phi.radius + 1
            total = Fraction(0)
            for code, v in enumerate(phi.values):
                if v == 0:
                    continue
                ones = bin(code).count("1")
                total += Fraction(v) * p**ones * q ** (width - ones)
            return as_exact(total) if phi.exact else float(total)
        if isinstance(mu, DiracPeriodic):
            x = ShiftPoint.periodic(mu.word)
            s = phi.sum_along(x, 0, len(mu.word))
            return as_exact(Fraction(s) / len(mu.word)) if phi.exact else s / len(mu.word)
    raise TypeError(f"unsupported pair ({type(mu).__name__}, {type(phi).__name__})")


class IndistinguishableError(ValueError):
    pass


def separating_observable(mu, nu, dictionary: Sequence[Observable] | None = None) -> AffineOf:
    """a*phi0 + b with integral -1 under mu and +1 under nu.

    phi0 is the first dictionary element maximizing |E_mu phi0 - E_nu phi0|.
    """
    if dictionary is None:
        dictionary = cylinder_dictionary(2)
    best, best_gap, best_e = None, 0, None
    for phi0 in dictionary:
        em, en = expected_value(mu, phi0), expected_value(nu, phi0)
        gap = abs(em - en)
        if gap > best_gap:
            best, best_gap, best_e = phi0, gap, (em, en)
    if best is None:
        raise IndistinguishableError("measures agree on every dictionary observable")
    em, en = best_e
    a = 2 / (Fraction(en) - Fraction(em)) if not isinstance(em, float) else 2.0 / (en - em)
    b = -1 - a * em
    if isinstance(a, Fraction):
        a, b = as_exact(a), as_exact(b)
    return AffineOf(best, a, b)


# ---------------------------------------------------------------------------
# Birkhoff averages.

def birkhoff_average(sys: System, phi: Observable, x, n: int, direction: str = "forward"):
    """(1/n) phi_n(x) forward, (1/n) phi_{-n}(x) backward."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if direction not in ("forward", "backward"):
        raise ValueError("direction is 'forward' or 'backward'")
    total = cocycle_eval(sys, phi, x, n if direction == "forward" else -n)
    if isinstance(total, (int, Fraction)):
        return as_exact(Fraction(total, n))
    return total / n


def birkhoff_averages(x: ShiftPoint, observables: Sequence[ShiftWindow], n: int,
                      direction: str = "forward") -> list:
    """Averages of many window observables sharing one symbol extraction."""
    if n < 1:
        raise ValueError("n must be >= 1")
    start, stop, sign = (0, n, 1) if direction == "forward" else (-n, 0, -1)
    by_radius: dict[int, np.ndarray] = {}
    out = []
    for phi in observables:
        phi = phi.folded() if isinstance(phi, AffineOf) else phi
        r = phi.radius
        if r not in by_radius:
            by_radius[r] = phi.codes(x.bits(start - r, stop - 1 + r))
        c = by_radius[r]
        if phi.exact:
            tot = Fraction(int(phi._numerators[c].sum()), phi.denominator)
            out.append(as_exact(sign * tot / n))
        else:
            out.append(sign * float(phi._float_table[c].sum()) / n)
    return out


# ---------------------------------------------------------------------------
# Heteroclinic points.

@dataclass(frozen=True)
class BernoulliSource:
    p: object
    seed: int

    def block(self, length: int, stream: int) -> str:
        rng = sample_rng(self.seed, stream)
        bits = rng.random(length) < float(as_exact(self.p))
        return "".join("1" if b else "0" for b in bits)


@dataclass(frozen=True)
class PeriodicSource:
    word: str


def splice(past, future, half_length: int) -> ShiftPoint:
    """Heteroclinic candidate: past-source symbols on [-L, -1], future-source on [0, L-1].

    Beyond +-L the sampled blocks repeat periodically; periodic sources simply
    continue their word (x_{-1} = word[-1], x_0 = word[0]).
    """
    L = half_length
    if L < 0:
        raise ValueError("half_length must be >= 0")

    def side(src, stream):
        if isinstance(src, PeriodicSource):
            return src.word
        if L == 0:
            raise ValueError("a sampled source needs half_length >= 1")
        return src.block(L, stream)

    left = side(past, 1)
    right = side(future, 2)
    return ShiftPoint(left, "", right, 0)


@dataclass
class HeteroclinicCheck:
    profile: PeakProfile
    observable: AffineOf
    junction: int  # smallest J with phi_n < 0 for J < |n| <= N

    @property
    def n_f(self) -> int:
        return self.profile.n_f


def heteroclinic_peak_check(x: ShiftPoint, mu, nu, N: int, dictionary=None, **kw) -> HeteroclinicCheck:
    """Separate mu (future) from nu (past) and certify finite peaks at x."""
    if dictionary is None:
        dictionary = [indicator(1)]
    phi = separating_observable(mu, nu, dictionary)
    prof = peak_profile(FULL_SHIFT, phi, x, N, **kw)
    table = cocycle_table(FULL_SHIFT, phi, x, N)
    neg = [table.at(m) < 0 and table.at(-m) < 0 for m in range(1, N + 1)]
    J = N
    while J > 0 and neg[J - 1]:
        J -= 1
    if not prof.certified:
        raise CertificationError(
            f"heteroclinic point not certified: {prof.certificate.reason}; "
            f"tail slopes {prof.forward_slope:.3g} / {prof.backward_slope:.3g}, junction {J}",
            prof,
        )
    return HeteroclinicCheck(prof, phi, J)


def _sample_point(mu, n: int, seed: int, index: int) -> ShiftPoint:
    if isinstance(mu, DiracPeriodic):
        return ShiftPoint.periodic(mu.word)
    rng = sample_rng(seed, index)
    bits = rng.random(2 * n) < float(mu.p)
    # coordinates [-n, n-1]; symbols beyond are never read by averages of length n
    block = np.where(bits, ord("1"), ord("0")).astype(np.uint8).tobytes().decode("ascii")
    return ShiftPoint.from_window(block, -n)


def obstruction_flags(mu, n: int, tol: float, dictionary, seed: int, indices) -> list[bool]:
    """Per-sample flag: forward and backward averages within tol of every mean."""
    means = [float(expected_value(mu, phi)) for phi in dictionary]
    pad = max(phi.radius for phi in dictionary)
    flags = []
    for i in indices:
        x = _sample_point(mu, n + pad, seed, i)
        fwd = birkhoff_averages(x, dictionary, n, "forward")
        bwd = birkhoff_averages(x, dictionary, n, "backward")
        ok = all(abs(float(f) - m) <= tol and abs(-float(b) - m) <= tol
                 for f, b, m in zip(fwd, bwd, means))
        flags.append(ok)
    return flags


def ergodic_obstruction_demo(mu, n_samples: int, n: int = 100_000, tol: float = 0.02,
                             dictionary=None, seed: int = 0) -> float:
    """Fraction of mu-samples that are Birkhoff-typical in both time directions.

    Backward averages phi_{-n}/n converge to -E_mu[phi] under the cocycle sign
    convention, so they are compared against the negated mean.
    """
    if dictionary is None:
        dictionary = cylinder_dictionary(2)
    flags = obstruction_flags(mu, n, tol, dictionary, seed, range(n_samples))
    return sum(flags) / n_samples
