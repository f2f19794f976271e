"""Hopf decomposition estimates driven by the Jacobian cocycle.

Dissipative points are those where log J has certified finite peaks; the
conservative side is only ever suspected from flat-tail evidence.
"""
from __future__ import annotations

import enum
import math
import statistics
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .cocycle import DEFAULT_MIN_DECAY, PeakProfile, cocycle_tables, peak_profile, peak_profiles
from .observables import LogJacobian
from .parallel import chunked_map, sample_rng
from .systems import CatMap, NoJacobianError, NorthSouth, System, _wrap, get_system, ns_iterate_closed_form

__all__ = [
    "Classification",
    "HopfReport",
    "WanderingCertificate",
    "IntegralReport",
    "RecurrenceReport",
    "QuadratureDivergence",
    "classify_profile",
    "classify_point",
    "classify_points",
    "wilson_interval",
    "estimate_H_volume",
    "dichotomy_case",
    "wandering_check",
    "sum_integral_check",
    "recurrence_check",
    "transitivity_report",
]

LOG_J = LogJacobian()


class Classification(str, enum.Enum):
    DISSIPATIVE = "Dissipative"
    CONSERVATIVE_SUSPECT = "ConservativeSuspect"
    UNKNOWN = "Unknown"


def classify_profile(prof: PeakProfile, min_decay: float = DEFAULT_MIN_DECAY) -> Classification:
    """Dissipative if certified; Unknown if a tail rises or the peak escapes the horizon."""
    if prof.certified:
        return Classification.DISSIPATIVE
    fs, bs = prof.forward_slope, prof.backward_slope
    if fs >= min_decay or bs >= min_decay:
        # sup over Z infinite or not attained
        return Classification.UNKNOWN
    if abs(fs) < min_decay or abs(bs) < min_decay:
        return Classification.CONSERVATIVE_SUSPECT
    return Classification.UNKNOWN


def _require_jacobian(sys: System):
    if not sys.has_jacobian:
        raise NoJacobianError(f"{sys.kind} has no log-Jacobian")


def classify_point(sys: System, x, N: int, **kw) -> Classification:
    _require_jacobian(sys)
    min_decay = kw.get("min_decay", DEFAULT_MIN_DECAY)
    return classify_profile(peak_profile(sys, LOG_J, x, N, **kw), min_decay)


def classify_points(sys: System, points, N: int, **kw) -> list[Classification]:
    _require_jacobian(sys)
    min_decay = kw.get("min_decay", DEFAULT_MIN_DECAY)
    return [classify_profile(p, min_decay) for p in peak_profiles(sys, LOG_J, points, N, **kw)]


# ---------------------------------------------------------------------------
# Monte Carlo volume of H(f, log J).

def wilson_interval(successes: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion; (0, 1) when n = 0."""
    if n == 0:
        return 0.0, 1.0
    z = statistics.NormalDist().inv_cdf(0.5 + confidence / 2)
    p = successes / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == n else min(1.0, centre + half)
    return lo, hi


@dataclass
class HopfReport:
    system: str
    n_samples: int
    horizon: int
    counts: dict
    estimate: float
    ci: tuple
    transitivity_bound: float
    points: list = field(default_factory=list, repr=False)
    classes: list = field(default_factory=list, repr=False)

    @property
    def decided(self) -> int:
        """Samples entering the point estimate (Unknown excluded)."""
        return self.n_samples - self.counts[Classification.UNKNOWN]


def uniform_point(sys: System, rng: np.random.Generator):
    if isinstance(sys, NorthSouth):
        return rng.random()
    if isinstance(sys, CatMap):
        return rng.random(2)
    raise NoJacobianError(f"no uniform sampler for {sys.kind}")


def _sample_chunk(lo, hi, kind, seed, N):
    sys = get_system(kind)
    pts = np.array([uniform_point(sys, sample_rng(seed, i)) for i in range(lo, hi)])
    classes = classify_points(sys, pts, N)
    return [(p.tolist() if isinstance(p, np.ndarray) else float(p), c.value) for p, c in zip(pts, classes)]


def estimate_H_volume(sys: System, n_samples: int, N: int, seed: int = 0, workers: int | None = None,
                      points=None) -> HopfReport:
    """Fraction of Lebesgue-uniform samples classified Dissipative.

    Unknown samples are excluded from the estimate and its Wilson 95% interval
    but kept in ``counts``.  ``points`` overrides the sampler.
    """
    _require_jacobian(sys)
    if points is not None:
        pts = np.asarray(points, dtype=float)
        classes = classify_points(sys, pts, N)
        rows = [(p.tolist() if isinstance(p, np.ndarray) else float(p), c.value) for p, c in zip(pts, classes)]
    else:
        if n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        rows = chunked_map(_sample_chunk, n_samples, (sys.kind, seed, N), workers)
    classes = [Classification(c) for _, c in rows]
    counts = {c: classes.count(c) for c in Classification}
    decided = len(classes) - counts[Classification.UNKNOWN]
    d = counts[Classification.DISSIPATIVE]
    est = d / decided if decided else float("nan")
    ci = wilson_interval(d, decided)
    return HopfReport(
        system=sys.kind,
        n_samples=len(rows),
        horizon=N,
        counts=counts,
        estimate=est,
        ci=ci,
        transitivity_bound=1.0 - est,
        points=[p for p, _ in rows],
        classes=classes,
    )


def dichotomy_case(report: HopfReport, tol: float = 0.02) -> int | None:
    """1 for the completely dissipative outcome, 2 for null dissipative volume, else None."""
    if report.estimate >= 1.0 - tol and report.ci[0] >= 1.0 - tol:
        return 1
    if report.estimate <= tol:
        return 2
    return None


# ---------------------------------------------------------------------------
# Wandering sets.

@dataclass
class WanderingCertificate:
    region: tuple
    horizon: int
    min_separation: float
    passed: bool
    overlap: tuple | None = None  # (i, j) with f^i W meeting f^j W


def _exact_endpoint(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    # decimal inputs like 0.6/1.3 are recovered as the rational they denote
    return Fraction(float(v)).limit_denominator(10**12)


def _ns_wandering(W, K):
    a, b = (_exact_endpoint(v) for v in W)
    if not 0 <= a <= b <= 1:
        raise ValueError("W must satisfy 0 <= a <= b <= 1")
    if a == b:
        return WanderingCertificate((a, b), K, math.inf, True)
    images = sorted(
        (ns_iterate_closed_form(a, k), ns_iterate_closed_form(b, k), k) for k in range(-K, K + 1)
    )
    gaps = []
    overlap = None
    for (l1, r1, k1), (l2, r2, k2) in zip(images, images[1:]):
        gap = l2 - r1  # half-open images [l, r) are disjoint iff gap >= 0
        gaps.append(gap)
        if gap < 0 and overlap is None:
            overlap = (min(k1, k2), max(k1, k2))
    sep = float(min(gaps)) if gaps else math.inf
    return WanderingCertificate((a, b), K, sep, overlap is None, overlap)


def _hull(points):
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts

    def cross(o, p, q):
        return (p[0] - o[0]) * (q[1] - o[1]) - (p[1] - o[1]) * (q[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def _polygon_has_lattice_point(hull) -> bool:
    xs = [p[0] for p in hull]
    for zx in range(math.ceil(min(xs)), math.floor(max(xs)) + 1):
        ys = []
        for (x1, y1), (x2, y2) in zip(hull, hull[1:] + hull[:1]):
            if x1 == x2:
                if x1 == zx:
                    ys += [y1, y2]
            elif min(x1, x2) <= zx <= max(x1, x2):
                ys.append(y1 + (y2 - y1) * (zx - x1) / (x2 - x1))
        if ys and math.floor(max(ys)) >= min(ys):
            return True
    return False


def _torus_wandering(W, K):
    (x0, x1), (y0, y1) = ((_exact_endpoint(u), _exact_endpoint(v)) for u, v in W)
    if not (0 <= x0 <= x1 <= 1 and 0 <= y0 <= y1 <= 1):
        raise ValueError("W must be a rectangle inside [0, 1]^2")
    corners = [(x, y) for x in (x0, x1) for y in (y0, y1)]
    if x0 == x1 or y0 == y1:
        return WanderingCertificate(((x0, x1), (y0, y1)), K, math.nan, True)
    A = ((1, 0), (0, 1))
    for d in range(1, 2 * K + 1):
        A = ((2 * A[0][0] + A[1][0], 2 * A[0][1] + A[1][1]), (A[0][0] + A[1][0], A[0][1] + A[1][1]))
        images = [(A[0][0] * x + A[0][1] * y, A[1][0] * x + A[1][1] * y) for x, y in corners]
        # W meets A^d W + z for some integer z iff z lies in W - A^d W (closed, exact)
        diffs = [(w[0] - v[0], w[1] - v[1]) for w in corners for v in images]
        if _polygon_has_lattice_point(_hull(diffs)):
            i = -K
            return WanderingCertificate(((x0, x1), (y0, y1)), K, math.nan, False, (i, i + d))
    return WanderingCertificate(((x0, x1), (y0, y1)), K, math.nan, True)


def wandering_check(sys: System, W, K: int) -> WanderingCertificate:
    """Exact pairwise disjointness of f^k W for |k| <= K.

    NS: W = (a, b) is the half-open interval [a, b); images are intervals
    between the images of the endpoints.  Torus: W = ((x0, x1), (y0, y1)),
    taken closed, so touching images count as overlapping.
    """
    if K < 0:
        raise ValueError("K must be >= 0")
    if isinstance(sys, NorthSouth):
        return _ns_wandering(W, K)
    if isinstance(sys, CatMap):
        return _torus_wandering(W, K)
    raise TypeError(f"wandering_check is not implemented for {sys.kind}")


# ---------------------------------------------------------------------------
# Integral of sum_n e^{phi_n} over a wandering interval.

class QuadratureDivergence(ArithmeticError):
    pass


@dataclass
class IntegralReport:
    value: float
    oracle: float  # sum over |n| <= N of |g^n W|, exact endpoints
    horizon: int
    nodes: int
    m_total: float = 1.0


def sum_integral_check(sys: System, W, N: int, quadrature_points: int = 10_000) -> IntegralReport:
    """Composite midpoint rule for the integral over W of sum_{|n|<=N} e^{phi_n}, phi = log J."""
    if not isinstance(sys, NorthSouth):
        raise TypeError("sum_integral_check is defined on the North-South map")
    if N < 0 or quadrature_points < 1:
        raise ValueError("need N >= 0 and quadrature_points >= 1")
    a, b = (_exact_endpoint(v) for v in W)
    if not 0 <= a <= b <= 1:
        raise ValueError("W must satisfy 0 <= a <= b <= 1")
    oracle = float(sum(ns_iterate_closed_form(b, n) - ns_iterate_closed_form(a, n) for n in range(-N, N + 1)))
    if a == b:
        return IntegralReport(0.0, 0.0, N, quadrature_points)
    h = (float(b) - float(a)) / quadrature_points
    nodes = float(a) + h * (np.arange(quadrature_points) + 0.5)
    if N == 0:
        return IntegralReport(float(b - a), oracle, N, quadrature_points)
    V = cocycle_tables(sys, LOG_J, nodes, N)
    if np.any(V[:, 0] >= 0) or np.any(V[:, -1] >= 0):
        raise QuadratureDivergence("cocycle tails at the horizon are not decaying on W")
    value = float(np.exp(V).sum(axis=1).mean() * (float(b) - float(a)))
    return IntegralReport(value, oracle, N, quadrature_points)


# ---------------------------------------------------------------------------
# Conservative-side statistics on the cat map.

@dataclass
class RecurrenceReport:
    n_samples: int
    n_iter: int
    thresholds: tuple
    fractions: tuple
    returns: np.ndarray = field(repr=False)


def _in_rect(pts, A):
    (x0, x1), (y0, y1) = A
    return (pts[:, 0] >= x0) & (pts[:, 0] < x1) & (pts[:, 1] >= y0) & (pts[:, 1] < y1)


def _cat_step(pts):
    x, y = pts[:, 0], pts[:, 1]
    return np.stack([_wrap(2.0 * x + y), _wrap(x + y)], axis=1)


def _recurrence_chunk(lo, hi, A, n_iter, seed):
    (x0, x1), (y0, y1) = A
    pts = np.array([
        [x0 + (x1 - x0) * r[0], y0 + (y1 - y0) * r[1]]
        for r in (sample_rng(seed, i).random(2) for i in range(lo, hi))
    ])
    returns = np.zeros(len(pts), dtype=np.int64)
    for _ in range(n_iter):
        pts = _cat_step(pts)
        returns += _in_rect(pts, A)
    return returns.tolist()


def recurrence_check(A, n_samples: int, n_iter: int, seed: int = 0,
                     thresholds=(1, 10, 100), workers: int | None = None, points=None) -> RecurrenceReport:
    """Returns to the rectangle A = ((x0, x1), (y0, y1)) of cat-map orbits started in A."""
    if points is not None:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        returns = np.zeros(len(pts), dtype=np.int64)
        for _ in range(n_iter):
            pts = _cat_step(pts)
            returns += _in_rect(pts, A)
    else:
        returns = np.array(chunked_map(_recurrence_chunk, n_samples, (A, n_iter, seed), workers), dtype=np.int64)
    m = len(returns)
    fracs = tuple(float(np.mean(returns >= r)) if m else 0.0 for r in thresholds)
    return RecurrenceReport(m, n_iter, tuple(thresholds), fracs, returns)


def _grid_cells(eps: float) -> int:
    return math.ceil(math.sqrt(2.0) / eps)


def _dense_chunk(lo, hi, n_iter, eps, seed):
    pts = np.array([sample_rng(seed, i).random(2) for i in range(lo, hi)]).reshape(-1, 2)
    return _dense_flags(pts, n_iter, eps)


def _dense_flags(pts, n_iter, eps):
    if eps >= math.sqrt(2.0) / 2:
        return [True] * len(pts)
    c = _grid_cells(eps)
    visited = np.zeros((len(pts), c * c), dtype=bool)
    rows = np.arange(len(pts))
    for step in range(n_iter + 1):
        cell = np.minimum((pts * c).astype(np.int64), c - 1)
        visited[rows, cell[:, 0] * c + cell[:, 1]] = True
        if step % 1000 == 999 and visited.all():
            break
        pts = _cat_step(pts)
    return visited.all(axis=1).tolist()


def transitivity_report(n_samples: int, n_iter: int, eps: float, seed: int = 0,
                        workers: int | None = None, points=None) -> float:
    """Fraction of sampled orbits (n_iter forward iterates) that are eps-dense.

    A ceil(sqrt(2)/eps)-per-axis grid has cells of diameter <= eps; visiting
    every cell is sufficient for eps-density.  eps >= sqrt(2)/2 (the torus
    diameter) is trivially dense.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if points is not None:
        flags = _dense_flags(np.asarray(points, dtype=float).reshape(-1, 2), n_iter, eps)
    else:
        flags = chunked_map(_dense_chunk, n_samples, (n_iter, eps, seed), workers)
    return sum(flags) / len(flags) if flags else 0.0
