"""Additive cocycles, finite peaks, the last-peak section and fundamental domains.

For phi in C(X, R) the cocycle is phi_n(x) = phi(x) + ... + phi(f^{n-1} x) for
n >= 0 and -phi(f^n x) - ... - phi(f^{-1} x) for n < 0.  The peak value
sup_n phi_n(x) is computed over |n| <= N and finiteness of the peak set is
certified by linear decay of both tails inside a drift window.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .observables import Observable, ShiftWindow, AffineOf, series
from .systems import FullShift, System

__all__ = [
    "HORIZON_CAP",
    "HorizonError",
    "CertificationError",
    "CocycleTable",
    "Certified",
    "Uncertified",
    "PeakProfile",
    "FundamentalDomainReport",
    "cocycle_eval",
    "cocycle_table",
    "cocycle_tables",
    "peak_profile",
    "peak_profiles",
    "section_pi",
    "verify_shift_relation",
    "fundamental_domain_test",
]

HORIZON_CAP = 1_000_000
DEFAULT_MIN_DECAY = 1e-3


class HorizonError(ValueError):
    pass


class CertificationError(ValueError):
    """Raised where a Certified peak profile is a precondition."""

    def __init__(self, message, profile=None):
        super().__init__(message)
        self.profile = profile


def _check_horizon(n: int):
    if abs(n) > HORIZON_CAP:
        raise HorizonError(f"|n| = {abs(n)} exceeds horizon cap {HORIZON_CAP}")


def _is_exact(sys: System, obs: Observable) -> bool:
    return sys.exact and obs.exact_on(sys)


def _total(values):
    if values.dtype == object:
        return sum(values.tolist(), 0)
    if np.issubdtype(values.dtype, np.integer):
        return int(values.sum())
    return float(values.sum())


def cocycle_eval(sys: System, obs: Observable, x, n: int):
    """phi_n(x); phi_0 = 0 exactly."""
    _check_horizon(n)
    if n == 0:
        return 0 if _is_exact(sys, obs) else 0.0
    base = obs.folded() if isinstance(obs, AffineOf) else obs
    if isinstance(sys, FullShift) and isinstance(base, ShiftWindow):
        if n > 0:
            return base.sum_along(x, 0, n)
        return -base.sum_along(x, n, 0)
    if n > 0:
        return _total(series(sys, obs, x, 0, n))
    return -_total(series(sys, obs, x, n, 0))


@dataclass
class CocycleTable:
    """phi_n(x) for n in [-N, N]; ``values[n + N]``."""

    point: object
    horizon: int
    values: np.ndarray
    exact: bool = False

    def at(self, n: int):
        if abs(n) > self.horizon:
            raise IndexError(f"n = {n} outside horizon {self.horizon}")
        v = self.values[n + self.horizon]
        if self.exact:
            return v if not isinstance(v, np.integer) else int(v)
        return float(v)

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.horizon, self.horizon + 1)


def _tables_from_series(fwd, bwd):
    """Rows phi_n for n in [-N, N] from phi(f^j x), j in [0, N) and j in [-N, 0)."""
    dtype = fwd.dtype if fwd.dtype == bwd.dtype else object
    m = fwd.shape[0]
    zero = np.zeros((m, 1), dtype=dtype)
    if dtype == object:
        zero[:] = 0
    pos = np.cumsum(fwd, axis=1)
    neg = -np.cumsum(bwd[:, ::-1], axis=1)
    return np.concatenate([neg[:, ::-1], zero, pos], axis=1)


def cocycle_tables(sys: System, obs: Observable, points, N: int) -> np.ndarray:
    """Cocycle rows for a batch of points, shape (len(points), 2N + 1).

    NS/torus batches are evaluated as numpy arrays; shift points one by one.
    """
    if N < 1:
        raise ValueError("horizon N must be >= 1")
    _check_horizon(N)
    if isinstance(sys, FullShift):
        rows_f, rows_b = [], []
        for x in points:
            s = series(sys, obs, x, -N, N)
            rows_b.append(s[:N])
            rows_f.append(s[N:])
        fwd = np.array(rows_f, dtype=rows_f[0].dtype)
        bwd = np.array(rows_b, dtype=rows_b[0].dtype)
        return _tables_from_series(fwd, bwd)
    pts = np.asarray(points, dtype=float)
    s = series(sys, obs, pts, -N, N)
    return _tables_from_series(s[:, N:], s[:, :N])


def cocycle_table(sys: System, obs: Observable, x, N: int) -> CocycleTable:
    """Table of phi_n(x), |n| <= N, in O(N) map applications."""
    if isinstance(sys, FullShift):
        rows = cocycle_tables(sys, obs, [x], N)
    else:
        rows = cocycle_tables(sys, obs, np.asarray(x, dtype=float)[None, ...], N)
    return CocycleTable(x, N, rows[0], exact=_is_exact(sys, obs))


# ---------------------------------------------------------------------------
# Peak profiles.

@dataclass(frozen=True)
class Certified:
    decay_rate: float
    onset: int


@dataclass(frozen=True)
class Uncertified:
    reason: str


Certificate = Union[Certified, Uncertified]


@dataclass(frozen=True)
class PeakProfile:
    phi_max: object
    peak_times: tuple
    n_f: int
    horizon: int
    tie_tol: float
    certificate: Certificate
    forward_slope: float = field(default=float("nan"), compare=False)
    backward_slope: float = field(default=float("nan"), compare=False)

    @property
    def certified(self) -> bool:
        return isinstance(self.certificate, Certified)


def _scalar(v, exact):
    if exact:
        return int(v) if isinstance(v, (int, np.integer)) else v
    return float(v)


def _lsq_slope(tail: np.ndarray) -> np.ndarray:
    w = tail.shape[1]
    t = np.arange(w, dtype=float) - (w - 1) / 2.0
    return (tail - tail.mean(axis=1, keepdims=True)) @ t / (t @ t)


def _profiles_from_rows(V, N, exact, tie_tol, drift_window, min_decay):
    n = np.arange(-N, N + 1)
    w = drift_window
    Vf = V.astype(float)
    phi_max = V.max(axis=1)
    if exact:
        tol = np.zeros(V.shape[0])
        peaks = np.asarray(V == phi_max[:, None], dtype=bool)
        tails = np.concatenate([V[:, :w], V[:, V.shape[1] - w:]], axis=1)
        below = np.asarray(tails < phi_max[:, None], dtype=bool).all(axis=1)
        inc = np.diff(V, axis=1)
        constant = np.asarray(inc == inc[:, :1], dtype=bool).all(axis=1)
    else:
        if tie_tol is None:
            tol = 1e-9 * np.maximum(1.0, np.abs(Vf).max(axis=1))
        else:
            tol = np.full(V.shape[0], float(tie_tol))
        peaks = Vf >= (phi_max - tol)[:, None]
        tails = np.concatenate([Vf[:, :w], Vf[:, Vf.shape[1] - w:]], axis=1)
        below = (tails < (phi_max - tol)[:, None]).all(axis=1)
        inc = np.diff(Vf, axis=1)
        constant = np.ptp(inc, axis=1) <= tol
    if w >= 2:
        fwd_slope = _lsq_slope(Vf[:, -w:])
        bwd_slope = _lsq_slope(Vf[:, :w][:, ::-1])
    else:
        fwd_slope = Vf[:, -1] - Vf[:, -2]
        bwd_slope = Vf[:, 0] - Vf[:, 1]
    lam = np.minimum(-fwd_slope, -bwd_slope)
    with np.errstate(divide="ignore", invalid="ignore"):
        need = (np.abs(n)[None, :] - (phi_max.astype(float)[:, None] - Vf) / lam[:, None]).max(axis=1)
    ntimes = n.tolist()
    out = []
    for i in range(V.shape[0]):
        times = tuple(t for t, hit in zip(ntimes, peaks[i].tolist()) if hit)
        fs, bs = float(fwd_slope[i]), float(bwd_slope[i])
        if constant[i]:
            cert = Uncertified("constant cocycle tails")
        elif fs > -min_decay:
            cert = Uncertified(f"forward tail not decaying (slope {fs:.3g})")
        elif bs > -min_decay:
            cert = Uncertified(f"backward tail not decaying (slope {bs:.3g})")
        elif not below[i]:
            cert = Uncertified("running maximum still changing in drift window")
        else:
            cert = Certified(float(lam[i]), max(0, math.ceil(need[i])))
        out.append(PeakProfile(
            phi_max=_scalar(phi_max[i], exact),
            peak_times=times,
            n_f=times[-1],
            horizon=N,
            tie_tol=float(tol[i]),
            certificate=cert,
            forward_slope=fs,
            backward_slope=bs,
        ))
    return out


def _defaults(N, drift_window):
    if drift_window is None:
        drift_window = max(1, N // 4)
    if not 1 <= drift_window <= N:
        raise ValueError("need N >= drift_window >= 1")
    return drift_window


def peak_profiles(sys: System, obs: Observable, points, N: int, tie_tol=None,
                  drift_window=None, min_decay=DEFAULT_MIN_DECAY) -> list[PeakProfile]:
    """Peak profiles for a batch of points (see ``peak_profile``)."""
    w = _defaults(N, drift_window)
    if len(points) == 0:
        return []
    V = cocycle_tables(sys, obs, points, N)
    return _profiles_from_rows(V, N, _is_exact(sys, obs), tie_tol, w, min_decay)


def peak_profile(sys: System, obs: Observable, x, N: int, tie_tol=None,
                 drift_window=None, min_decay=DEFAULT_MIN_DECAY) -> PeakProfile:
    """Truncated peak value, peak times, last peak time and a tail-drift certificate.

    Certified iff the least-squares slope of both tails over the last
    ``drift_window`` indices is <= -min_decay and no tail value comes within
    ``tie_tol`` of the maximum.  Defaults: drift_window = N // 4, tie_tol =
    1e-9 * max(1, max |phi_n|) (0 on exact shift tables).
    """
    if isinstance(sys, FullShift):
        pts = [x]
    else:
        pts = np.asarray(x, dtype=float)[None, ...]
    return peak_profiles(sys, obs, pts, N, tie_tol, drift_window, min_decay)[0]


def section_pi(sys: System, obs: Observable, x, N: int, **kw):
    """(n_f(x), pi(x) = f^{n_f(x)} x) for a certified point."""
    prof = peak_profile(sys, obs, x, N, **kw)
    if not prof.certified:
        raise CertificationError(f"point not certified: {prof.certificate.reason}", prof)
    return prof.n_f, sys.iterate(x, prof.n_f)


def verify_shift_relation(sys: System, obs: Observable, x, k: int, N: int, **kw):
    """|Phi(x) - Phi(f^k x) - phi_k(x)|, exact 0 on shift with rational tables."""
    px = peak_profile(sys, obs, x, N, **kw)
    y = sys.iterate(x, k)
    py = peak_profile(sys, obs, y, N, **kw)
    for p, label in ((px, "x"), (py, "f^k x")):
        if not p.certified:
            raise CertificationError(f"{label} not certified: {p.certificate.reason}", p)
    return abs(px.phi_max - py.phi_max - cocycle_eval(sys, obs, x, k))


@dataclass
class FundamentalDomainReport:
    """Orbit hits of W = {n_f = 0} for each sample point."""

    horizon: int
    window: int
    counts: list = field(default_factory=list)  # None for uncertified samples
    hit_times: list = field(default_factory=list)
    n_f: list = field(default_factory=list)

    @property
    def certified(self) -> int:
        return sum(c is not None for c in self.counts)

    @property
    def passed(self) -> bool:
        return self.certified > 0 and all(c == 1 for c in self.counts if c is not None)


def fundamental_domain_test(sys: System, obs: Observable, sample: Sequence, N: int, K: int,
                            **kw) -> FundamentalDomainReport:
    """Count k in [-K, K] with f^k x in W = {y : y certified, n_f(y) = 0}.

    Membership of every orbit point is recomputed from its own cocycle table;
    nothing is inferred from the section identity.
    """
    report = FundamentalDomainReport(horizon=N, window=K)
    ks = np.arange(-K, K + 1)
    for x in sample:
        prof = peak_profile(sys, obs, x, N, **kw)
        if not prof.certified:
            report.counts.append(None)
            report.hit_times.append(())
            report.n_f.append(None)
            continue
        orbit_pts = sys.orbit(x, -K, K)
        if not isinstance(sys, FullShift):
            orbit_pts = np.array(orbit_pts, dtype=float)
        profs = peak_profiles(sys, obs, orbit_pts, N, **kw)
        hits = tuple(int(k) for k, p in zip(ks, profs) if p.certified and p.n_f == 0)
        report.counts.append(len(hits))
        report.hit_times.append(hits)
        report.n_f.append(prof.n_f)
    return report
