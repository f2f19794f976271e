"""Batch experiments behind the command line.

Each runner takes a validated parameter dict and returns an ``Outcome``:
CSV tables plus named assertions.  Runners are deterministic in
(params, seed) and fan out over fixed index chunks, so the worker count
never changes a byte of output.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import birkhoff as bk
from . import entropy as en
from . import hopf
from .cocycle import cocycle_eval, cocycle_table, fundamental_domain_test, peak_profiles, section_pi
from .observables import AffineOf, Constant, LogJacobian, ShiftWindow, TorusTrig, indicator
from .parallel import chunked_map, sample_rng
from .systems import (
    CAT_MAP,
    FULL_SHIFT,
    NORTH_SOUTH,
    ShiftPoint,
    get_system,
    ns_iterate_closed_form,
)

__all__ = ["Outcome", "Table", "RUNNERS", "DESCRIPTIONS"]


@dataclass
class Table:
    header: tuple
    rows: list = field(default_factory=list)


@dataclass
class Outcome:
    tables: dict = field(default_factory=dict)  # file stem -> Table
    assertions: list = field(default_factory=list)  # (name, passed, detail)

    def check(self, name: str, passed: bool, detail: str = ""):
        self.assertions.append((name, bool(passed), detail))

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.assertions)


def fmt(v) -> str:
    """Canonical CSV text: repr for floats, p/q for rationals."""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v) + 0.0)  # folds -0.0
    if isinstance(v, Fraction):
        return str(v)
    if v is None:
        return ""
    return str(v)


# ---------------------------------------------------------------------------
# orbit

def _parse_point(sys, text: str):
    if sys is NORTH_SOUTH:
        return Fraction(text)  # g maps rationals to rationals
    if sys is CAT_MAP:
        x, y = (float(Fraction(t)) for t in text.split(","))
        return np.array([x, y])
    left, center, right, offset = (t.strip() for t in text.split("|"))
    return ShiftPoint(left, center, right, int(offset))


def _point_text(p) -> str:
    if isinstance(p, ShiftPoint):
        return p.window(-8, 8)
    if isinstance(p, np.ndarray):
        return " ".join(repr(float(v)) for v in p)
    if isinstance(p, Fraction):
        return str(p)
    return repr(float(p))


def run_orbit(P) -> Outcome:
    sys = get_system(P["system"])
    x = _parse_point(sys, P["x"])
    pts = sys.orbit(x, P["n_from"], P["n_to"])
    out = Outcome()
    t = Table(("n", "point"))
    for n, p in zip(range(P["n_from"], P["n_to"] + 1), pts):
        t.rows.append((n, _point_text(p)))
    out.tables["orbit"] = t
    worst = max(sys.distance(sys.inverse(sys.apply(p)), p) for p in pts)
    out.check("inverse round trip", worst <= 1e-12, f"max error {worst:.3g}")
    return out


# ---------------------------------------------------------------------------
# peaks: cocycle identity and section invariance

NS_OBS = {
    "logJ": LogJacobian(),
    "affine": AffineOf(LogJacobian(), 0.5, -0.25),
    "const": Constant(-0.25),
}
TORUS_OBS = {
    "trig": TorusTrig(((1.0, 1, 0, 0.0), (0.5, 0, 1, 0.3), (0.25, 1, 1, 1.0))),
    "logJ": LogJacobian(),
    "const": Constant(0.5),
}
IDENTITY_RANGE = {"north-south": 20, "cat-map": 10, "shift": 200}


def _random_word(rng, lo, hi) -> str:
    return "".join(rng.choice(["0", "1"], size=int(rng.integers(lo, hi + 1))))


def _random_shift_case(rng):
    x = ShiftPoint(_random_word(rng, 1, 4), _random_word(rng, 0, 12), _random_word(rng, 1, 4),
                   int(rng.integers(-5, 6)))
    r = int(rng.integers(0, 3))
    vals = [Fraction(int(rng.integers(-5, 6)), int(rng.integers(1, 5))) for _ in range(1 << (2 * r + 1))]
    kinds = {
        "window": ShiftWindow(r, vals),
        "spin": AffineOf(indicator(1), 2, -1),
        "const": Constant(3),
    }
    name = ["window", "spin", "const"][int(rng.integers(0, 3))]
    return x, name, kinds[name]


def _identity_chunk(lo, hi, seed, systems):
    rows = []
    for i in range(lo, hi):
        rng = sample_rng(seed, i)
        kind = systems[int(rng.integers(0, len(systems)))]
        sys = get_system(kind)
        R = IDENTITY_RANGE[kind]
        n, k = (int(v) for v in rng.integers(-R, R + 1, size=2))
        if kind == "shift":
            x, name, obs = _random_shift_case(rng)
        elif kind == "north-south":
            x = float(rng.random())
            name = list(NS_OBS)[int(rng.integers(0, len(NS_OBS)))]
            obs = NS_OBS[name]
        else:
            x = rng.random(2)
            name = list(TORUS_OBS)[int(rng.integers(0, len(TORUS_OBS)))]
            obs = TORUS_OBS[name]
        lhs = cocycle_eval(sys, obs, x, n + k)
        rhs = cocycle_eval(sys, obs, x, n) + cocycle_eval(sys, obs, sys.iterate(x, n), k)
        if kind == "shift":
            err = abs(Fraction(lhs) - Fraction(rhs))
        else:
            err = abs(lhs - rhs) / max(1.0, abs(lhs))
        rows.append((i, kind, name, n, k, lhs, rhs, err))
    return rows


def _check_identity(P, out: Outcome):
    rows = chunked_map(_identity_chunk, P["samples"], (P["seed"], tuple(P["systems"])), P["workers"])
    out.tables["identity"] = Table(("index", "system", "observable", "n", "k", "lhs", "rhs", "error"), rows)
    exact_bad = sum(1 for r in rows if r[1] == "shift" and r[7] != 0)
    float_err = max((float(r[7]) for r in rows if r[1] != "shift"), default=0.0)
    out.check("shift identity exact", exact_bad == 0, f"{exact_bad} nonzero residuals")
    out.check("smooth identity relative error", float_err <= P["tol"], f"max {float_err:.3g} <= {P['tol']}")


SPIN = AffineOf(indicator(1), 2, -1)  # phi(y) = 2 y_0 - 1


def _section_points(rng, kind, N):
    if kind == "north-south":
        return float(0.01 + 0.98 * rng.random())
    x = ShiftPoint("1", _random_word(rng, 0, 10), "0", int(rng.integers(-5, 6)))
    return x


def _section_chunk(lo, hi, seed, systems, N_ns, N_shift, tol):
    rows = []
    for i in range(lo, hi):
        rng = sample_rng(seed, i)
        kind = systems[i % len(systems)]
        sys = get_system(kind)
        N = N_ns if kind == "north-south" else N_shift
        obs = LogJacobian() if kind == "north-south" else SPIN
        x = _section_points(rng, kind, N)
        k = int(rng.integers(-(N // 2), N // 2 + 1))
        y = sys.iterate(x, k)
        if kind == "north-south":
            px, py = peak_profiles(sys, obs, np.array([x, y]), N)
        else:
            px, py = peak_profiles(sys, obs, [x, y], N)
        both = px.certified and py.certified
        if not both:
            rows.append((i, kind, k, px.n_f, py.n_f, int(px.certified), int(py.certified), "", "", "", 0))
            continue
        pix = sys.iterate(x, px.n_f)
        piy = sys.iterate(y, py.n_f)
        dist = sys.distance(pix, piy)
        phi_k = cocycle_eval(sys, obs, x, k)
        resid = abs(px.phi_max - py.phi_max - phi_k)
        scale = max(1.0, abs(float(px.phi_max)))
        ok = (py.n_f == px.n_f - k) and dist <= tol and resid <= tol * scale
        if kind == "shift":
            ok = ok and pix == piy and resid == 0
        rows.append((i, kind, k, px.n_f, py.n_f, 1, 1, px.phi_max, dist, resid, int(ok)))
    return rows


def _check_section(P, out: Outcome):
    args = (P["seed"], tuple(P["systems"]), P["N"], P["shift_N"], P["tol"])
    rows = chunked_map(_section_chunk, P["samples"], args, P["workers"])
    out.tables["section"] = Table(
        ("index", "system", "k", "n_f_x", "n_f_fkx", "certified_x", "certified_fkx",
         "phi_max", "pi_distance", "residual", "ok"), rows)
    certified = [r for r in rows if r[5] and r[6]]
    good = sum(r[10] for r in certified)
    out.check("every sample certified at x and f^k x", len(certified) == len(rows),
              f"{len(certified)}/{len(rows)}")
    out.check("section invariance, n_f shift and peak relation", good == len(certified),
              f"{good}/{len(certified)} within {P['tol']}")


def run_peaks(P) -> Outcome:
    out = Outcome()
    if P["check"] == "identity":
        _check_identity(P, out)
    else:
        _check_section(P, out)
    return out


# ---------------------------------------------------------------------------
# fund-domain

def _grid(P):
    lo, hi, m = P["lo"], P["hi"], P["samples"]
    return [lo + (hi - lo) * Fraction(2 * i + 1, 2 * m) for i in range(m)]


def _fund_chunk(lo, hi, grid, N, K, a, b):
    pts = [float(u) for u in grid[lo:hi]]
    rep = fundamental_domain_test(NORTH_SOUTH, LogJacobian(), pts, N, K)
    rows = []
    for j, u in enumerate(grid[lo:hi]):
        # exact orbit of the rational grid point against [a, b)
        hits = sum(1 for k in range(-K, K + 1) if a <= ns_iterate_closed_form(u, k) < b)
        rows.append((lo + j, float(u), rep.n_f[j], rep.counts[j], hits))
    return rows


def run_fund_domain(P) -> Outcome:
    out = Outcome()
    grid = _grid(P)
    a, b = P["annulus"]
    rows = chunked_map(_fund_chunk, len(grid), (grid, P["N"], P["K"], a, b), P["workers"], size=50)
    out.tables["fund_domain"] = Table(("index", "u", "n_f", "orbit_hits_W", "annulus_hits"), rows)
    uncertified = sum(1 for r in rows if r[3] is None)
    out.check("all grid points certified", uncertified == 0, f"{uncertified} uncertified")
    bad = sum(1 for r in rows if r[3] != 1)
    out.check("orbit meets {n_f = 0} exactly once", bad == 0, f"{bad} samples with count != 1")
    cert = hopf.wandering_check(NORTH_SOUTH, (a, b), P["annulus_K"])
    out.tables["wandering"] = Table(("a", "b", "K", "min_separation", "passed"),
                                    [(a, b, cert.horizon, cert.min_separation, cert.passed)])
    out.check("annulus wandering", cert.passed, f"overlap {cert.overlap}")
    bad = sum(1 for r in rows if r[4] != 1)
    out.check("orbit meets the annulus exactly once", bad == 0, f"{bad} samples with count != 1")
    return out


# ---------------------------------------------------------------------------
# hopf

def _hopf_volume(P, out: Outcome):
    per = Table(("system", "index", "point", "class"))
    summary = Table(("system", "n_samples", "dissipative", "conservative_suspect", "unknown",
                     "estimate", "ci_lo", "ci_hi", "transitivity_bound", "case"))
    reports = {}
    for kind in P["systems"]:
        rep = hopf.estimate_H_volume(get_system(kind), P["samples"], P["N"], P["seed"], P["workers"])
        reports[kind] = rep
        for i, (p, c) in enumerate(zip(rep.points, rep.classes)):
            per.rows.append((kind, i, _point_text(np.asarray(p)) if isinstance(p, list) else repr(p), c.value))
        C = hopf.Classification
        summary.rows.append((kind, rep.n_samples, rep.counts[C.DISSIPATIVE], rep.counts[C.CONSERVATIVE_SUSPECT],
                             rep.counts[C.UNKNOWN], rep.estimate, rep.ci[0], rep.ci[1],
                             rep.transitivity_bound, hopf.dichotomy_case(rep)))
    out.tables["hopf_points"] = per
    out.tables["hopf_summary"] = summary
    if "north-south" in reports:
        r = reports["north-south"]
        width = r.ci[1] - r.ci[0]
        out.check("NS dissipative volume 1.00", r.estimate == 1.0, f"estimate {r.estimate}")
        out.check("NS Wilson width", width <= P["ci_width"], f"{width:.4f} <= {P['ci_width']}")
    if "cat-map" in reports:
        r = reports["cat-map"]
        C = hopf.Classification
        out.check("cat-map volume 0.00, all ConservativeSuspect",
                  r.estimate == 0.0 and r.counts[C.CONSERVATIVE_SUSPECT] == r.n_samples,
                  f"estimate {r.estimate}, counts {[r.counts[c] for c in C]}")


def _hopf_integral(P, out: Outcome):
    a, b = P["W"]
    cert = hopf.wandering_check(NORTH_SOUTH, (a, b), max(P["N"], P["K"]))
    out.check("W wandering at horizon >= N", cert.passed, f"overlap {cert.overlap}")
    t = Table(("N", "nodes", "value", "oracle", "abs_diff"))
    values = []
    for N in sorted({*range(0, P["N"], 10), P["N"]}):
        r = hopf.sum_integral_check(NORTH_SOUTH, (a, b), N, P["quadrature"])
        values.append(r.value)
        t.rows.append((N, r.nodes, r.value, r.oracle, abs(r.value - r.oracle)))
    out.tables["integral"] = t
    last = t.rows[-1]
    out.check("integral <= 1 + tol", last[2] <= 1.0 + P["tol"], f"{last[2]!r}")
    out.check("integral matches sum of image lengths", last[4] <= P["tol"], f"diff {last[4]:.3g}")
    out.check("monotone in N", all(u <= v for u, v in zip(values, values[1:])))


def _hopf_recurrence(P, out: Outcome):
    A = ((0.0, P["side"]), (0.0, P["side"]))
    rec = hopf.recurrence_check(A, P["samples"], P["n_iter"], P["seed"], (1, 10, 100), P["workers"])
    flags = chunked_map(hopf._dense_chunk, P["samples"], (P["n_iter"], P["eps"], P["seed"] + 1), P["workers"])
    out.tables["recurrence"] = Table(("index", "returns", "eps_dense"),
                                     [(i, int(r), bool(f)) for i, (r, f) in enumerate(zip(rec.returns, flags))])
    out.tables["recurrence_summary"] = Table(
        ("n_samples", "n_iter", "frac_ge_1", "frac_ge_10", "frac_ge_100", "frac_eps_dense"),
        [(rec.n_samples, rec.n_iter, *rec.fractions, sum(flags) / len(flags))])
    f100 = rec.fractions[2]
    dense = sum(flags) / len(flags)
    out.check("returns >= 100", f100 >= P["min_fraction"], f"{f100} >= {P['min_fraction']}")
    out.check("eps-dense", dense >= P["min_fraction"], f"{dense} >= {P['min_fraction']}")


def run_hopf(P) -> Outcome:
    out = Outcome()
    {"volume": _hopf_volume, "integral": _hopf_integral, "recurrence": _hopf_recurrence}[P["check"]](P, out)
    return out


# ---------------------------------------------------------------------------
# birkhoff

def _splice_rows(label, x, mu, nu, N, drift):
    chk = bk.heteroclinic_peak_check(x, mu, nu, N)
    phi = chk.observable
    table = cocycle_table(FULL_SHIFT, phi, x, N)
    negative = all(table.at(n) < 0 for n in range(-N, N + 1) if abs(n) >= drift)
    pi0 = FULL_SHIFT.iterate(x, chk.n_f)
    rows = []
    for k in range(-(N // 2), N // 2 + 1):
        try:
            nk, pk = section_pi(FULL_SHIFT, phi, x.shift(k), N)
            rows.append((label, k, 1, nk, int(pk == pi0)))
        except bk.CertificationError:
            rows.append((label, k, 0, "", ""))
    return chk, negative, rows


def run_birkhoff(P) -> Outcome:
    out = Outcome()
    mu, nu = bk.Bernoulli(P["future_p"]), bk.Bernoulli(P["past_p"])
    phi = bk.separating_observable(mu, nu, [indicator(1)])
    out.tables["separating_observable"] = Table(("future_p", "past_p", "a", "b"),
                                                [(mu.p, nu.p, phi.a, phi.b)])
    out.check("a, b exact", (phi.a, phi.b) == (P["expect_a"], P["expect_b"]), f"a={phi.a}, b={phi.b}")

    N, L = P["N"], P["L"]
    drift = max(1, N // 4)
    points = {
        f"bernoulli-seed-{P['seed']}": bk.splice(bk.BernoulliSource(nu.p, P["seed"]),
                                                 bk.BernoulliSource(mu.p, P["seed"]), L),
        "periodic": bk.splice(bk.PeriodicSource(P["past_word"]), bk.PeriodicSource(P["future_word"]), L),
    }
    pts = Table(("point", "certified", "n_f", "junction", "decay_rate", "negative_tails"))
    shifts = Table(("point", "k", "certified", "n_f", "same_pi"))
    for label, x in points.items():
        try:
            chk, negative, rows = _splice_rows(label, x, mu, nu, N, drift)
        except bk.CertificationError as e:
            pts.rows.append((label, 0, "", "", "", ""))
            out.check(f"{label} certified", False, str(e))
            continue
        pts.rows.append((label, 1, chk.n_f, chk.junction, chk.profile.certificate.decay_rate, int(negative)))
        shifts.rows.extend(rows)
        out.check(f"{label} certified", True)
        out.check(f"{label} phi_n < 0 for {drift} <= |n| <= {N}", negative)
        cert = [r for r in rows if r[2]]
        same = all(r[4] for r in cert)
        out.check(f"{label} certified shifts share one pi-image", same,
                  f"{len(cert)}/{len(rows)} shifts certified")
    out.tables["splice_points"] = pts
    out.tables["splice_shifts"] = shifts

    survey = Table(("seed", "certified", "n_f"))
    for s in range(P["survey"]):
        x = bk.splice(bk.BernoulliSource(nu.p, s), bk.BernoulliSource(mu.p, s), L)
        try:
            chk = bk.heteroclinic_peak_check(x, mu, nu, N)
            survey.rows.append((s, 1, chk.n_f))
        except bk.CertificationError:
            survey.rows.append((s, 0, ""))
    out.tables["splice_survey"] = survey

    if P["obstruction_samples"]:
        frac = bk.ergodic_obstruction_demo(mu, P["obstruction_samples"], P["obstruction_n"],
                                           P["obstruction_tol"], seed=P["seed"])
        out.tables["obstruction"] = Table(("p", "samples", "n", "tol", "fraction"),
                                          [(mu.p, P["obstruction_samples"], P["obstruction_n"],
                                            P["obstruction_tol"], frac)])
        out.check("two-sided typical fraction >= 0.95", frac >= 0.95, f"{frac}")
    return out


# ---------------------------------------------------------------------------
# entropy

ENTROPY_HEADER = ("m", "n", "count", "log_count", "slope", "t_lo", "t_hi")


def run_entropy(P) -> Outcome:
    out = Outcome()
    if P["check"] == "fullshift":
        full = en.FullShiftSet()
        t = Table(ENTROPY_HEADER)
        exact = True
        slopes = []
        for m in range(P["m_max"] + 1):
            for n in range(1, P["n_max"] + 1):
                exact &= en.cover_count(full, n, m) == 2 ** (n + 2 * m + 1)
            est = en.h_estimate(full, m, range(P["n_min"], P["n_max"] + 1))
            slopes.append(est.slope)
            t.rows.extend(est.rows())
        out.tables["entropy"] = t
        sep = all(en.separated_count(full, n, m) == en.cover_count(full, n, m)
                  for m in range(P["m_max"] + 1) for n in range(1, P["n_max"] + 1)
                  if n + 2 * m + 1 <= en.BRUTE_FORCE_MAX)
        out.check("cover_count = 2^(n+2m+1)", exact)
        out.check("separated_count = cover_count", sep)
        worst = max(abs(s - math.log(2)) for s in slopes)
        out.check("slope within tol of log 2", worst <= P["slope_tol"], f"max deviation {worst:.3g}")
        drift = max(abs(a - b) for a, b in zip(slopes, slopes[1:])) if len(slopes) > 1 else 0.0
        out.check("resolution stability", drift <= P["stability_tol"], f"{drift:.3g}")
        return out

    t = Table(("p", "delta", "window", "closed_form", "brute_force", "match"))
    all_match = True
    for p, delta in P["bands"]:
        band = en.FrequencyBand(p, delta)
        for L in range(1, P["brute_max"] + 1):
            lo, hi = en.cover_window(L - 1, 0)
            cf = band.count(lo, hi)
            bf = en.brute_force_count(band, lo, hi, P["workers"])
            all_match &= cf == bf
            t.rows.append((band.p, band.delta, L, cf, bf, cf == bf))
    out.tables["typical_bruteforce"] = t
    out.check("closed form = brute force", all_match)
    p, delta, n = P["target_p"], P["target_delta"], P["target_n"]
    c = en.cover_count(en.FrequencyBand(p, delta), n, 0)
    rate = math.log(c) / n
    H = en.binary_entropy(float(p))
    out.tables["typical_rate"] = Table(("p", "delta", "n", "count", "rate", "entropy"), [(p, delta, n, c, rate, H)])
    out.check("typical-word rate", abs(rate - H) <= P["entropy_tol"], f"|{rate:.4f} - {H:.4f}|")
    return out


# ---------------------------------------------------------------------------
# asymmetry

def run_asymmetry(P) -> Outcome:
    out = Outcome()
    t = Table(("p", "q", "direction", *ENTROPY_HEADER))
    s = Table(("p", "q", "forward_slope", "backward_slope", "forward_target", "backward_target", "witnesses_ok"))
    ns = range(P["n_min"], P["n_max"] + 1)
    for p, q in P["pairs"]:
        slack = 0 if {p, q} <= {0, 1} else P["slack"]
        r = en.heteroclinic_asymmetry(p, q, P["m"], ns, P["seed"], slack)
        for est in (r.forward, r.backward):
            t.rows.extend((p, q, est.direction, *row) for row in est.rows())
        s.rows.append((p, q, r.forward_slope, r.backward_slope, r.forward_target, r.backward_target,
                       r.witnesses_ok))
        out.check(f"({p}, {q}) witnesses in E", r.witnesses_ok)
        if p == q:
            d = abs(r.forward_slope - r.backward_slope)
            out.check(f"({p}, {q}) symmetric", d <= P["symmetric_tol"], f"{d:.3g}")
        else:
            df = abs(r.forward_slope - r.forward_target)
            db = abs(r.backward_slope - r.backward_target)
            gap = abs(r.forward_slope - r.backward_slope)
            out.check(f"({p}, {q}) forward slope", df <= P["slope_tol"], f"{df:.3g}")
            out.check(f"({p}, {q}) backward slope", db <= P["slope_tol"], f"{db:.3g}")
            out.check(f"({p}, {q}) gap", gap >= P["min_gap"], f"{gap:.3g}")
    out.tables["asymmetry"] = t
    out.tables["asymmetry_summary"] = s
    return out


RUNNERS = {
    "orbit": run_orbit,
    "peaks": run_peaks,
    "fund-domain": run_fund_domain,
    "hopf": run_hopf,
    "birkhoff": run_birkhoff,
    "entropy": run_entropy,
    "asymmetry": run_asymmetry,
}

DESCRIPTIONS = {
    "orbit": "orbit segment of one point (north-south, cat-map or shift)",
    "peaks": "cocycle identity suite or section invariance of the last-peak map",
    "fund-domain": "North-South grid: orbit meets {n_f = 0} once; wandering annulus",
    "hopf": "dissipative volume, wandering-interval integral, cat-map recurrence",
    "birkhoff": "separating observable and spliced heteroclinic points on the shift",
    "entropy": "full-shift and typical-word cylinder counts",
    "asymmetry": "forward vs inverse-shift entropy of a spliced family",
}
