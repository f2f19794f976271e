"""Command-line driver: ``peakdomain <experiment> --config FILE [--seed S] [--workers W] [--out DIR]``.

Exit codes: 0 all assertions pass, 1 an assertion failed, 2 configuration
error (nothing written), 3 internal or numeric error.
"""
from __future__ import annotations

import argparse
import csv
import difflib
import sys
import time
import traceback
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable

from . import __version__
from .experiments import DESCRIPTIONS, RUNNERS, fmt
from .parallel import resolve_workers
from .systems import get_system

EXIT_OK, EXIT_ASSERT, EXIT_CONFIG, EXIT_INTERNAL = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Value parsers.

def _int(s: str) -> int:
    return int(s.replace("_", ""))


def _rational(s: str) -> Fraction:
    """'0.6/1.3' -> 6/13, '1e-3' -> 1/1000; decimals are read exactly."""
    if "/" in s:
        num, den = s.split("/", 1)
        return _rational(num) / _rational(den)
    return Fraction(s.strip())


def _float(s: str) -> float:
    return float(_rational(s))


def _choice(*options) -> Callable[[str], str]:
    def parse(s):
        if s not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return s
    return parse


def _list(item) -> Callable[[str], list]:
    def parse(s):
        vals = [item(t.strip()) for t in s.split(",") if t.strip()]
        if not vals:
            raise ValueError("empty list")
        return vals
    return parse


def _pair_list(s: str) -> list[tuple]:
    """'0.5:0.1, 0.5:0.5' -> [(1/2, 1/10), (1/2, 1/2)]."""
    out = []
    for t in s.split(","):
        a, b = t.split(":")
        out.append((_rational(a), _rational(b)))
    return out


def _interval(s: str) -> tuple:
    vals = _list(_rational)(s)
    if len(vals) != 2 or not 0 <= vals[0] <= vals[1] <= 1:
        raise ValueError("expected 'a, b' with 0 <= a <= b <= 1")
    return tuple(vals)


def _system(s: str) -> str:
    get_system(s)
    return s


@dataclass(frozen=True)
class Key:
    parse: Callable
    default: object = None
    check: Callable = lambda v: True  # noqa: E731
    rule: str = ""


POS = Key(_int, check=lambda v: v >= 1, rule=">= 1")
NONNEG = Key(_int, check=lambda v: v >= 0, rule=">= 0")


def _pos(default) -> Key:
    return Key(POS.parse, default, POS.check, POS.rule)


def _nonneg(default) -> Key:
    return Key(NONNEG.parse, default, NONNEG.check, NONNEG.rule)


def _tol(default) -> Key:
    return Key(_float, default, lambda v: v > 0, "> 0")


def _prob(default) -> Key:
    return Key(_rational, default, lambda v: 0 < v < 1, "in (0, 1)")


SYSTEMS = ("north-south", "cat-map", "shift")
COMMON = {
    "experiment": Key(_choice(*RUNNERS)),
    "seed": Key(_int, 0, lambda v: 0 <= v < 2**64, "a 64-bit unsigned integer"),
    "workers": _pos(None),
    "out": Key(str, "out"),
}

SCHEMA: dict[str, dict[str, Key]] = {
    "orbit": {
        "system": Key(_system, "north-south"),
        "x": Key(str, "1/2"),
        "n_from": Key(_int, 0),
        "n_to": Key(_int, 3),
    },
    "peaks": {
        "check": Key(_choice("identity", "section"), "identity"),
        "systems": Key(_list(_choice(*SYSTEMS)), list(SYSTEMS)),
        "samples": _pos(10_000),
        "N": _pos(40),
        "shift_N": _pos(60),
        "tol": _tol(1e-9),
    },
    "fund-domain": {
        "system": Key(_choice("north-south"), "north-south"),
        "samples": _pos(1000),
        "lo": Key(_rational, Fraction(1, 100), lambda v: 0 < v < 1, "in (0, 1)"),
        "hi": Key(_rational, Fraction(99, 100), lambda v: 0 < v < 1, "in (0, 1)"),
        "N": _pos(80),
        "K": _nonneg(120),
        "annulus": Key(_interval, (Fraction(3, 10), Fraction(6, 13))),
        "annulus_K": _nonneg(30),
    },
    "hopf": {
        "check": Key(_choice("volume", "integral", "recurrence"), "volume"),
        "systems": Key(_list(_choice("north-south", "cat-map")), ["north-south", "cat-map"]),
        "samples": _pos(2000),
        "N": _nonneg(80),
        "K": _nonneg(40),
        "ci_width": _tol(0.02),
        "W": Key(_interval, (Fraction(3, 10), Fraction(6, 13))),
        "quadrature": _pos(10_000),
        "tol": _tol(1e-3),
        "side": Key(_float, 0.2, lambda v: 0 < v <= 1, "in (0, 1]"),
        "n_iter": _nonneg(200_000),
        "eps": _tol(0.05),
        "min_fraction": Key(_float, 0.99, lambda v: 0 <= v <= 1, "in [0, 1]"),
    },
    "birkhoff": {
        "future_p": _prob(Fraction(1, 2)),
        "past_p": _prob(Fraction(1, 10)),
        "future_word": Key(str, "01", lambda w: bool(w) and not w.strip("01"), "a binary word"),
        "past_word": Key(str, "0000000001", lambda w: bool(w) and not w.strip("01"), "a binary word"),
        "expect_a": Key(_rational, Fraction(-5)),
        "expect_b": Key(_rational, Fraction(3, 2)),
        "L": _pos(64),
        "N": _pos(48),
        "survey": _nonneg(0),
        "obstruction_samples": _nonneg(0),
        "obstruction_n": _pos(100_000),
        "obstruction_tol": _tol(0.02),
    },
    "entropy": {
        "check": Key(_choice("fullshift", "typical"), "fullshift"),
        "m_max": _nonneg(2),
        "n_min": _pos(8),
        "n_max": _pos(20),
        "slope_tol": _tol(0.02),
        "stability_tol": _tol(0.01),
        "bands": Key(_pair_list, [(Fraction(1, 4), Fraction(1, 24)), (Fraction(1, 2), Fraction(1, 20))]),
        "brute_max": Key(_int, 22, lambda v: 1 <= v <= 22, "in [1, 22]"),
        "target_p": Key(_rational, Fraction(1, 4), lambda v: 0 <= v <= 1, "in [0, 1]"),
        "target_delta": Key(_rational, Fraction(1, 24), lambda v: v >= 0, ">= 0"),
        "target_n": _pos(24),
        "entropy_tol": _tol(0.08),
    },
    "asymmetry": {
        "pairs": Key(_pair_list, [(Fraction(1, 2), Fraction(1, 10)), (Fraction(1, 2), Fraction(1, 2))]),
        "m": _nonneg(1),
        "n_min": _pos(8),
        "n_max": _pos(24),
        "slack": Key(_rational, Fraction(1), lambda v: v >= 0, ">= 0"),
        "slope_tol": _tol(0.08),
        "min_gap": _tol(0.2),
        "symmetric_tol": _tol(0.05),
    },
}


def _cross_checks(exp: str, P: dict):
    if exp == "fund-domain" and not P["lo"] < P["hi"]:
        raise ConfigError("need lo < hi")
    if exp in ("entropy", "asymmetry") and P["n_min"] > P["n_max"] - 3:
        raise ConfigError("need at least 4 depths (n_max >= n_min + 3)")
    if exp == "entropy" and P["n_max"] + 2 * P["m_max"] + 1 > 28:
        raise ConfigError("window n_max + 2 m_max + 1 exceeds the cap 28")
    if exp == "asymmetry" and P["n_max"] + 2 * P["m"] + 1 > 28:
        raise ConfigError("window n_max + 2 m + 1 exceeds the cap 28")
    if exp == "birkhoff" and P["N"] > P["L"]:
        raise ConfigError("need N <= L")
    if exp == "orbit" and P["n_from"] > P["n_to"]:
        raise ConfigError("need n_from <= n_to")


def parse_config(text: str) -> dict[str, str]:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (t.strip() for t in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value
    return raw


def build_params(experiment: str, raw: dict[str, str], overrides: dict) -> dict:
    """Validate every key before any computation; unknown keys are errors."""
    if experiment not in RUNNERS:
        close = difflib.get_close_matches(experiment, RUNNERS, n=3)
        hint = f" (did you mean {', '.join(close)}?)" if close else ""
        raise ConfigError(f"unknown experiment {experiment!r}{hint}; choose from {', '.join(RUNNERS)}")
    schema = {**COMMON, **SCHEMA[experiment]}
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"unknown keys for {experiment}: {', '.join(unknown)}")
    P = {}
    for name, key in schema.items():
        if name in raw:
            try:
                v = key.parse(raw[name])
            except (ValueError, ZeroDivisionError) as e:
                raise ConfigError(f"{name}: cannot parse {raw[name]!r}: {e}") from None
            if not key.check(v):
                raise ConfigError(f"{name}: {raw[name]!r} must be {key.rule}")
            P[name] = v
        else:
            P[name] = key.default
    if P["experiment"] is not None and P["experiment"] != experiment:
        raise ConfigError(f"config is for {P['experiment']!r}, not {experiment!r}")
    P["experiment"] = experiment
    for name, v in overrides.items():
        if v is not None:
            if not COMMON[name].check(v):
                raise ConfigError(f"--{name}: {v!r} must be {COMMON[name].rule}")
            P[name] = v
    _cross_checks(experiment, P)
    return P


# ---------------------------------------------------------------------------
# Output.

def write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])


def write_manifest(path: Path, experiment, raw, P, files, outcome, wall):
    lines = [f"peakdomain {__version__}", f"experiment: {experiment}", "config:"]
    lines += [f"  {k} = {v}" for k, v in raw.items()]
    lines += [f"effective seed: {P['seed']}", f"workers: {P['workers']}", f"wall time: {wall:.3f} s", "files:"]
    lines += [f"  {f}" for f in files]
    lines.append("assertions:")
    for name, ok, detail in outcome.assertions:
        lines.append(f"  {'PASS' if ok else 'FAIL'}  {name}" + (f"  [{detail}]" if detail else ""))
    lines.append(f"result: {'PASS' if outcome.passed else 'FAIL'}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def list_experiments() -> str:
    width = max(map(len, RUNNERS))
    rows = [f"  {name.ljust(width)}  {DESCRIPTIONS[name]}" for name in RUNNERS]
    return "experiments:\n" + "\n".join(rows)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="peakdomain",
        description="Finite-peak cocycles, fundamental domains, Hopf and entropy experiments.",
        epilog=list_experiments(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("experiment", nargs="?", help="experiment name (see list below)")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--workers", type=int, help="worker processes (default $PEAKDOMAIN_WORKERS or 1)")
    p.add_argument("--out", help="output directory (default from config, else ./out)")
    p.add_argument("--version", action="version", version=f"peakdomain {__version__}")
    return p


def main(argv=None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    if args.experiment is None:
        parser.print_help()
        return EXIT_OK
    try:
        raw = {}
        if args.config:
            try:
                raw = parse_config(Path(args.config).read_text(encoding="utf-8"))
            except OSError as e:
                raise ConfigError(f"cannot read config: {e}") from None
        P = build_params(args.experiment, raw, {"seed": args.seed, "workers": args.workers, "out": args.out})
        P["workers"] = resolve_workers(P["workers"])
    except (ConfigError, ValueError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    start = time.perf_counter()
    try:
        outcome = RUNNERS[args.experiment](P)
        out = Path(P["out"])
        out.mkdir(parents=True, exist_ok=True)
        files = []
        for stem, table in outcome.tables.items():
            name = f"{stem}.csv"
            write_csv(out / name, table.header, table.rows)
            files.append(name)
        write_manifest(out / "manifest.txt", args.experiment, raw, P, files, outcome, time.perf_counter() - start)
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL
    for name, ok, detail in outcome.assertions:
        print(f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  [{detail}]" if detail else ""))
    return EXIT_OK if outcome.passed else EXIT_ASSERT


if __name__ == "__main__":
    sys.exit(main())
