"""Deterministic fan-out over sample indices.

Work is split into fixed index chunks that do not depend on the worker
count, and results are concatenated in index order, so any schedule yields
the same output.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable

import numpy as np

__all__ = ["CHUNK", "chunks", "chunked_map", "resolve_workers", "sample_rng"]

CHUNK = 128
ENV_WORKERS = "PEAKDOMAIN_WORKERS"


def sample_rng(seed: int, index: int, stream: int = 0) -> np.random.Generator:
    """Generator for sample ``index``; independent of how samples are scheduled."""
    return np.random.default_rng(np.random.SeedSequence([seed, index, stream]))


def resolve_workers(workers: int | None = None) -> int:
    """Explicit value, else $PEAKDOMAIN_WORKERS, else 1."""
    if workers is None:
        env = os.environ.get(ENV_WORKERS)
        workers = int(env) if env else 1
    if workers < 1:
        raise ValueError("workers must be >= 1")
    return workers


def chunks(n: int, size: int = CHUNK) -> list[tuple[int, int]]:
    return [(lo, min(n, lo + size)) for lo in range(0, n, size)]


def chunked_map(fn: Callable, n: int, args: tuple = (), workers: int | None = None,
                size: int = CHUNK) -> list:
    """Concatenation of fn(lo, hi, *args) over fixed chunks of range(n).

    ``fn`` must be a module-level function returning a list.
    """
    workers = resolve_workers(workers)
    parts = chunks(n, size)
    if workers == 1 or len(parts) <= 1:
        results = [fn(lo, hi, *args) for lo, hi in parts]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(parts))) as pool:
            futures = [pool.submit(fn, lo, hi, *args) for lo, hi in parts]
            results = [f.result() for f in futures]
    out = []
    for r in results:
        out.extend(r)
    return out
