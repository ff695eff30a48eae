"""Chunked Monte Carlo with reproducible reduction.

Work of ``n`` samples is cut into fixed-size chunks; chunk ``k`` always draws
from sub-stream ``k`` of the seed, and results are concatenated in chunk
order. The worker count therefore changes wall-clock time only.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .rng import SeedSpec

CHUNK = 2048


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("QET_WORKERS", "1")))
    except ValueError:
        return 1


def chunk_sizes(n: int, chunk: int = CHUNK):
    return [min(chunk, n - s) for s in range(0, n, chunk)]


def map_chunks(fn, seed: SeedSpec, n: int, *, chunk: int = CHUNK, workers: int | None = None, tag: int = 0):
    """Run ``fn(generator, size)`` over chunks; return the list of results in order."""
    sizes = chunk_sizes(int(n), chunk)
    workers = default_workers() if workers is None else max(1, int(workers))
    tasks = [(seed.generator(tag, k), size) for k, size in enumerate(sizes)]
    if workers == 1 or len(tasks) <= 1:
        return [fn(g, s) for g, s in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda t: fn(*t), tasks))


def sample_concat(fn, seed: SeedSpec, n: int, **kw) -> np.ndarray:
    parts = map_chunks(fn, seed, n, **kw)
    if not parts:
        return np.empty(0)
    return np.concatenate(parts, axis=0)


def mean_and_stderr(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if n == 0:
        return float("nan"), float("nan")
    mean = float(np.mean(x))
    if n < 2:
        return mean, float("nan")
    return mean, float(np.std(x, ddof=1) / np.sqrt(n))
