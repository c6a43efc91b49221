"""Deterministic, parallelism-independent Monte Carlo resampling.

Trials are processed in fixed-size chunks; chunk c draws from an independent
Philox stream `Philox(key=seed).jumped(c)`.  The chunk layout never depends
on the worker count, so results are a pure function of (inputs, seed), and
chunk outputs are combined in chunk order regardless of scheduling.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK = 4096


def _chunk_counts(cum: np.ndarray, n: int, seed: int, chunk_index: int,
                  rows: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(key=seed).jumped(chunk_index))
    u = rng.random((rows, n))
    idx = np.minimum(np.searchsorted(cum, u, side="right"), len(cum) - 1)
    m = len(cum)
    flat = idx + (np.arange(rows) * m)[:, None]
    return np.bincount(flat.ravel(), minlength=rows * m).reshape(rows, m)


def resample_counts(weights, n: int, trials: int, seed: int,
                    threads: int = 1) -> np.ndarray:
    """(trials, len(weights)) matrix of multinomial draw counts for i.i.d.
    samples of size n."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    if n <= 0:
        raise ValueError("sample size must be positive")
    w = np.asarray(weights, dtype=float)
    cum = np.cumsum(w)
    cum[-1] = max(cum[-1], 1.0)
    jobs = []
    start = 0
    chunk_index = 0
    while start < trials:
        rows = min(CHUNK, trials - start)
        jobs.append((chunk_index, rows))
        start += rows
        chunk_index += 1
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(
                lambda job: _chunk_counts(cum, n, seed, job[0], job[1]), jobs))
    else:
        parts = [_chunk_counts(cum, n, seed, c, rows) for c, rows in jobs]
    return np.concatenate(parts, axis=0)


def mean_and_se(values: np.ndarray) -> tuple[float, float]:
    """Sample mean and its standard error (pairwise summation via numpy)."""
    values = np.asarray(values, dtype=float)
    t = len(values)
    mean = float(values.mean())
    if t < 2:
        return mean, 0.0
    se = float(values.std(ddof=1) / np.sqrt(t))
    return mean, se
