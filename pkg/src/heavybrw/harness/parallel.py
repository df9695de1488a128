"""Deterministic replication across a worker pool.

Replication ``i`` of stream ``key`` always draws from
``SeedSequence(seed, spawn_key=(key, i))``, so results do not depend on the
number of workers or on scheduling order.
"""
from __future__ import annotations

from typing import Callable

import numpy as np


def rep_rng(seed: int, key: int, rep: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(key, rep)))


def _chunk(fn, seed, key, lo, hi):
    return [fn(rep_rng(seed, key, i)) for i in range(lo, hi)]


def replicate(fn: Callable[[np.random.Generator], object], reps: int, seed: int,
              key: int = 0, threads: int = 1) -> list:
    """``[fn(rng_0), ..., fn(rng_{reps-1})]`` with per-replication streams.

    ``fn`` must be picklable when ``threads > 1`` (module-level function or
    :func:`functools.partial` of one).
    """
    if threads <= 1 or reps < 64:
        return _chunk(fn, seed, key, 0, reps)
    from joblib import Parallel, delayed

    nchunks = threads * 4
    bounds = np.linspace(0, reps, nchunks + 1).astype(int)
    parts = Parallel(n_jobs=threads)(
        delayed(_chunk)(fn, seed, key, lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo
    )
    return [x for part in parts for x in part]
