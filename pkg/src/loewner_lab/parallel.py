"""Sample-parallel execution with order-independent results.

Work is split into contiguous index ranges. Each range is computed by a pure
function of (parameters, master seed, index range), so the concatenated result
is identical for any worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np


def default_workers() -> int:
    return os.cpu_count() or 1


def chunk_ranges(n: int, n_chunks: int) -> list[tuple[int, int]]:
    edges = np.linspace(0, n, max(1, min(n, n_chunks)) + 1).round().astype(int)
    return [(int(lo), int(hi)) for lo, hi in zip(edges[:-1], edges[1:]) if hi > lo]


def map_ranges(fn, n: int, workers: int | None = None, chunks_per_worker: int = 4) -> np.ndarray:
    """Evaluate ``fn(lo, hi)`` over a partition of range(n) and stack the rows.

    ``fn`` must be picklable (a module-level function or a partial of one).
    """
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or n < 2:
        return np.asarray(fn(0, n))
    ranges = chunk_ranges(n, workers * chunks_per_worker)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(fn, [r[0] for r in ranges], [r[1] for r in ranges]))
    return np.concatenate([np.asarray(p) for p in parts], axis=0)
