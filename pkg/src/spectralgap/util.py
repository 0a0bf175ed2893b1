"""Small shared helpers: deterministic seed derivation and ordered
thread-pool mapping."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_seed(*parts: int) -> int:
    """Stable 64-bit seed mixed from integer parts (master seed, index, ...)."""
    entropy = [int(p) & _MASK64 for p in parts]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


def parallel_map(fn, items, threads: int = 1) -> list:
    """Map preserving input order; uses a thread pool when threads > 1.

    Results are collected by index, so output order (and therefore any
    downstream aggregation) is independent of scheduling.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
