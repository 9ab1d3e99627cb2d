"""Deterministic, bounded thread parallelism.

ZENOLOCK_THREADS caps the worker count for every parallel sweep in the
package.  Work items are always mapped to results in submission order, so the
numerical output is bit-identical no matter how many threads run.
"""

import os
from concurrent.futures import ThreadPoolExecutor

_ENV_VAR = "ZENOLOCK_THREADS"


def thread_limit() -> int:
    raw = os.environ.get(_ENV_VAR, "")
    try:
        value = int(raw)
    except ValueError:
        return os.cpu_count() or 1
    return max(1, value)


def parallel_map(fn, items, max_workers: int | None = None) -> list:
    """Map preserving item order; falls back to a plain loop for one worker."""
    items = list(items)
    workers = min(max_workers or thread_limit(), len(items)) if items else 1
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
