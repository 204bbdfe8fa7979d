"""Ordered task mapping over an optional process pool."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def default_workers() -> int:
    return os.cpu_count() or 1


def ordered_map(fn, tasks, workers=1):
    """``[fn(t) for t in tasks]``, optionally spread over processes.

    Results come back in task order, so any reduction over them is
    independent of the worker count.
    """
    tasks = list(tasks)
    if workers is None:
        workers = default_workers()
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(fn, tasks))
