"""Order-preserving map over independent sweep points.

``FIO_LAB_THREADS`` caps the worker count (default: 1, i.e. serial).
"""

import os
from concurrent.futures import ThreadPoolExecutor


def max_workers() -> int:
    try:
        n = int(os.environ.get("FIO_LAB_THREADS", "1"))
    except ValueError:
        n = 1
    return max(1, min(n, os.cpu_count() or 1))


def parallel_map(fn, items):
    items = list(items)
    workers = max_workers()
    if workers == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))
