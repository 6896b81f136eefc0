"""Ordered map over sweep cells with an optional worker cap.

``ENTSPEC_WORKERS`` sets the thread count (default 1, i.e. serial).  Results
always come back in input order so outputs do not depend on scheduling.
"""

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("ENTSPEC_WORKERS", "1")))
    except ValueError:
        return 1


def parallel_map(fn, items):
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
