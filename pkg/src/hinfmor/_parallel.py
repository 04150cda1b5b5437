"""Thread-pool helper honoring the MOR_IHA_THREADS environment variable.

Work items are independent (one frequency point, one shift, one probe), so
a plain ordered map is all we need.  Results always come back in input
order, which keeps runs deterministic regardless of the thread count.
"""

import os
from concurrent.futures import ThreadPoolExecutor


def thread_count():
    raw = os.environ.get("MOR_IHA_THREADS", "1")
    try:
        k = int(raw)
    except ValueError:
        return 1
    return max(1, k)


def parallel_map(fn, items):
    """Map ``fn`` over ``items`` preserving order.

    Serial when MOR_IHA_THREADS is unset or 1 (the default), threaded
    otherwise.  BLAS-bound work releases the GIL, so threads are enough.
    """
    items = list(items)
    k = thread_count()
    if k == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(k, len(items))) as pool:
        return list(pool.map(fn, items))
