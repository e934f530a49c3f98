"""Order-preserving map over independent work items.

The worker count comes from the FRACSOB_WORKERS environment variable
(default 1). Results are always returned in input order, and each item is
computed by the same pure function, so outputs do not depend on the count.
"""

import os
from concurrent.futures import ProcessPoolExecutor

ENV_WORKERS = "FRACSOB_WORKERS"


def worker_count(default=1):
    raw = os.environ.get(ENV_WORKERS, "").strip()
    if not raw:
        return default
    try:
        k = int(raw)
    except ValueError:
        raise ValueError(f"{ENV_WORKERS} must be a positive integer, got {raw!r}") from None
    if k < 1:
        raise ValueError(f"{ENV_WORKERS} must be a positive integer, got {raw!r}")
    return k


def ordered_map(fn, items, workers=None):
    """[fn(x) for x in items], optionally spread over processes."""
    items = list(items)
    k = worker_count() if workers is None else int(workers)
    if k <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(k, len(items))) as ex:
        return list(ex.map(fn, items))
