"""Process-wide settings: the worker thread cap."""

import os
from concurrent.futures import ThreadPoolExecutor

_threads = None


def set_threads(n):
    global _threads
    if n is not None and int(n) < 1:
        raise ValueError("thread count must be at least 1")
    _threads = None if n is None else int(n)


def threads():
    if _threads is not None:
        return _threads
    env = os.environ.get("PHIDIM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def pmap(fn, items):
    """Ordered map over ``items``, parallel when more than one thread is allowed."""
    items = list(items)
    n = threads()
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
