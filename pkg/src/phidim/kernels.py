"""Backend selection for the hot kernels.

The compiled extension is used when it imports; setting PHIDIM_PURE_PYTHON=1
forces the numpy fallback.  ``use_backend`` switches at runtime, which the
tests and the benchmark rely on.
"""

import os

import numpy as np

from phidim import _pykernels

try:
    if os.environ.get("PHIDIM_PURE_PYTHON"):
        raise ImportError("fallback requested")
    from phidim import _ckernels
except ImportError:
    _ckernels = None

_NAMES = ("mix64", "child_keys", "uniforms", "lifted_counts", "hull_max_slopes")
_active = _ckernels if _ckernels is not None else _pykernels


def available_backends():
    return ["python"] + (["cython"] if _ckernels is not None else [])


def backend():
    return "cython" if _active is _ckernels and _ckernels is not None else "python"


def use_backend(name):
    global _active
    if name == "cython":
        if _ckernels is None:
            raise ImportError("compiled kernels are not built")
        _active = _ckernels
    elif name == "python":
        _active = _pykernels
    else:
        raise ValueError(f"unknown backend {name!r}")


def mix64(z):
    return _active.mix64(z)


def child_keys(parent_keys, counts):
    return _active.child_keys(parent_keys, counts)


def uniforms(keys):
    return _active.uniforms(keys)


def hull_max_slopes(x, y, qx, qy, lo):
    return _active.hull_max_slopes(x, y, qx, qy, lo)


def seed_key(seed, salt=0):
    """Root key for a 64-bit seed."""
    z = np.array([int(seed) & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    return mix64(z ^ np.uint64(int(salt) & 0xFFFFFFFFFFFFFFFF))[0]


def successor_table(points, span, max_count):
    """Jump tables for the greedy sweep with intervals of length ``span``.

    Row 0 maps i to the first point strictly beyond points[i] + span; row k
    is the 2**k-fold composition.  ``max_count`` bounds the counts that will
    be queried and fixes the number of rows.
    """
    p = np.asarray(points, dtype=np.float64)
    n = len(p)
    reach = p + span * (1 + 1e-12)
    nxt = np.searchsorted(p, reach, side="right").astype(np.int64)
    levels = max(1, int(max(1, max_count)).bit_length())
    up = np.empty((levels, n + 1), dtype=np.int64)
    up[0, :n] = nxt
    up[0, n] = n
    for k in range(1, levels):
        up[k] = up[k - 1][up[k - 1]]
    return up


def window_counts(points, span, starts, ends):
    """Greedy cover counts of points[starts[q]:ends[q]] by intervals of length ``span``."""
    starts = np.asarray(starts, dtype=np.int64)
    ends = np.asarray(ends, dtype=np.int64)
    if starts.size == 0:
        return np.zeros(0, dtype=np.int64)
    p = np.asarray(points, dtype=np.float64)
    nonempty = ends > starts
    if not np.any(nonempty):
        return np.zeros(starts.shape, dtype=np.int64)
    s, e = starts[nonempty], ends[nonempty]
    extent = np.max(p[e - 1] - p[s])
    bound = min(int(np.max(e - s)), int(extent / span) + 2)
    up = successor_table(p, span, bound)
    return _active.lifted_counts(up, starts, ends)
