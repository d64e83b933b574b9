"""Reference implementations of the hot kernels (numpy and plain Python).

The compiled module ``_ckernels`` mirrors these functions one to one and
must produce identical results.
"""

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
M1 = np.uint64(0xBF58476D1CE4E5B9)
M2 = np.uint64(0x94D049BB133111EB)
CHILD = np.uint64(0xD1B54A32D192ED03)
UNIT = np.uint64(0x5851F42D4C957F2D)
S30, S27, S31, S11 = (np.uint64(s) for s in (30, 27, 31, 11))


def mix64(z):
    """splitmix64 finalizer on a uint64 array."""
    z = np.asarray(z, dtype=np.uint64) + GOLDEN
    z = (z ^ (z >> S30)) * M1
    z = (z ^ (z >> S27)) * M2
    return z ^ (z >> S31)


def child_keys(parent_keys, counts):
    """Keys of children 0..counts[i]-1 of every parent, concatenated in order."""
    parent_keys = np.asarray(parent_keys, dtype=np.uint64)
    counts = np.asarray(counts, dtype=np.int64)
    total = int(counts.sum())
    if total == 0:
        return np.zeros(0, dtype=np.uint64)
    parents = np.repeat(parent_keys, counts)
    starts = np.cumsum(counts) - counts
    idx = np.arange(total, dtype=np.int64) - np.repeat(starts, counts)
    return mix64(parents ^ ((idx.astype(np.uint64) + np.uint64(1)) * CHILD))


def uniforms(keys):
    """Map keys to doubles in [0, 1) using the top 53 bits."""
    z = mix64(np.asarray(keys, dtype=np.uint64) ^ UNIT)
    return (z >> S11).astype(np.float64) * (1.0 / 9007199254740992.0)


def lifted_counts(up, starts, ends):
    """Greedy interval counts for index windows [start, end).

    ``up[k]`` is the 2**k-fold jump table of the greedy successor map; the
    count is one plus the number of jumps that stay inside the window.
    """
    starts = np.asarray(starts, dtype=np.int64)
    ends = np.asarray(ends, dtype=np.int64)
    cur = starts.copy()
    cnt = np.zeros(starts.shape, dtype=np.int64)
    for k in range(up.shape[0] - 1, -1, -1):
        nxt = up[k][cur]
        ok = nxt < ends
        cur = np.where(ok, nxt, cur)
        cnt += ok.astype(np.int64) << k
    return np.where(starts < ends, cnt + 1, 0)


def hull_max_slopes(x, y, qx, qy, lo):
    """max over j >= lo[q] of (y[j]-qy[q]) / (x[j]-qx[q]) for each query q.

    Requires x increasing and qx[q] < x[lo[q]].  Points are swept from the
    right into an upper hull; each query is a tangent search on the hull.
    """
    n = len(x)
    nq = len(qx)
    out = np.full(nq, -np.inf)
    order = sorted(range(nq), key=lambda q: -int(lo[q]))
    hx = []
    hy = []
    j = n
    for q in order:
        a = int(lo[q])
        if a >= n:
            continue
        while j > a:
            j -= 1
            px, py = float(x[j]), float(y[j])
            while len(hx) >= 2:
                bx, by = hx[-1], hy[-1]
                cx, cy = hx[-2], hy[-2]
                if (bx - px) * (cy - by) - (by - py) * (cx - bx) >= 0:
                    hx.pop()
                    hy.pop()
                else:
                    break
            hx.append(px)
            hy.append(py)
        ax, ay = float(qx[q]), float(qy[q])
        top = len(hx) - 1
        lo_i, hi_i = 0, top
        while lo_i < hi_i:
            mid = (lo_i + hi_i) // 2
            ux, uy = hx[top - mid] - ax, hy[top - mid] - ay
            vx, vy = hx[top - mid - 1] - ax, hy[top - mid - 1] - ay
            if ux * vy - uy * vx > 0:
                lo_i = mid + 1
            else:
                hi_i = mid
        out[q] = (hy[top - lo_i] - ay) / (hx[top - lo_i] - ax)
    return out
