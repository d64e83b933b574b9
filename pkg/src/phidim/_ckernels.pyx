# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the kernels in ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t M1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t M2 = 0x94D049BB133111EBULL
cdef uint64_t CHILD = 0xD1B54A32D192ED03ULL
cdef uint64_t UNIT = 0x5851F42D4C957F2DULL


cdef inline uint64_t _mix(uint64_t z) nogil:
    z = z + GOLDEN
    z = (z ^ (z >> 30)) * M1
    z = (z ^ (z >> 27)) * M2
    return z ^ (z >> 31)


def mix64(z):
    cdef uint64_t[::1] src = np.ascontiguousarray(z, dtype=np.uint64).ravel()
    out = np.empty(src.shape[0], dtype=np.uint64)
    cdef uint64_t[::1] dst = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(src.shape[0]):
            dst[i] = _mix(src[i])
    return out.reshape(np.shape(z))


def child_keys(parent_keys, counts):
    cdef uint64_t[::1] keys = np.ascontiguousarray(parent_keys, dtype=np.uint64)
    cdef int64_t[::1] cnt = np.ascontiguousarray(counts, dtype=np.int64)
    cdef Py_ssize_t total = int(np.asarray(cnt).sum())
    out = np.empty(total, dtype=np.uint64)
    cdef uint64_t[::1] dst = out
    cdef Py_ssize_t i, pos = 0
    cdef int64_t c
    with nogil:
        for i in range(keys.shape[0]):
            for c in range(cnt[i]):
                dst[pos] = _mix(keys[i] ^ ((<uint64_t>(c + 1)) * CHILD))
                pos += 1
    return out


def uniforms(keys):
    cdef uint64_t[::1] src = np.ascontiguousarray(keys, dtype=np.uint64).ravel()
    out = np.empty(src.shape[0], dtype=np.float64)
    cdef double[::1] dst = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(src.shape[0]):
            dst[i] = <double>(_mix(src[i] ^ UNIT) >> 11) * (1.0 / 9007199254740992.0)
    return out.reshape(np.shape(keys))


def lifted_counts(up, starts, ends):
    cdef int64_t[:, ::1] tab = np.ascontiguousarray(up, dtype=np.int64)
    cdef int64_t[::1] s = np.ascontiguousarray(starts, dtype=np.int64).ravel()
    cdef int64_t[::1] e = np.ascontiguousarray(ends, dtype=np.int64).ravel()
    out = np.zeros(s.shape[0], dtype=np.int64)
    cdef int64_t[::1] dst = out
    cdef Py_ssize_t q, k, levels = tab.shape[0]
    cdef int64_t cur, nxt, cnt
    with nogil:
        for q in range(s.shape[0]):
            if s[q] >= e[q]:
                continue
            cur = s[q]
            cnt = 0
            for k in range(levels - 1, -1, -1):
                nxt = tab[k, cur]
                if nxt < e[q]:
                    cur = nxt
                    cnt += (<int64_t>1) << k
            dst[q] = cnt + 1
    return out


def hull_max_slopes(x, y, qx, qy, lo):
    cdef double[::1] xs = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] ys = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] ax = np.ascontiguousarray(qx, dtype=np.float64)
    cdef double[::1] ay = np.ascontiguousarray(qy, dtype=np.float64)
    lo_arr = np.ascontiguousarray(lo, dtype=np.int64)
    cdef int64_t[::1] a = lo_arr
    cdef int64_t[::1] order = np.argsort(-lo_arr, kind="stable").astype(np.int64)
    cdef Py_ssize_t n = xs.shape[0], nq = ax.shape[0]
    out = np.full(nq, -np.inf)
    cdef double[::1] dst = out
    hxa = np.empty(max(n, 1), dtype=np.float64)
    hya = np.empty(max(n, 1), dtype=np.float64)
    cdef double[::1] hx = hxa
    cdef double[::1] hy = hya
    cdef Py_ssize_t size = 0, j = n, t, q, top, lo_i, hi_i, mid
    cdef int64_t start
    cdef double px, py, bx, by, cx, cy, ux, uy, vx, vy, qx0, qy0
    with nogil:
        for t in range(nq):
            q = order[t]
            start = a[q]
            if start >= n:
                continue
            while j > start:
                j -= 1
                px = xs[j]
                py = ys[j]
                while size >= 2:
                    bx = hx[size - 1]
                    by = hy[size - 1]
                    cx = hx[size - 2]
                    cy = hy[size - 2]
                    if (bx - px) * (cy - by) - (by - py) * (cx - bx) >= 0:
                        size -= 1
                    else:
                        break
                hx[size] = px
                hy[size] = py
                size += 1
            qx0 = ax[q]
            qy0 = ay[q]
            top = size - 1
            lo_i = 0
            hi_i = top
            while lo_i < hi_i:
                mid = (lo_i + hi_i) // 2
                ux = hx[top - mid] - qx0
                uy = hy[top - mid] - qy0
                vx = hx[top - mid - 1] - qx0
                vy = hy[top - mid - 1] - qy0
                if ux * vy - uy * vx > 0:
                    lo_i = mid + 1
                else:
                    hi_i = mid
            dst[q] = (hy[top - lo_i] - qy0) / (hx[top - lo_i] - qx0)
    return out
