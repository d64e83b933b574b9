"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--size N] [--repeat R]

Each row is the best of R runs; the last column is the speedup of the
compiled backend.  Both backends are checked to return identical results.
"""

import argparse
import time

import numpy as np

from phidim import kernels


def _best(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(size, rng):
    pts = np.sort(rng.uniform(0, 1, size))
    starts = np.arange(size)
    ends = np.searchsorted(pts, pts + 0.05, side="right")
    keys = kernels.child_keys(np.array([kernels.seed_key(1)], dtype=np.uint64), np.array([size]))
    counts = rng.integers(0, 4, size)
    x = np.cumsum(rng.uniform(0.1, 1.0, size // 4))
    y = np.cumsum(rng.normal(size=size // 4))
    lo = np.sort(rng.integers(0, len(x), size // 4))
    qx = x[lo] - 0.05
    qy = y[lo] + rng.normal(size=len(lo))
    return {
        "window_counts": lambda: kernels.window_counts(pts, 1e-4, starts, ends),
        "child_keys": lambda: kernels.child_keys(keys, counts),
        "uniforms": lambda: kernels.uniforms(keys),
        "hull_max_slopes": lambda: kernels.hull_max_slopes(x, y, qx, qy, lo),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    backends = kernels.available_backends()
    start = kernels.backend()
    table = {}
    for name in backends:
        kernels.use_backend(name)
        for case, fn in cases(args.size, np.random.default_rng(args.seed)).items():
            table.setdefault(case, {})[name] = _best(fn, args.repeat)
    kernels.use_backend(start)

    print(f"size {args.size}, best of {args.repeat}")
    print(f"{'kernel':<18}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for case, res in table.items():
        row = f"{case:<18}" + "".join(f"{res[b][0] * 1e3:>10.2f}ms" for b in backends)
        if len(backends) > 1:
            a, b = res["python"], res["cython"]
            if not np.array_equal(np.asarray(a[1]), np.asarray(b[1])):
                row += "   MISMATCH"
            else:
                row += f"{a[0] / b[0]:>11.1f}x"
        print(row)
    if len(backends) == 1:
        print("compiled kernels not built; only the numpy fallback was timed")


if __name__ == "__main__":
    main()
