"""Mandelbrot percolation on [0,1]^d.

Each retained cube is split into n^d subcubes and each subcube is kept
independently with probability p.  Cells are keyed by their address, so a
conditioned sample (everything kept through level j0) shares its randomness
with the unconditioned one below level j0.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from phidim import kernels
from phidim.cover import DimProfile, SymbolicTree
from phidim.dimfun import DimFn
from phidim.errors import CapacityError, DomainError, ResolutionError, SpecError
from phidim.gw import OffspringDist

__all__ = ["PercSpec", "PercSample", "to_offspring", "sample", "perc_dim_formula", "perc_phi_profile", "render", "pgm_bytes", "write_pgm"]

CELL_CAP = 2**24


@dataclass(frozen=True)
class PercSpec:
    n: int
    d: int
    p: float
    condition_depth: int = 0

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 2:
            raise SpecError("subdivision n must be an integer >= 2")
        if not isinstance(self.d, int) or self.d < 1:
            raise SpecError("dimension d must be a positive integer")
        if not 0 < self.p <= 1:
            raise SpecError("retention probability must lie in (0, 1]")
        if self.condition_depth < 0:
            raise SpecError("conditioning depth must be nonnegative")

    @property
    def children(self):
        return self.n**self.d

    @property
    def mean(self):
        return self.p * self.children

    @property
    def supercritical(self):
        return self.mean > 1

    def to_json(self):
        obj = {"n": self.n, "d": self.d, "p": self.p}
        if self.condition_depth:
            obj["condition_depth"] = self.condition_depth
        return obj

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        try:
            return cls(int(obj["n"]), int(obj["d"]), float(obj["p"]), int(obj.get("condition_depth", 0) or 0))
        except KeyError as e:
            raise SpecError(f"percolation spec is missing {e.args[0]!r}") from None


def to_offspring(spec: PercSpec) -> OffspringDist:
    """Binomial(n^d, p) law of the number of retained subcubes."""
    N, p = spec.children, spec.p
    theta = [math.comb(N, j) * p**j * (1 - p) ** (N - j) for j in range(N + 1)]
    s = math.fsum(theta)
    return OffspringDist([t / s for t in theta])


@dataclass
class PercSample:
    spec: PercSpec
    seed: int
    depth: int
    codes: list  # codes[k]: (count, d) int64 array of per-axis cell indices at level k
    parents: list  # parents[k]: for level k >= 1, index of the parent cell at level k-1

    @property
    def level_sizes(self):
        return [len(c) for c in self.codes]

    @property
    def extinct(self):
        return len(self.codes[-1]) == 0

    def tree(self) -> SymbolicTree:
        counts = []
        for k in range(self.depth):
            counts.append(np.bincount(self.parents[k + 1], minlength=len(self.codes[k])).astype(np.int64))
        return SymbolicTree(counts, base=float(self.spec.n))

    def check_nested(self):
        n = self.spec.n
        for k in range(1, self.depth + 1):
            par = self.codes[k - 1][self.parents[k]]
            if not np.array_equal(par, self.codes[k] // n):
                return False
        return True


def sample(spec: PercSpec, depth: int, seed: int = 0, cap: int = CELL_CAP) -> PercSample:
    """Level-by-level retention keyed by (seed, cell address)."""
    if depth < 0:
        raise SpecError("depth must be nonnegative")
    expect = spec.mean**depth if spec.mean > 1 else 1
    forced = spec.children ** min(spec.condition_depth, depth)
    if expect > cap or forced > cap:
        raise CapacityError(f"expected cell count exceeds the cap {cap}")
    n, d, C = spec.n, spec.d, spec.children
    # subcell offsets in row-major digit order
    grid = np.stack(np.meshgrid(*([np.arange(n)] * d), indexing="ij"), axis=-1).reshape(-1, d)
    keys = np.array([kernels.seed_key(seed, 0x9E7C)], dtype=np.uint64)
    codes = [np.zeros((1, d), dtype=np.int64)]
    parents = [np.zeros(0, dtype=np.int64)]
    for k in range(1, depth + 1):
        cur = codes[-1]
        ckeys = kernels.child_keys(keys, np.full(len(cur), C, dtype=np.int64))
        if k <= spec.condition_depth or spec.p == 1:
            keep = np.ones(len(ckeys), dtype=bool)
        else:
            keep = kernels.uniforms(ckeys) < spec.p
        par = np.repeat(np.arange(len(cur)), C)[keep]
        sub = np.tile(grid, (len(cur), 1))[keep]
        new = cur[par] * n + sub
        if len(new) > cap:
            raise CapacityError(f"sample exceeds {cap} cells at level {k}")
        codes.append(new)
        parents.append(par)
        keys = ckeys[keep]
    return PercSample(spec, int(seed), depth, codes, parents)


def perc_dim_formula(spec: PercSpec, alpha: float) -> float:
    """alpha log(1/p) / (d log^2 n) + log(p n^d) / log n, clipped at d for alpha >= log n^d."""
    if alpha < 0:
        raise DomainError("alpha must be nonnegative")
    if not spec.supercritical:
        raise DomainError("formula needs p n^d > 1")
    ln = math.log(spec.n)
    if alpha >= spec.d * ln:
        return float(spec.d)
    return alpha * math.log(1 / spec.p) / (spec.d * ln * ln) + math.log(spec.mean) / ln


def perc_phi_profile(s: PercSample, phi: DimFn, tail=0.5) -> DimProfile:
    """Per level k (R = n^-k): max over surviving cells of log(#subcells Delta levels down) / (Delta log n)."""
    if s.extinct:
        return DimProfile.from_rows([], tail, ("extinct",))
    st = s.tree()
    ln = math.log(s.spec.n)
    alive = _survivors(st, s.depth)
    rows = []
    for k in range(1, s.depth + 1):
        L = k * ln
        if not phi.in_domain(L):
            continue
        gap = int(round(k * float(phi.at_log(L))))
        if gap < 1 or k + gap > s.depth:
            continue
        agg = st.aggregate(k, k + gap)[alive[k]]
        if agg.size == 0:
            continue
        rows.append((k, float(s.spec.n) ** -k, float(phi.at_log(L)), gap * ln, int(agg.max())))
    if not rows:
        raise ResolutionError("no level has 1 <= Delta(k) with k + Delta(k) within the sampled depth")
    return DimProfile.from_rows(rows, tail)


def _survivors(st, depth):
    sizes = st.level_sizes()
    alive = [None] * (depth + 1)
    alive[depth] = np.ones(sizes[depth], dtype=bool)
    for k in range(depth - 1, -1, -1):
        owner = np.repeat(np.arange(sizes[k]), st.counts[k])
        has = np.zeros(sizes[k], dtype=bool)
        has[owner[alive[k + 1]]] = True
        alive[k] = has
    return alive


def render(s: PercSample, level: int, pixel_scale: int = 1) -> np.ndarray:
    """uint8 raster, 0 (black) on retained level cells and 255 elsewhere."""
    if s.spec.d != 2:
        raise SpecError("rendering is only defined for d = 2")
    if not 0 <= level <= s.depth:
        raise SpecError(f"level {level} outside sampled depth {s.depth}")
    if pixel_scale < 1:
        raise SpecError("pixel scale must be at least 1")
    side = s.spec.n**level
    if (side * pixel_scale) ** 2 > CELL_CAP * 4:
        raise CapacityError("raster too large")
    img = np.full((side, side), 255, dtype=np.uint8)
    c = s.codes[level]
    if len(c):
        # row = y index from the top, column = x index
        img[side - 1 - c[:, 1], c[:, 0]] = 0
    if pixel_scale > 1:
        img = np.kron(img, np.ones((pixel_scale, pixel_scale), dtype=np.uint8))
    return img


def pgm_bytes(img: np.ndarray) -> bytes:
    h, w = img.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(img, dtype=np.uint8).tobytes()


def write_pgm(path, img: np.ndarray):
    with open(path, "wb") as fh:
        fh.write(pgm_bytes(img))
