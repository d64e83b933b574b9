"""Covering numbers of finite set approximations and the profile estimators.

Three set representations are supported: sorted point sets on the line,
nested grids of occupied cells in R^d, and symbolic trees.  The profiles
replace the limsup over R -> 0 by a sup over the last part of a scale grid;
every row of the profile is kept so convergence can be inspected.

Conventions.  On point sets, N_r counts closed intervals of length 2r (balls
of radius r) and the window around a center x is [x - R, x + R].
``box_profile`` counts intervals of length R, i.e. a mesh of side R.  On grids
and trees the scales are the level sizes, so the realised gap log(R/r) is
recorded in the ``gap`` column and the local value is log(count)/gap.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from phidim import kernels
from phidim.config import pmap
from phidim.dimfun import DimFn, ScaleGrid, tail_slice
from phidim.errors import DepthError, ResolutionError, SpecError

__all__ = [
    "PointSet1D",
    "GridSetD",
    "SymbolicTree",
    "DimProfile",
    "count_cover_1d",
    "count_cells",
    "phi_profile",
    "upper_phi_profile",
    "box_profile",
]

_REL = 1e-12


@dataclass(frozen=True)
class PointSet1D:
    points: np.ndarray
    delta: float = 0.0

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.float64).ravel()
        if p.size == 0:
            raise SpecError("point set is empty")
        if p.size > 1 and np.any(np.diff(p) <= 0):
            raise SpecError("points must be sorted and distinct")
        if not self.delta >= 0:
            raise SpecError("resolution must be nonnegative")
        object.__setattr__(self, "points", p)

    def __len__(self):
        return len(self.points)

    @property
    def diameter(self):
        return float(self.points[-1] - self.points[0])


@dataclass
class GridSetD:
    """Occupied cells per level; level k cells have side exp(-L[k]).

    ``levels[k]`` is an int64 array of shape (count, d) holding base-``base``
    cell coordinates, sorted by their linear key.  Level 0 is the unit cell.
    """

    d: int
    base: int
    L: np.ndarray
    levels: list
    _keys: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.d < 1:
            raise SpecError("grid dimension must be at least 1")
        if self.base < 2:
            raise SpecError("grid base must be at least 2")
        self.L = np.asarray(self.L, dtype=np.float64)
        if len(self.L) != len(self.levels):
            raise SpecError("one scale per level is required")
        if (self.depth * self.d) * math.log2(self.base) > 62:
            raise SpecError("grid too deep for 64-bit cell keys")
        levels, keys = [], []
        for k, codes in enumerate(self.levels):
            codes = np.asarray(codes, dtype=np.int64).reshape(-1, self.d)
            key = self.encode(codes, k)
            if key.size > 1 and not np.all(key[1:] > key[:-1]):
                order = np.argsort(key, kind="stable")
                codes, key = codes[order], key[order]
            levels.append(codes)
            keys.append(key)
        self.levels = levels
        self._keys = keys

    @property
    def depth(self):
        return len(self.levels) - 1

    def encode(self, codes, k):
        side = self.base**k
        key = np.zeros(len(codes), dtype=np.int64)
        for a in range(self.d - 1, -1, -1):
            key = key * side + codes[:, a]
        return key

    def check_nested(self):
        for k in range(1, self.depth + 1):
            parents = self.encode(self.levels[k] // self.base, k - 1)
            if not np.all(np.isin(parents, self._keys[k - 1])):
                return False
        return True

    def descendant_counts(self, k, k2, ball=False):
        """Occupied level-k2 cells inside each level-k cell (plus neighbours in ball mode)."""
        if not 0 <= k <= k2 <= self.depth:
            raise DepthError(f"levels {k}..{k2} outside stored depth {self.depth}")
        anchors = self._keys[k]
        parent = self.encode(self.levels[k2] // (self.base ** (k2 - k)), k)
        counts = np.bincount(np.searchsorted(anchors, parent), minlength=len(anchors))
        counts = counts[: len(anchors)].astype(np.int64)
        if not ball:
            return counts
        total = np.zeros_like(counts)
        side = self.base**k
        codes = self.levels[k]
        for off in np.ndindex(*([3] * self.d)):
            shift = np.array(off, dtype=np.int64) - 1
            nb = codes + shift
            valid = np.all((nb >= 0) & (nb < side), axis=1)
            keys = self.encode(nb[valid], k)
            pos = np.searchsorted(anchors, keys)
            pos = np.minimum(pos, len(anchors) - 1)
            hit = anchors[pos] == keys
            add = np.zeros_like(counts)
            add[np.nonzero(valid)[0][hit]] = counts[pos[hit]]
            total += add
        return total

    def level_for_scale(self, L, upper=False):
        """Deepest level with side >= exp(-L), or shallowest with side <= exp(-L)."""
        tol = _REL * max(1.0, abs(L))
        if upper:
            idx = int(np.searchsorted(self.L, L - tol, side="left"))
            return idx if idx <= self.depth else None
        idx = int(np.searchsorted(self.L, L + tol, side="right")) - 1
        return idx if idx >= 0 else None


@dataclass
class SymbolicTree:
    """Rooted tree stored by levels; ``counts[k][i]`` children of node i at level k.

    Children of consecutive nodes are stored consecutively at the next level.
    Level k carries the metric scale base**(-k).
    """

    counts: list
    base: float = math.e

    def __post_init__(self):
        self.counts = [np.asarray(c, dtype=np.int64) for c in self.counts]
        size = 1
        for k, c in enumerate(self.counts):
            if len(c) != size:
                raise SpecError(f"level {k} has {len(c)} child counts for {size} nodes")
            if np.any(c < 0):
                raise SpecError("child counts must be nonnegative")
            size = int(c.sum())
        if not self.base > 1:
            raise SpecError("tree metric base must exceed 1")

    @property
    def depth(self):
        return len(self.counts)

    def level_sizes(self):
        sizes = [1]
        for c in self.counts:
            sizes.append(int(c.sum()))
        return np.array(sizes, dtype=np.int64)

    def aggregate(self, k, k2, weights=None):
        """Per level-k node, the sum of ``weights`` over its level-k2 descendants."""
        if not 0 <= k <= k2 <= self.depth:
            raise DepthError(f"levels {k}..{k2} outside stored depth {self.depth}")
        if weights is None:
            agg = np.ones(self.level_sizes()[k2], dtype=np.int64)
        else:
            agg = np.asarray(weights, dtype=np.int64)
        for lvl in range(k2 - 1, k - 1, -1):
            c = self.counts[lvl]
            cs = np.concatenate(([0], np.cumsum(agg)))
            off = np.concatenate(([0], np.cumsum(c)))
            agg = cs[off[1:]] - cs[off[:-1]]
        return agg

    @classmethod
    def full(cls, branching, depth, base=math.e):
        return cls([np.full(branching**k, branching) for k in range(depth)], base)


@dataclass
class DimProfile:
    scale_index: np.ndarray
    R: np.ndarray
    phi_R: np.ndarray
    gap: np.ndarray
    count: np.ndarray
    local: np.ndarray
    tail: float = 0.5
    flags: tuple = ()

    @classmethod
    def from_rows(cls, rows, tail=0.5, flags=()):
        rows = [r for r in rows if r is not None]
        cols = list(zip(*rows)) if rows else [()] * 5
        j, R, phi, gap, count = (np.asarray(c) for c in cols)
        count = count.astype(np.int64)
        gap = gap.astype(np.float64)
        with np.errstate(divide="ignore", invalid="ignore"):
            local = np.where(count > 0, np.log(np.maximum(count, 1)) / gap, 0.0)
        return cls(j.astype(np.int64), R.astype(float), phi.astype(float), gap, count, local, tail, tuple(flags))

    def __len__(self):
        return len(self.local)

    def tail_values(self):
        if len(self) == 0:
            return self.local
        return self.local[tail_slice(len(self), self.tail)]

    @property
    def sup(self):
        t = self.tail_values()
        return float(t.max()) if t.size else float("nan")

    @property
    def summary(self):
        if len(self) == 0:
            return {"rows": 0, "sup": None, "argmax_index": None, "argmax_R": None, "flags": list(self.flags)}
        sl = tail_slice(len(self), self.tail)
        t = self.local[sl]
        i = sl.start + int(np.argmax(t))
        return {
            "rows": len(self),
            "tail": self.tail,
            "sup": float(t.max()),
            "argmax_index": int(self.scale_index[i]),
            "argmax_R": float(self.R[i]),
            "flags": list(self.flags),
        }

    def to_csv(self, footer=False):
        buf = io.StringIO()
        buf.write("scale_index,R,phi_R,gap_exponent,count,local_dim\n")
        for i in range(len(self)):
            buf.write(
                f"{int(self.scale_index[i])},{self.R[i]:.12g},{self.phi_R[i]:.12g},"
                f"{self.gap[i]:.12g},{int(self.count[i])},{self.local[i]:.12g}\n"
            )
        if footer:
            buf.write("# " + json.dumps(_round_floats(self.summary), sort_keys=True) + "\n")
        return buf.getvalue()


def _round_floats(obj):
    if isinstance(obj, float):
        return float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_round_floats(v) for v in obj]
    return obj


def _check_resolution(ps: PointSet1D, r):
    if r < ps.delta * (1 - 1e-9):
        raise ResolutionError(f"scale {r:.6g} is below the trusted resolution {ps.delta:.6g}")


def count_cover_1d(points: PointSet1D, window, r) -> int:
    """Fewest closed intervals of length 2r covering the points in [a, b]."""
    if not r > 0:
        raise SpecError("covering radius must be positive")
    _check_resolution(points, r)
    a, b = window
    if a > b:
        raise SpecError("window must satisfy a <= b")
    p = points.points
    cur = int(np.searchsorted(p, a, side="left"))
    end = int(np.searchsorted(p, b, side="right"))
    span = 2 * r * (1 + _REL)
    n = 0
    while cur < end:
        n += 1
        cur = int(np.searchsorted(p, p[cur] + span, side="right"))
    return n


def count_cells(gs: GridSetD, anchor_level, anchor_code, level, ball=False) -> int:
    """Occupied level-``level`` cells inside the anchor cell (and its neighbours in ball mode)."""
    if not 0 <= anchor_level <= level <= gs.depth:
        raise DepthError(f"levels {anchor_level}..{level} outside stored depth {gs.depth}")
    code = np.asarray(anchor_code, dtype=np.int64).reshape(1, gs.d)
    key = gs.encode(code, anchor_level)[0]
    keys = gs._keys[anchor_level]
    pos = int(np.searchsorted(keys, key))
    if pos >= len(keys) or keys[pos] != key:
        raise SpecError("anchor cell is not occupied")
    return int(gs.descendant_counts(anchor_level, level, ball=ball)[pos])


def _point_counts(ps: PointSet1D, R, r):
    """Max over centers of N_r(B(x, R) cap F)."""
    p = ps.points
    w = R * (1 + _REL)
    starts = np.searchsorted(p, p - w, side="left")
    ends = np.searchsorted(p, p + w, side="right")
    return int(kernels.window_counts(p, 2 * r, starts, ends).max())


def _phi_rows(phi, grid):
    ok = phi.in_domain(grid.L)
    L = grid.L[ok]
    vals = phi.at_log(L) if L.size else np.zeros(0)
    return list(zip(grid.j[ok].tolist(), L.tolist(), np.atleast_1d(vals).tolist()))


def phi_profile(F, phi: DimFn, grid: ScaleGrid, tail=0.5, ball=True) -> DimProfile:
    """Local values log N_{R^{1+phi(R)}}(B(x,R) cap F) / (phi(R) log(1/R)), max over centers."""

    def row(item):
        j, L, ph = item
        gap = ph * L
        if isinstance(F, PointSet1D):
            r = math.exp(-(L + gap))
            if r < F.delta * (1 - 1e-9):
                return None
            return (j, math.exp(-L), ph, gap, _point_counts(F, math.exp(-L), r))
        if isinstance(F, GridSetD):
            k = F.level_for_scale(L)
            k2 = F.level_for_scale(L + gap, upper=True)
            if k is None or k2 is None or k2 <= k:
                return None
            cnt = int(F.descendant_counts(k, k2, ball=ball).max())
            return (j, math.exp(-L), ph, float(F.L[k2] - F.L[k]), cnt)
        if isinstance(F, SymbolicTree):
            lb = math.log(F.base)
            k = int(round(L / lb))
            delta = int(round(gap / lb))
            if delta < 1 or k + delta > F.depth or k < 0:
                return None
            cnt = int(F.aggregate(k, k + delta).max())
            return (j, math.exp(-L), ph, delta * lb, cnt)
        raise SpecError(f"unsupported set type {type(F).__name__}")

    rows = [r for r in pmap(row, _phi_rows(phi, grid)) if r is not None]
    if not rows:
        raise ResolutionError("no grid scale is admissible for this set")
    return DimProfile.from_rows(rows, tail)


def upper_phi_profile(F, phi: DimFn, grid: ScaleGrid, tail=0.5, ball=True) -> DimProfile:
    """As ``phi_profile`` but with a sup over every available r <= R^{1+phi(R)}."""

    def best(cands):
        top = None
        for gap, cnt in cands:
            if gap <= 0:
                continue
            v = math.log(cnt) / gap if cnt > 0 else 0.0
            if top is None or v > top[0]:
                top = (v, gap, cnt)
        return top

    def row(item):
        j, L, ph = item
        gap0 = ph * L
        if isinstance(F, PointSet1D):
            r0 = math.exp(-(L + gap0))
            if r0 < F.delta * (1 - 1e-9):
                return None
            R = math.exp(-L)
            scales = [r0]
            i = int(math.floor((L + gap0) / math.log(grid.base))) + 1
            while True:
                r = grid.base ** (-i)
                if r < F.delta * (1 - 1e-9) or r <= 0:
                    break
                scales.append(r)
                i += 1
            top = best((math.log(R / r), _point_counts(F, R, r)) for r in scales)
        elif isinstance(F, GridSetD):
            k = F.level_for_scale(L)
            k2 = F.level_for_scale(L + gap0, upper=True)
            if k is None or k2 is None or k2 <= k:
                return None
            top = best(
                (float(F.L[kk] - F.L[k]), int(F.descendant_counts(k, kk, ball=ball).max()))
                for kk in range(k2, F.depth + 1)
            )
        elif isinstance(F, SymbolicTree):
            lb = math.log(F.base)
            k = int(round(L / lb))
            d0 = int(round(gap0 / lb))
            if d0 < 1 or k + d0 > F.depth:
                return None
            top = best((dd * lb, int(F.aggregate(k, k + dd).max())) for dd in range(d0, F.depth - k + 1))
        else:
            raise SpecError(f"unsupported set type {type(F).__name__}")
        if top is None:
            return None
        return (j, math.exp(-L), ph, top[1], top[2])

    rows = [r for r in pmap(row, _phi_rows(phi, grid)) if r is not None]
    if not rows:
        raise ResolutionError("no grid scale is admissible for this set")
    return DimProfile.from_rows(rows, tail)


def box_profile(F, grid: ScaleGrid, tail=0.5) -> DimProfile:
    """log N_R(F) / log(1/R), with N_R the number of mesh cells of side R met by F."""

    def row(item):
        j, L = item
        R = math.exp(-L)
        if isinstance(F, PointSet1D):
            if R / 2 < F.delta * (1 - 1e-9):
                return None
            return (j, R, float("nan"), L, count_cover_1d(F, (F.points[0], F.points[-1]), R / 2))
        if isinstance(F, GridSetD):
            k = F.level_for_scale(L, upper=True)
            if k is None:
                return None
            return (j, R, float("nan"), float(F.L[k]), len(F.levels[k]))
        if isinstance(F, SymbolicTree):
            lb = math.log(F.base)
            k = int(round(L / lb))
            if k > F.depth or k < 1:
                return None
            return (j, R, float("nan"), k * lb, int(F.level_sizes()[k]))
        raise SpecError(f"unsupported set type {type(F).__name__}")

    rows = [r for r in pmap(row, zip(grid.j.tolist(), grid.L.tolist())) if r is not None]
    if not rows:
        raise ResolutionError("no grid scale is admissible for this set")
    return DimProfile.from_rows(rows, tail)
