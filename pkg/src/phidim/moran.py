"""Homogeneous Moran sets in [0,1]^d.

Level n of the construction consists of 2^{dn} cubes of side rho_n, where
rho_n = r_1 * ... * r_n and every r_n <= 1/2.  Ratios are stored as
x_n = -log2(r_n) >= 1, which keeps arbitrarily small ratios representable.
All dimension values here are computed from the ratio data alone.

When every x_n is an integer (dyadic ratios) the cumulative sums
lg_n = -log2(rho_n) are kept exact; beyond 2**50 they are held as Python
integers.
"""

from __future__ import annotations

import bisect
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from phidim import kernels
from phidim.cover import GridSetD, PointSet1D, count_cover_1d
from phidim.dimfun import DimFn, Constant, LogLogRatio, PiecewiseLogLinear, ScaleGrid, scale, tail_slice
from phidim.errors import (
    CapacityError,
    ConstructionError,
    DepthError,
    InconsistencyError,
    PreconditionError,
    ResolutionError,
    SpecError,
)

__all__ = [
    "MoranSpec",
    "MoranDim",
    "exact_phi_dim",
    "exact_upper_phi_dim",
    "box_value",
    "assouad_value",
    "spectrum_value",
    "materialize",
    "corners",
    "build_gap_moran",
    "build_profile_moran",
    "build_assouad_recover_dimfn",
    "build_interpolating_dimfn",
]

LN2 = math.log(2.0)
_EXACT_LIMIT = 2.0**50
_MAX_MATERIALIZE = 2**24


def _check_x(x):
    if not (x >= 1 - 1e-12) or not math.isfinite(x):
        raise SpecError(f"contraction ratio 2^-{x} is not in (0, 1/2]")
    return max(float(x), 1.0)


@dataclass(frozen=True)
class MoranSpec:
    """Ratio data: an explicit prefix, optionally continued by a rule.

    Rules are ``{"kind": "periodic", "period": [ratios]}`` or
    ``{"kind": "blocks", "blocks": [{"ratio": r, "start": s, "mul": a, "add": b}, ...]}``;
    in the latter the k-th use of block entry e has length round(s*a^k + b*k).
    """

    d: int
    prefix_log2: tuple = ()
    rule: dict | None = None
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.d, int) or self.d < 1:
            raise SpecError("ambient dimension must be a positive integer")
        object.__setattr__(self, "prefix_log2", tuple(_check_x(x) for x in self.prefix_log2))
        if self.rule is not None:
            self._validate_rule(self.rule)
        if not self.prefix_log2 and self.rule is None:
            raise SpecError("Moran spec needs a prefix or a rule")

    @staticmethod
    def _validate_rule(rule):
        kind = rule.get("kind")
        if kind == "periodic":
            period = rule.get("period") or []
            if not period:
                raise SpecError("periodic rule needs a nonempty period")
            for r in period:
                _check_x(-math.log2(r))
        elif kind == "blocks":
            blocks = rule.get("blocks") or []
            if not blocks:
                raise SpecError("block rule needs at least one block")
            for b in blocks:
                _check_x(-math.log2(b["ratio"]))
                if b.get("start", 1) <= 0 or b.get("mul", 1) < 1 or b.get("add", 0) < 0:
                    raise SpecError("block lengths must be positive and nondecreasing")
        else:
            raise SpecError(f"unknown Moran rule kind {kind!r}")

    @classmethod
    def from_ratios(cls, d, ratios, rule=None):
        return cls(d, tuple(-math.log2(r) for r in ratios), rule)

    @property
    def finite(self):
        return self.rule is None

    @property
    def available_depth(self):
        return len(self.prefix_log2) if self.finite else math.inf

    def _rule_stream(self):
        rule = self.rule
        if rule["kind"] == "periodic":
            xs = [-math.log2(r) for r in rule["period"]]
            yield from itertools.cycle(xs)
        blocks = rule["blocks"]
        for b in itertools.count():
            e = blocks[b % len(blocks)]
            k = b // len(blocks)
            length = max(1, int(round(e.get("start", 1) * e.get("mul", 1) ** k + e.get("add", 0) * k)))
            x = -math.log2(e["ratio"])
            for _ in range(length):
                yield x

    def neg_log2(self, n):
        """x_1..x_n as a float array."""
        if n > self.available_depth:
            raise DepthError(f"{n} ratios requested, only {len(self.prefix_log2)} available")
        cached = self._cache.get("x")
        if cached is not None and len(cached) >= n:
            return cached[:n]
        out = list(self.prefix_log2[:n])
        if len(out) < n:
            out.extend(itertools.islice(self._rule_stream(), n - len(out)))
        arr = np.array(out, dtype=np.float64)
        self._cache["x"] = arr
        return arr

    def ratios(self, n):
        return np.exp2(-self.neg_log2(n))

    def lg(self, n):
        """lg_0..lg_n with lg_k = -log2(rho_k)."""
        return _Ladder(self.neg_log2(n))

    def to_json(self):
        xs = self.prefix_log2
        obj = {"d": self.d}
        if all(x < 1000 for x in xs):
            obj["prefix"] = [2.0**-x for x in xs]
        else:
            obj["prefix_log2"] = list(xs)
        if self.rule is not None:
            obj["rule"] = self.rule
        return obj

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        try:
            d = int(obj["d"])
        except (KeyError, TypeError, ValueError):
            raise SpecError("Moran spec needs an integer 'd'") from None
        if "prefix_log2" in obj:
            xs = tuple(float(x) for x in obj["prefix_log2"])
        else:
            prefix = obj.get("prefix", [])
            for r in prefix:
                if not 0 < r <= 0.5:
                    raise SpecError(f"contraction ratio {r} is not in (0, 1/2]")
            xs = tuple(-math.log2(r) for r in prefix)
        return cls(d, xs, obj.get("rule"))


class _Ladder:
    """Cumulative sums lg_0 = 0 < lg_1 < ... with exact arithmetic where possible."""

    def __init__(self, xs):
        xs = np.asarray(xs, dtype=np.float64)
        self.integral = bool(np.all(xs == np.floor(xs)))
        total = float(np.sum(xs)) if xs.size else 0.0
        self.exact_ints = self.integral and total >= _EXACT_LIMIT
        if self.exact_ints:
            acc = [0]
            for x in xs:
                acc.append(acc[-1] + int(x))
            self.values = acc
            self.floats = np.array([float(v) for v in acc])
        else:
            self.values = np.concatenate(([0.0], np.cumsum(xs)))
            self.floats = self.values

    def __len__(self):
        return len(self.floats)

    @property
    def top(self):
        return self.values[-1]

    def m_index(self, n, gaps):
        """For each row n, max{m : lg_m - lg_n < gap}."""
        n = np.asarray(n, dtype=np.int64)
        if not self.exact_ints:
            thr = self.floats[n] + gaps
            return np.searchsorted(self.floats, thr, side="left").astype(np.int64) - 1
        out = np.empty(len(n), dtype=np.int64)
        vals = self.values
        for i, (k, g) in enumerate(zip(n.tolist(), np.asarray(gaps).tolist())):
            thr = vals[k] + math.ceil(g) - 1
            out[i] = bisect.bisect_right(vals, thr) - 1
        return out

    def diff(self, m, n):
        if self.exact_ints:
            return float(self.values[m] - self.values[n])
        return float(self.floats[m] - self.floats[n])


@dataclass
class MoranDim:
    n: np.ndarray
    m: np.ndarray
    values: np.ndarray
    tail: float = 0.5

    @property
    def tail_values(self):
        return self.values[tail_slice(len(self.values), self.tail)]

    @property
    def sup(self):
        return float(self.tail_values.max())

    @property
    def argmax(self):
        sl = tail_slice(len(self.values), self.tail)
        return int(self.n[sl.start + int(np.argmax(self.values[sl]))])

    def rows(self):
        return list(zip(self.n.tolist(), self.m.tolist(), self.values.tolist()))


def _rows_in_domain(phi, ladder, n_max, n_min=1):
    if n_max >= len(ladder):
        raise DepthError(f"rows up to {n_max} need {n_max} ratios")
    n = np.arange(max(1, n_min), n_max + 1, dtype=np.int64)
    L = ladder.floats[n] * LN2
    ok = phi.in_domain(L)
    n, L = n[ok], L[ok]
    if n.size == 0:
        raise DepthError("no row lies in the represented range of the dimension function")
    return n, L


def _ladder_for(spec, phi, n_max, factor=1.0):
    """A ladder long enough to locate m_n for rows up to n_max under phi/factor."""
    if spec.finite:
        return spec.lg(len(spec.prefix_log2))
    need = max(2 * n_max, 16)
    while True:
        lad = spec.lg(need)
        if n_max < len(lad) - 1:
            L = lad.floats[n_max] * LN2
            if phi.in_domain(L):
                gap = phi.at_log(L) / factor * lad.floats[n_max]
                if lad.floats[-1] > lad.floats[n_max] + gap + 1:
                    return lad
            elif lad.floats[-1] > 4 * lad.floats[n_max]:
                return lad
        need *= 2
        if need > 1 << 26:
            raise DepthError("ratio depth needed for m_n exceeds the working limit")


def exact_phi_dim(spec: MoranSpec, phi: DimFn, n_max: int, tail=0.5, n_min=1) -> MoranDim:
    """Rows (n, m_n, (m_n - n) d log 2 / (phi(rho_n) log(1/rho_n))).

    m_n = max{m >= n : rho_m > rho_n^{1+phi(rho_n)}}.  Rows where rho_n lies
    outside the range of ``phi`` are omitted.
    """
    lad = _ladder_for(spec, phi, n_max)
    n, L = _rows_in_domain(phi, lad, n_max, n_min)
    ph = np.atleast_1d(phi.at_log(L))
    lg_n = lad.floats[n]
    gaps = ph * lg_n
    m = lad.m_index(n, gaps)
    if np.any(m >= len(lad) - 1):
        raise DepthError("m_n reaches the end of the available ratio sequence")
    m = np.maximum(m, n)
    values = (m - n) * spec.d / gaps
    return MoranDim(n, m, values, tail)


def exact_upper_phi_dim(spec: MoranSpec, phi: DimFn, n_max: int, depth=None, alpha_floor=0.05, tail=0.5) -> MoranDim:
    """Rows: the phi value, or sup_{m > m_n} (m - n) d log 2 / log(rho_n / rho_m) up to a depth bound.

    The bound is ``depth`` when given; otherwise the whole prefix of a finite
    spec, or for rule-generated specs the m_n of the last row under
    phi/alpha_floor.  The ``m`` column holds m_n.
    """
    base = exact_phi_dim(spec, phi, n_max, tail)
    if depth is None:
        if spec.finite:
            depth = len(spec.prefix_log2)
        else:
            wide = scale(phi, alpha_floor)
            depth = int(exact_phi_dim(spec, wide, n_max, tail).m.max())
    lad = _ladder_for(spec, phi, n_max) if spec.finite else spec.lg(max(depth, int(base.m.max())) + 1)
    depth = min(depth, len(lad) - 1)
    n = base.n
    # rho_{m_n} is still above R^{1+phi}; the pinned value covers it
    lo = base.m + 1
    keep = lo <= depth
    vals = np.zeros(len(n))
    if np.any(keep):
        vals[keep] = _max_slopes(lad, n[keep], lo[keep], depth) * spec.d
    vals = np.maximum(vals, base.values)
    return MoranDim(n, base.m, vals, tail)


def _max_slopes(lad, n, lo, depth):
    """max over m in [lo, depth] of (m - n) / (lg_m - lg_n)."""
    idx = np.arange(depth + 1, dtype=np.float64)
    if not lad.exact_ints and lad.floats[depth] * depth < _EXACT_LIMIT:
        x = lad.floats[: depth + 1]
        return kernels.hull_max_slopes(x, idx, x[n], n.astype(np.float64), lo)
    # exact hull sweep on integer or large coordinates
    xs = lad.values[: depth + 1] if lad.exact_ints else lad.floats[: depth + 1].tolist()
    out = np.empty(len(n))
    order = sorted(range(len(n)), key=lambda q: -int(lo[q]))
    hx, hy = [], []
    j = depth + 1
    for q in order:
        a = int(lo[q])
        while j > a:
            j -= 1
            px, py = xs[j], j
            while len(hx) >= 2 and (hx[-1] - px) * (hy[-2] - hy[-1]) - (hy[-1] - py) * (hx[-2] - hx[-1]) >= 0:
                hx.pop()
                hy.pop()
            hx.append(px)
            hy.append(py)
        ax, ay = xs[int(n[q])], int(n[q])
        top = len(hx) - 1
        lo_i, hi_i = 0, top
        while lo_i < hi_i:
            mid = (lo_i + hi_i) // 2
            u = (hx[top - mid] - ax, hy[top - mid] - ay)
            v = (hx[top - mid - 1] - ax, hy[top - mid - 1] - ay)
            if u[0] * v[1] - u[1] * v[0] > 0:
                lo_i = mid + 1
            else:
                hi_i = mid
        out[q] = (hy[top - lo_i] - ay) / float(hx[top - lo_i] - ax)
    return out


def box_value(spec: MoranSpec, n_max: int, tail=0.5) -> float:
    """Tail sup of n d / lg_n, the upper box dimension read off the ratio data."""
    lad = spec.lg(n_max)
    n = np.arange(1, n_max + 1)
    v = spec.d * n / lad.floats[n]
    return float(v[tail_slice(len(v), tail)].max())


def spectrum_value(spec: MoranSpec, theta: float, n_max: int, tail=0.5) -> float:
    """Assouad spectrum at theta: the phi value for constant phi = 1/theta - 1."""
    return exact_phi_dim(spec, Constant(1 / theta - 1), n_max, tail).sup


def assouad_value(spec: MoranSpec, n_max: int, tail=0.5) -> float:
    """Tail sup over pairs of scales whose gap grows without bound, slowly."""
    return exact_upper_phi_dim(spec, LogLogRatio(), n_max, tail=tail).sup


def materialize(spec: MoranSpec, depth: int) -> GridSetD:
    """Level-k cubes for k <= depth, coded by their binary address digits."""
    if depth < 0:
        raise SpecError("depth must be nonnegative")
    if depth > spec.available_depth:
        raise DepthError(f"depth {depth} exceeds the {len(spec.prefix_log2)} available ratios")
    if 2 ** (spec.d * depth) > _MAX_MATERIALIZE:
        raise CapacityError(f"2^{spec.d * depth} cells exceed the materialization budget")
    lad = spec.lg(depth)
    levels = []
    for k in range(depth + 1):
        axis = np.arange(2**k, dtype=np.int64)
        grids = np.meshgrid(*([axis] * spec.d), indexing="ij")
        # last axis varies slowest, matching the cell key order
        levels.append(np.stack([g.ravel() for g in grids[::-1]], axis=1))
    return GridSetD(spec.d, 2, lad.floats * LN2, levels)


def corners(spec: MoranSpec, level: int, codes) -> np.ndarray:
    """Lower corners of level cubes from their address codes under the maps S^n_i."""
    codes = np.asarray(codes, dtype=np.int64).reshape(-1, spec.d)
    r = spec.ratios(level)
    rho = np.concatenate(([1.0], np.cumprod(r)))
    pos = np.zeros(codes.shape, dtype=np.float64)
    for i in range(1, level + 1):
        digit = (codes >> (level - i)) & 1
        pos += digit * (1 - r[i - 1]) * rho[i - 1]
    return pos


@dataclass
class GapMoran:
    spec: MoranSpec
    ledger: list  # rows (n, lg(R_n), k_n)

    def ledger_csv(self):
        lines = ["n,log2_inv_R,k"]
        lines += [f"{n},{x:.12g},{k}" for n, x, k in self.ledger]
        return "\n".join(lines) + "\n"


def build_gap_moran(phi: DimFn, psi: DimFn, eps: float, n_scales: int, d: int = 1, min_depth: int = 0, start_lg=None) -> GapMoran:
    """Moran set whose covering numbers jump as fast as possible at sparse scales.

    Between consecutive witness scales R_n the ratios are 1/2 until just
    below R_n^{1+phi(R_n)}; a single closing ratio then lands on R_{n+1},
    chosen below min(R_n^{1+psi(R_n)}/4, R_n^n) and with
    phi(R_{n+1})/psi(R_{n+1}) < 1 - eps.
    """
    if not 0 < eps < 1:
        raise SpecError("eps must lie in (0, 1)")
    if n_scales < 1:
        raise SpecError("at least one witness scale is needed")

    def witness(x):
        L = x * LN2
        if not (phi.in_domain(L) and psi.in_domain(L)):
            return False
        return phi.at_log(L) / psi.at_log(L) < 1 - eps

    def search(x0):
        x = float(math.ceil(x0))
        for _ in range(4000):
            if witness(x):
                return x
            x = float(math.ceil(x * 1.05 + 1))
            if x > 1e300:
                break
        raise ConstructionError("no witness scale with phi/psi < 1 - eps was found")

    lo = start_lg if start_lg is not None else 1.0
    X = search(max(1.0, lo))
    xs = [X]
    ledger = [(1, X, 1)]
    n = 1
    while n < n_scales or len(xs) < min_depth + 1:
        L = X * LN2
        h = int(math.floor(phi.at_log(L) * X)) + 1
        xs.extend([1.0] * h)
        target = max(X + psi.at_log(L) * X + 2.0, n * X, X + h + 1.0) + 1.0
        if target > 1e300:
            raise ConstructionError("witness scales exceed the representable range")
        X_next = search(target)
        xs.append(X_next - (X + h))
        n += 1
        X = X_next
        ledger.append((n, X, len(xs)))
    return GapMoran(MoranSpec(d, tuple(xs)), ledger)


def _counter_for(F):
    if isinstance(F, PointSet1D):
        lo = max(2 * F.delta, 1e-300)

        def count(r):
            return count_cover_1d(F, (F.points[0], F.points[-1]), r / 2)

        return count, lo
    if callable(F):
        return F, 1e-300
    raise SpecError("profile source must be a PointSet1D or a callable r -> N_r(F)")


def build_profile_moran(F, d: int, max_levels: int = 60, r_min=None, rtol=1e-12):
    """Moran ratios from the cover profile of F (diameter 1).

    rho_n = inf{r in (0,1] : N_r(F) < 2^{(n+1)d}} with N_r counting cubes of
    side r, found by bisection in log r.  Returns (spec, rho) where rho[0] is
    the level-0 value.  Levels stop once the threshold exceeds what the
    finite data can certify.
    """
    count, lo = _counter_for(F)
    if r_min is not None:
        lo = max(lo, r_min)
    rho = []
    for n in range(max_levels + 1):
        T = 2 ** ((n + 1) * d)
        if count(lo) < T:
            break
        hi = 1.0
        if count(hi) >= T:
            raise InconsistencyError(f"N_1(F) >= {T}: F does not have diameter at most 1")
        a, b = math.log(lo), 0.0
        while b - a > rtol:
            mid = 0.5 * (a + b)
            if count(math.exp(mid)) < T:
                b = mid
            else:
                a = mid
        rho.append(math.exp(b))
    if len(rho) < 2:
        raise InconsistencyError("cover profile never reaches 2^{2d}: the set is degenerate")
    rho = np.array(rho)
    ratios = rho[1:] / rho[:-1]
    if np.any(ratios > 0.5 * (1 + 1e-9)):
        bad = int(np.argmax(ratios > 0.5 * (1 + 1e-9))) + 1
        raise InconsistencyError(f"ratio {ratios[bad - 1]:.6g} at level {bad} exceeds 1/2")
    spec = MoranSpec(d, tuple(-math.log2(min(r, 0.5)) for r in ratios))
    return spec, rho


def build_assouad_recover_dimfn(witnesses) -> DimFn:
    """Smallest dimension function through the witnesses phi(R_n) = theta_n.

    Between witnesses g = phi * log(1/R) stays constant until phi has dropped
    to the next theta, then phi stays constant.
    """
    w = [(float(R), float(t)) for R, t in witnesses]
    if not w:
        raise PreconditionError("at least one witness is required")
    for R, t in w:
        if not (0 < R < 1 and t > 0):
            raise PreconditionError("witnesses need R in (0,1) and theta > 0")
    if len(w) == 1:
        return Constant(w[0][1])
    L = [-math.log(R) for R, _ in w]
    th = [t for _, t in w]
    g = [t * l for t, l in zip(th, L)]
    for i in range(len(w) - 1):
        if not L[i + 1] > L[i]:
            raise PreconditionError("witness scales R_n must strictly decrease")
        if th[i + 1] > th[i]:
            raise PreconditionError("witness values theta_n must not increase")
        if not g[i + 1] > g[i]:
            raise PreconditionError("theta_n log(1/R_n) must strictly increase")
    knots = [(0.0, 0.0), (L[0], g[0])]
    for i in range(len(w) - 1):
        Lp = g[i] / th[i + 1]
        if Lp > knots[-1][0] and Lp < L[i + 1]:
            knots.append((Lp, g[i]))
        knots.append((L[i + 1], g[i + 1]))
    return PiecewiseLogLinear(tuple(knots))


@dataclass
class Interpolation:
    phi: DimFn
    case: str
    ledger: list = field(default_factory=list)
    post_value: float = float("nan")
    target: float = float("nan")
    box: float = float("nan")
    assouad: float = float("nan")
    exhausted: bool = False

    @property
    def post_ok(self):
        return abs(self.post_value - self.target) <= 0.1


def _moran_counts_index(lad, X):
    """n(R) = max{n : lg_n <= X} and m(r) = max{m : lg_m < X} for grid points X."""
    f = lad.floats
    n_of = np.searchsorted(f, X, side="right") - 1
    m_of = np.searchsorted(f, X, side="left") - 1
    return n_of, m_of


def build_interpolating_dimfn(spec: MoranSpec, alpha: float, grid: ScaleGrid, n_max: int | None = None, tail=0.5) -> Interpolation:
    """A dimension function phi with dim^phi of the Moran set close to alpha.

    alpha must lie strictly between the box value and the Assouad value of
    the set.  If some Assouad spectrum value reaches alpha, phi is the
    constant 1/theta - 1 for the least such theta.  When alpha equals the
    Assouad value the witness construction is used.  Otherwise phi is built
    by the alternating procedure on grid pairs, with
    omega(R, r) = d (m(r) - n(R)) / log2(R/r) from the Moran level counts.
    """
    lb = math.log2(grid.base)
    X = grid.j * lb
    if n_max is None:
        lad0 = spec.lg(max(64, int(X[-1]) + 2))
        n_max = int(np.searchsorted(lad0.floats, X[-1], side="right")) - 1
    n_max = max(n_max, 8)
    box = box_value(spec, n_max, tail)
    dim_a = assouad_value(spec, n_max, tail)
    res = Interpolation(Constant(1.0), "", target=alpha, box=box, assouad=dim_a)
    if not box < alpha <= dim_a + 1e-9:
        raise PreconditionError(f"alpha={alpha} must lie in (box={box:.6g}, Assouad={dim_a:.6g}]")

    def post(phi):
        return exact_phi_dim(spec, phi, n_max, tail).sup

    if abs(alpha - dim_a) <= 1e-9:
        res.phi = _assouad_witness_dimfn(spec, n_max, tail)
        res.case = "assouad"
        res.post_value = post(res.phi)
        return res

    th_hi = 0.995
    if spectrum_value(spec, th_hi, n_max, tail) >= alpha:
        a, b = 0.01, th_hi
        if spectrum_value(spec, a, n_max, tail) >= alpha:
            b = a
        for _ in range(40):
            mid = 0.5 * (a + b)
            if spectrum_value(spec, mid, n_max, tail) >= alpha:
                b = mid
            else:
                a = mid
        res.phi = Constant(1 / b - 1)
        res.case = "spectrum"
        res.ledger.append(("theta", b))
        res.post_value = post(res.phi)
        return res

    res.case = "alternating"
    lad = spec.lg(max(int(np.searchsorted(spec.lg(4 * n_max).floats, 2 * X[-1])), n_max) + 2)
    n_of, m_of = _moran_counts_index(lad, X)
    J = len(X)
    with np.errstate(divide="ignore", invalid="ignore"):
        diffX = X[None, :] - X[:, None]
        omega = spec.d * np.maximum(m_of[None, :] - n_of[:, None], 0) / diffX
    omega[np.tril_indices(J)] = -np.inf
    suf = np.maximum.accumulate(omega[:, ::-1], axis=1)[:, ::-1]
    suf = np.concatenate([suf, np.full((J, 1), -np.inf)], axis=1)

    def first_at_least(v):
        return np.minimum(np.searchsorted(X, v - 1e-9, side="left"), J)

    def region_R(theta):
        # per row a: sup of omega over y <= x^{1/theta}
        cols = first_at_least(X / theta)
        return suf[np.arange(J), cols]

    a_n, X_n, theta = 0, 0.0, 0.5
    knots = [(0.0, 0.0)]
    while True:
        rows = region_R(theta)
        suffix = np.maximum.accumulate(rows[::-1])[::-1]
        admissible = np.nonzero((suffix <= alpha) & (np.arange(J) > a_n) & (X > X_n))[0]
        if admissible.size == 0:
            res.exhausted = True
            break
        a_star = int(admissible[0])
        a_p = int(first_at_least(X[a_star] + 1.0))
        if a_p >= J:
            res.exhausted = True
            break
        Xp = float(X[a_p])
        c = 1 / theta - 1
        knots.append((Xp * LN2, c * Xp * LN2))
        G = Xp * c
        gap_rows = suf[np.arange(J), first_at_least(X + G)]
        a_next = None
        b2 = -np.inf
        for a in range(a_p, J):
            b2 = max(b2, gap_rows[a])
            cols = first_at_least(X[a:] * (1 + G / X[a]))
            b1 = float(np.max(suf[np.arange(a, J), cols])) if a < J else -np.inf
            if max(b1, b2) > alpha:
                break
            a_next = a
        res.ledger.append(("step", X_n, Xp, theta))
        if a_next is None or a_next >= J - 1:
            res.exhausted = True
            break
        X_next = float(X[a_next])
        theta = 1 / (1 + c * Xp / X_next)
        if X_next > Xp:
            knots.append((X_next * LN2, c * Xp * LN2))
        a_n, X_n = a_next, X_next
    if len(knots) < 2:
        raise ResolutionError("grid exhausted before the first alternation step")
    res.phi = PiecewiseLogLinear(tuple(knots))
    res.post_value = post(res.phi)
    return res


def _assouad_witness_dimfn(spec, n_max, tail):
    """Witnesses (rho_n, theta_n) along the rows attaining the Assouad value."""
    lad = spec.lg(4 * n_max) if not spec.finite else spec.lg(len(spec.prefix_log2))
    up = exact_upper_phi_dim(spec, LogLogRatio(), n_max, tail=tail)
    target = up.sup
    wit = []
    depth = len(lad) - 1
    for n, m0, v in up.rows():
        if v < target - 0.05:
            continue
        best, best_m = -1.0, None
        for m in range(max(m0, n + 1), min(depth, m0 + 4 * (m0 - n) + 8) + 1):
            s = (m - n) / lad.diff(m, n)
            if s > best:
                best, best_m = s, m
        if best_m is None:
            continue
        R_L = lad.floats[n] * LN2
        th = lad.diff(best_m, n) / lad.floats[n]
        if wit:
            pL, pt = wit[-1]
            if not (R_L > pL and th <= pt and th * R_L > pt * pL):
                continue
        wit.append((R_L, th))
    if not wit:
        raise ConstructionError("no witness rows attain the Assouad value")
    return build_assouad_recover_dimfn([(math.exp(-L), t) for L, t in wit])
