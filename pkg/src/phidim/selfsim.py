"""Equicontractive self-similar sets on the line with overlaps.

The explicit family uses the three maps x/m, (x+t)/m and (x+1)/m, where t
has base-m digits w_1 w_2 ... with w_k = 0^{n_k - 1} 1.  All points are
handled as integer numerators over a power of m, so coincidences between
cylinders are detected exactly at the truncation depth of t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from phidim.cover import PointSet1D
from phidim.errors import CapacityError, DomainError, SpecError

__all__ = [
    "TParams",
    "IFSSpec1D",
    "CylinderSet",
    "build_nk_sequence",
    "cylinder_points",
    "m_tilde",
    "m_tilde_series",
    "upper_bound_report",
    "microset_amplify",
    "microset_ledger",
    "max_gap_density",
    "microset_density_check",
    "threshold_constant",
]

POINT_BUDGET = 2**23


@dataclass
class TParams:
    m: int
    n: list  # n_1..n_K
    r: list  # r_1..r_K as Fractions

    @property
    def K(self):
        return len(self.n)

    @property
    def N(self):
        out, s = [], 0
        for v in self.n:
            s += v
            out.append(s)
        return out

    @property
    def eps(self):
        c = Fraction(self.m * self.m, self.m * self.m + 1)
        return [c**k for k in range(1, self.K + 1)]

    def digits(self, count):
        """First ``count`` base-m digits of t."""
        out = []
        for v in self.n:
            out.extend([0] * (v - 1) + [1])
            if len(out) >= count:
                break
        if len(out) < count:
            raise SpecError(f"t is only determined to {len(out)} digits by {self.K} blocks")
        return out[:count]

    def t_numerator(self, count):
        """Integer T with t truncated to ``count`` digits equal to T / m^count."""
        T = 0
        for d in self.digits(count):
            T = T * self.m + d
        return T

    def constraint_ok(self):
        """r_k/m <= m^{1 - n_{k+1}} <= r_k for every k, exactly."""
        m = self.m
        for k in range(self.K - 1):
            v = Fraction(m, m ** self.n[k + 1])
            if not (self.r[k] / m <= v <= self.r[k]):
                return False
        return True

    def bound_ok(self, eps=1.0):
        """-log r_k <= (2/eps)(2+eps)^{k-1} log m."""
        lm = math.log(self.m)
        return all(-_log_fraction(r) <= (2 / eps) * (2 + eps) ** k * lm + 1e-12 for k, r in enumerate(self.r))

    def to_json(self):
        return {"m": self.m, "n": list(self.n), "r": [f"{x.numerator}/{x.denominator}" for x in self.r]}


def _log_fraction(x: Fraction) -> float:
    return math.log(x.numerator) - math.log(x.denominator)


def build_nk_sequence(m: int, K: int) -> TParams:
    """n_1 = 1, r_1 = 1; n_{k+1} the least n with m/r_k <= m^n <= m^2/r_k; r_{k+1} = (1+1/m^2) r_k m^{-N_k}."""
    if not isinstance(m, int) or m < 3:
        raise DomainError("m must be an integer >= 3")
    if K < 1:
        raise DomainError("K must be at least 1")
    n, r = [1], [Fraction(1)]
    N = 1
    grow = Fraction(m * m + 1, m * m)
    while len(n) < K:
        lo = Fraction(m) / r[-1]
        e = 0
        pw = 1
        while pw < lo:
            pw *= m
            e += 1
        if pw > m * m / r[-1]:
            raise DomainError("no admissible block length: the constraint interval holds no power of m")
        n.append(e)
        r.append(grow * r[-1] / Fraction(m) ** N)
        N += e
    return TParams(m, n, r)


@dataclass(frozen=True)
class IFSSpec1D:
    """Maps x -> (x + a)/m for the translations a = num/den in ``shifts``.

    Translations are rationals with denominator m^t_digits.
    """

    m: int
    shifts: tuple  # integer numerators over m**t_digits
    t_digits: int = 0

    def __post_init__(self):
        if not isinstance(self.m, int) or self.m < 2:
            raise SpecError("contraction 1/m needs an integer m >= 2")
        if not self.shifts:
            raise SpecError("an IFS needs at least one map")

    @classmethod
    def explicit(cls, tp: TParams, t_digits: int):
        T = tp.t_numerator(t_digits)
        one = tp.m**t_digits
        return cls(tp.m, (0, T, one), t_digits)

    @classmethod
    def digits(cls, m, digit_set):
        return cls(m, tuple(int(d) for d in digit_set), 0)

    @property
    def diameter(self):
        """Diameter of the attractor: (max shift - min shift)/(m - 1)."""
        den = self.m**self.t_digits
        return (max(self.shifts) - min(self.shifts)) / den / (self.m - 1)


@dataclass
class CylinderSet:
    """Distinct values S_sigma(0) as numerators over m^(n + t_digits), with word multiplicities."""

    m: int
    level: int
    exp: int
    numerators: np.ndarray
    mult: np.ndarray
    words: int = field(default=0)

    @property
    def denominator(self):
        return self.m**self.exp

    def floats(self):
        if self.numerators.dtype == object:
            den = self.denominator
            return np.array([float(Fraction(int(v), den)) for v in self.numerators])
        return self.numerators.astype(np.float64) / float(self.denominator)

    def point_set(self) -> PointSet1D:
        x = self.floats()
        delta = float(Fraction(1, self.denominator)) if len(x) > 1 else 0.0
        return PointSet1D(x, delta)


def cylinder_points(spec: IFSSpec1D, level: int, budget: int = POINT_BUDGET) -> CylinderSet:
    """E_n = {S_sigma(0) : |sigma| = n}, deduplicated level by level with multiplicities."""
    if level < 0:
        raise SpecError("level must be nonnegative")
    m, T = spec.m, spec.t_digits
    exp = level + T
    big = m**exp >= 2**62
    dtype = object if big else np.int64
    nums = np.zeros(1, dtype=dtype)
    mult = np.ones(1, dtype=np.int64)
    shifts = [int(s) for s in spec.shifts]
    for i in range(1, level + 1):
        # S_a(x) = (x + a)/m; with x = X / m^{i-1+T}: new numerator over m^{i+T} is X + a m^{i-1}
        scale = m ** (i - 1)
        parts = [nums + s * scale for s in shifts]
        allx = np.concatenate(parts)
        allm = np.tile(mult, len(shifts))
        if len(allx) > budget:
            raise CapacityError(f"{len(allx)} cylinder points exceed the budget {budget}")
        if big:
            order = sorted(range(len(allx)), key=lambda j: allx[j])
            nums_l, mult_l = [], []
            for j in order:
                if nums_l and nums_l[-1] == allx[j]:
                    mult_l[-1] += int(allm[j])
                else:
                    nums_l.append(allx[j])
                    mult_l.append(int(allm[j]))
            nums = np.array(nums_l, dtype=object)
            mult = np.array(mult_l, dtype=np.int64)
        else:
            nums, inv = np.unique(allx, return_inverse=True)
            mult = np.bincount(inv.ravel(), weights=allm, minlength=len(nums)).astype(np.int64)
    return CylinderSet(m, level, exp, nums, mult, int(len(shifts) ** level))


def m_tilde(cyl: CylinderSet, window_constant: float = 1.0, diameter: float | None = None) -> int:
    """Max over centers x in E_n of the number of words sigma with |S_sigma(0) - x| <= (1 + c_w diam K) m^{-n}."""
    if diameter is None:
        diameter = 1.0 / (cyl.m - 1)
    width = (1 + window_constant * diameter) * Fraction(1, cyl.m**cyl.level)
    # width in numerator units, compared exactly
    w = width * cyl.denominator
    w_int = math.floor(w)
    x = cyl.numerators
    if x.dtype != object:
        lo = np.searchsorted(x, x - w_int, side="left")
        hi = np.searchsorted(x, x + w_int, side="right")
    else:
        xl = x.tolist()
        import bisect

        lo = np.array([bisect.bisect_left(xl, v - w_int) for v in xl])
        hi = np.array([bisect.bisect_right(xl, v + w_int) for v in xl])
    cs = np.concatenate(([0], np.cumsum(cyl.mult)))
    return int(np.max(cs[hi] - cs[lo]))


def m_tilde_series(spec: IFSSpec1D, levels, window_constant=1.0):
    out = []
    for n in levels:
        out.append(m_tilde(cylinder_points(spec, n), window_constant, spec.diameter))
    return out


@dataclass
class UpperBoundVerdict:
    ns: np.ndarray
    statistic: np.ndarray
    tail_max: float
    threshold: float

    @property
    def box_regime(self):
        return bool(self.tail_max < self.threshold)


def upper_bound_report(ns, values, phi, m: int, threshold=0.05, tail=0.5) -> UpperBoundVerdict:
    """log M_n / (n phi(m^-n)) over the series; positive verdict when the tail sits below ``threshold``.

    ``phi`` is a dimension-function descriptor, or any callable taking n.
    """
    ns = np.asarray(ns, dtype=np.int64)
    vals = np.asarray(values, dtype=np.float64)
    if ns.shape != vals.shape or ns.size == 0:
        raise SpecError("series needs matching, nonempty n and M values")
    if np.any(vals < 1):
        raise SpecError("M values must be at least 1")
    if hasattr(phi, "at_log"):
        ph = np.asarray(phi.at_log(ns * math.log(m)), dtype=np.float64)
    else:
        ph = np.array([float(phi(int(n))) for n in ns])
    stat = np.log(vals) / (ns * ph)
    k = max(1, int(math.ceil(len(stat) * tail)))
    return UpperBoundVerdict(ns, stat, float(stat[-k:].max()), threshold)


def microset_amplify(state, c, rho, n):
    """(r, eps) -> ((1+c) rho^n r, eps/(1+c)).  Exact for Fraction inputs."""
    r, eps = state
    if not 0 < c <= 1:
        raise DomainError("c must lie in (0, 1]")
    if not 0 < rho < 1:
        raise DomainError("rho must lie in (0, 1)")
    if n < 1:
        raise DomainError("n must be at least 1")
    return ((1 + c) * rho**n * r, eps / (1 + c))


def microset_ledger(tp: TParams):
    """(r_k, eps_k) from repeated amplification with c = 1/m^2, rho = 1/m and n = N_k."""
    m = tp.m
    c = Fraction(1, m * m)
    state = (Fraction(1), 1 / (1 + c))
    out = [state]
    for N in tp.N[: tp.K - 1]:
        state = microset_amplify(state, c, Fraction(1, m), N)
        out.append(state)
    return out


def max_gap_density(points, r: float):
    """Best window (P - x)/r over anchors x in P, measured on [0, 1].

    Returns (radius, gap, anchor index) for the anchor of least covering
    radius: radius is sup over y in [0,1] of the distance to the rescaled
    set (the set is radius-dense), gap the largest gap including the one
    before the right end.  0 always lies in the rescaled set.
    """
    x = np.asarray(points, dtype=np.float64)
    if x.size == 0:
        raise SpecError("empty point set")
    if r <= 0:
        raise DomainError("r must be positive")
    gaps = np.diff(x)
    table = [gaps]
    span = 1
    while 2 * span <= len(gaps):
        prev = table[-1]
        table.append(np.maximum(prev[:-span], prev[span:]))
        span *= 2
    i = np.arange(len(x))
    j = np.searchsorted(x, x + r * (1 + 1e-15), side="right") - 1
    end = r - (x[j] - x)
    inner = np.zeros(len(x))
    has = j > i
    if np.any(has):
        a, b = i[has], j[has]
        lvl = np.floor(np.log2(b - a)).astype(np.int64)
        vals = np.empty(len(a))
        for L in np.unique(lvl):
            sel = lvl == L
            row = table[L]
            vals[sel] = np.maximum(row[a[sel]], row[b[sel] - (1 << L)])
        inner[has] = vals
    radius = np.maximum(end, inner / 2)
    k = int(np.argmin(radius))
    return float(radius[k] / r), float(max(end[k], inner[k]) / r), k


@dataclass
class DensityCheck:
    k: int
    claimed: float
    measured: float
    gap: float
    slack: float
    depth: int

    @property
    def ok(self):
        return self.measured <= self.claimed + self.slack


def microset_density_check(tp: TParams, k: int, depth: int, t_digits: int | None = None) -> DensityCheck:
    """Covering radius of the best rescaled window (K - x)/r_k against eps_k = (1+1/m^2)^{-k}.

    K is replaced by the level-``depth`` endpoint set, which lies within
    m^{-depth} diam K of K; the rescaled resolution is reported as slack.
    """
    if not 1 <= k <= tp.K:
        raise DomainError(f"k must lie in [1, {tp.K}]")
    if t_digits is None:
        t_digits = min(depth + 4, sum(tp.n))
    spec = IFSSpec1D.explicit(tp, t_digits)
    pts = cylinder_points(spec, depth).floats()
    rk = float(tp.r[k - 1])
    diam = spec.diameter
    radius, gap, _ = max_gap_density(pts, rk)
    slack = (tp.m ** -depth * diam + tp.m ** -t_digits) / rk
    return DensityCheck(k, float(tp.eps[k - 1]), radius, gap, slack, depth)


def threshold_constant(m: int) -> float:
    """C_m = log m / log(1 + 1/m^2)."""
    if m < 3:
        raise DomainError("m must be at least 3")
    return math.log(m) / math.log1p(1 / (m * m))
