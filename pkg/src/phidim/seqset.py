"""Sets {f(n) : n >= 1} with 0 for decreasing f with decreasing gaps.

f and f' are evaluated through log f and log(-f'), so points far below the
float range in x still have usable gap information.  A window [0, R] is
covered by intervals of length r: those between consecutive points with gap
above r cover one point each, and below the crossover x* = (f')^{-1}(-r) the
interval [0, f(x*)] is covered wholesale.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from phidim import kernels
from phidim.cover import DimProfile, PointSet1D, count_cover_1d
from phidim.dimfun import DimFn, ScaleGrid
from phidim.errors import NumericError, ResolutionError, SpecError

__all__ = [
    "SeqSpec",
    "ExpPower",
    "ExpLogPower",
    "Tabulated",
    "from_json",
    "validate_regular_gaps",
    "build_points",
    "seq_dim_formula",
    "seq_direct_profile",
]


class SeqSpec:
    """Base: subclasses give log f, log(-f') and the inverse of f."""

    x0 = 1.0

    def log_f(self, x):
        raise NotImplementedError

    def log_neg_fprime(self, x):
        raise NotImplementedError

    def inv_log_f(self, logR):
        """x with log f(x) = logR."""
        return _bisect_decreasing(self.log_f, logR, self.x0)

    def f(self, x):
        return np.exp(self.log_f(x))

    def inv_neg_fprime_log(self, logy):
        """x with log(-f'(x)) = logy, by bisection in x."""
        return _bisect_decreasing(self.log_neg_fprime, logy, self.x0)

    def to_json(self):
        raise NotImplementedError


def _bisect_decreasing(fn, target, x0, rtol=1e-12):
    lo = x0
    if fn(lo) < target:
        raise NumericError(f"target {target:.6g} lies above the value at x0={x0:.6g}")
    hi = max(2 * lo, lo + 1)
    for _ in range(2000):
        if fn(hi) <= target:
            break
        lo, hi = hi, 2 * hi
    else:
        raise NumericError("bisection bracket could not be found")
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if fn(mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class ExpPower(SeqSpec):
    """f(x) = exp(-x^a), 0 < a < 1."""

    a: float

    def __post_init__(self):
        if not 0 < self.a < 1:
            raise SpecError("ExpPower exponent must lie in (0, 1)")

    def log_f(self, x):
        return -np.power(x, self.a)

    def log_neg_fprime(self, x):
        return math.log(self.a) + (self.a - 1) * np.log(x) - np.power(x, self.a)

    def inv_log_f(self, logR):
        return (-logR) ** (1 / self.a)

    def to_json(self):
        return {"kind": "exp_power", "a": self.a}


@dataclass(frozen=True)
class ExpLogPower(SeqSpec):
    """f(x) = exp(-(log x)^b), b > 1."""

    b: float

    def __post_init__(self):
        if not self.b > 1:
            raise SpecError("ExpLogPower exponent must exceed 1")
        object.__setattr__(self, "x0", math.e * 2)

    def log_f(self, x):
        return -np.power(np.log(x), self.b)

    def log_neg_fprime(self, x):
        lx = np.log(x)
        return math.log(self.b) + (self.b - 1) * np.log(lx) - lx - np.power(lx, self.b)

    def inv_log_f(self, logR):
        return math.exp((-logR) ** (1 / self.b))

    def to_json(self):
        return {"kind": "exp_log_power", "b": self.b}


class Tabulated(SeqSpec):
    """f(1), ..., f(K) given as values; f' by centered differences on the log scale."""

    def __init__(self, values):
        v = np.asarray(values, dtype=np.float64)
        if v.ndim != 1 or v.size < 4:
            raise SpecError("a tabulated sequence needs at least 4 values")
        if np.any(v <= 0) or np.any(np.diff(v) >= 0):
            raise SpecError("tabulated values must be positive and strictly decreasing")
        self.values = v
        self.x = np.arange(1, v.size + 1, dtype=np.float64)
        self.lv = np.log(v)
        d = np.empty_like(v)
        d[1:-1] = (v[2:] - v[:-2]) / 2
        d[0] = v[1] - v[0]
        d[-1] = v[-1] - v[-2]
        self.lfp = np.log(-d)
        self.x0 = 1.0

    @property
    def x_max(self):
        return float(self.x[-1])

    def log_f(self, x):
        return np.interp(x, self.x, self.lv)

    def log_neg_fprime(self, x):
        return np.interp(x, self.x, self.lfp)

    def inv_log_f(self, logR):
        if logR < self.lv[-1]:
            raise NumericError("scale below the tabulated range")
        return float(np.interp(-logR, -self.lv, self.x))

    def inv_neg_fprime_log(self, logy):
        if logy < self.lfp.min():
            raise NumericError("gap below the tabulated range")
        return _bisect_decreasing(self.log_neg_fprime, logy, 1.0)

    def to_json(self):
        return {"kind": "table", "values": self.values.tolist()}


def from_json(obj) -> SeqSpec:
    if isinstance(obj, str):
        obj = json.loads(obj)
    kind = obj.get("kind")
    if kind == "exp_power":
        return ExpPower(float(obj["a"]))
    if kind == "exp_log_power":
        return ExpLogPower(float(obj["b"]))
    if kind == "table":
        return Tabulated(obj["values"])
    raise SpecError(f"unknown sequence kind {kind!r}")


@dataclass
class GapsReport:
    decreasing: bool
    fprime_increasing: bool
    ratio_increasing: bool
    ratio_limit: float
    gap_ratio_limit: float
    tol: float

    @property
    def ratio_to_one(self):
        return abs(self.ratio_limit - 1) <= self.tol

    @property
    def ok(self):
        return self.decreasing and self.fprime_increasing and self.ratio_increasing and self.ratio_to_one


def validate_regular_gaps(spec: SeqSpec, x_lo: float, x_hi: float, samples: int = 400, tol: float = 0.05) -> GapsReport:
    """Sample the regular-gaps conditions on a log-spaced range of x.

    Also reports (f(n) - f(n+1)) / (-f'(n)) at the top of the range, which tends to 1 for regular gaps.
    """
    if isinstance(spec, Tabulated):
        # x + 1 must stay off the one-sided difference at the table end
        x_hi = min(x_hi, spec.x_max - 2)
        x = np.unique(np.round(np.geomspace(max(x_lo, 2), x_hi, samples)))
    else:
        x = np.unique(np.geomspace(max(x_lo, spec.x0), x_hi, samples))
    lf = np.asarray(spec.log_f(x))
    lfp = np.asarray(spec.log_neg_fprime(x))
    lfp1 = np.asarray(spec.log_neg_fprime(x + 1))
    ratio = np.exp(lfp1 - lfp)
    rtol = 1e-12
    decreasing = bool(np.all(np.diff(lf) < 0))
    fprime_inc = bool(np.all(np.diff(lfp) < 0))
    ratio_inc = bool(np.all(np.diff(ratio) >= -rtol))
    n = np.floor(x[-1])
    gap = spec.log_f(n) + math.log(-math.expm1(float(spec.log_f(n + 1) - spec.log_f(n))))
    gap_ratio = math.exp(float(gap - spec.log_neg_fprime(n)))
    return GapsReport(decreasing, fprime_inc, ratio_inc, float(ratio[-1]), gap_ratio, tol)


def build_points(spec: SeqSpec, n_max: int) -> PointSet1D:
    """{0} together with f(1), ..., f(n_max); resolution is the last gap."""
    if n_max < 2:
        raise SpecError("n_max must be at least 2")
    n = np.arange(1, n_max + 1, dtype=np.float64)
    lf = np.asarray(spec.log_f(n), dtype=np.float64)
    if lf[-1] < -700:
        warnings.warn("f(n_max) underflows: the tail of the sequence is capped", stacklevel=2)
    vals = np.exp(lf)
    vals = vals[vals > 0]
    pts = np.concatenate(([0.0], vals[::-1]))
    pts = np.unique(pts)
    delta = float(pts[2] - pts[1]) if len(pts) > 2 else 0.0
    return PointSet1D(pts, delta)


@dataclass
class SeqFormula:
    R: np.ndarray
    values: np.ndarray
    crossover: np.ndarray
    fires: bool
    tail: float

    @property
    def tail_values(self):
        k = max(1, int(math.ceil(len(self.values) * self.tail)))
        return self.values[-k:]

    @property
    def sup(self):
        return 1.0 if self.fires else float(self.tail_values.max())


def _grid_rows(phi, grid):
    L = grid.L
    ok = phi.in_domain(L)
    return L[ok], grid.R[ok], grid.j[ok]


def seq_dim_formula(spec: SeqSpec, phi: DimFn, grid: ScaleGrid, tail: float = 0.5) -> SeqFormula:
    """Closed-form values log(f(x*)/r + x* - f^{-1}(R)) / (phi(R) log(1/R)) per grid scale.

    r = R^{1+phi(R)} and x* = (f')^{-1}(-r).  When the gap at x = f^{-1}(R)
    is already at most r for some grid scale, the whole window is covered
    at scale r and the value is 1.
    """
    L, R, _ = _grid_rows(phi, grid)
    if L.size == 0:
        raise ResolutionError("no grid scale lies in the range of the dimension function")
    ph = np.atleast_1d(phi.at_log(L)).astype(np.float64)
    log_r = -(1 + ph) * L
    fires = False
    vals = np.empty(len(L))
    xs = np.empty(len(L))
    for i in range(len(L)):
        xR = spec.inv_log_f(-L[i])
        if log_r[i] >= float(spec.log_neg_fprime(xR)):
            fires = True
        xstar = spec.inv_neg_fprime_log(log_r[i])
        xs[i] = xstar
        if xstar <= xR:
            # every gap in [0, R] is below r
            count = math.exp(-L[i] - log_r[i])
        else:
            count = math.exp(float(spec.log_f(xstar)) - log_r[i]) + (xstar - xR)
        vals[i] = math.log(max(count, 1.0)) / (ph[i] * L[i])
    return SeqFormula(R, vals, xs, fires, tail)


@dataclass
class SeqProfile:
    anchored: DimProfile
    sweep: DimProfile | None

    @property
    def sup(self):
        return self.anchored.sup


def seq_direct_profile(points: PointSet1D, phi: DimFn, grid: ScaleGrid, tail: float = 0.5, sweep: bool = True) -> SeqProfile:
    """Covering counts of [0, R] by intervals of length r = R^{1+phi(R)}.

    With ``sweep`` the same count is taken over the windows [p, p + R] for
    every point p, as a check that the window at 0 dominates.
    """
    L, R, j = _grid_rows(phi, grid)
    if L.size == 0:
        raise ResolutionError("no grid scale lies in the range of the dimension function")
    ph = np.atleast_1d(phi.at_log(L)).astype(np.float64)
    p = points.points
    rows, srows = [], []
    for i in range(len(L)):
        r = math.exp(-(1 + ph[i]) * L[i])
        if r / 2 < points.delta:
            continue
        c = count_cover_1d(points, (0.0, R[i]), r / 2)
        rows.append((int(j[i]), float(R[i]), float(ph[i]), float(ph[i] * L[i]), max(c, 1)))
        if sweep:
            starts = np.arange(len(p))
            ends = np.searchsorted(p, p + R[i] * (1 + 1e-12), side="right")
            best = int(kernels.window_counts(p, r * (1 + 1e-12), starts, ends).max())
            srows.append((int(j[i]), float(R[i]), float(ph[i]), float(ph[i] * L[i]), max(best, 1)))
    if not rows:
        raise ResolutionError("every grid scale is below the point-set resolution")
    anchored = DimProfile.from_rows(rows, tail)
    swept = DimProfile.from_rows(srows, tail) if sweep else None
    return SeqProfile(anchored, swept)
