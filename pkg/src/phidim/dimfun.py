"""Dimension functions: descriptors, validation, rescaling and envelopes.

A dimension function phi is described in terms of L = log(1/R).  Its gap
function g(L) = phi * L must be nondecreasing and unbounded, and phi itself
must be nonincreasing as R decreases (below a cutoff).  Every descriptor can
evaluate phi directly in the log domain, so scales far below the floating
point underflow threshold stay usable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from phidim.errors import DomainError, PreconditionError, SpecError

__all__ = [
    "DimFn",
    "Constant",
    "LogLogRatio",
    "PowerLog",
    "Scaled",
    "PiecewiseLogLinear",
    "ScaleGrid",
    "ValidationReport",
    "RatioProfile",
    "evaluate",
    "validate",
    "scale",
    "theta_alpha",
    "ratio_profile",
    "maximal_dimfn_below",
    "tail_slice",
    "from_json",
    "to_json",
    "load",
]

DEFAULT_WITNESS = 20.0
# log of the smallest positive normal double, rounded inward
LOG_TINY = 708.0


def tail_slice(n, tail=0.5):
    """Slice selecting the last ``tail`` fraction of ``n`` rows (at least one)."""
    if not 0 < tail <= 1:
        raise DomainError(f"tail fraction must lie in (0, 1], got {tail}")
    k = max(1, int(math.ceil(tail * n)))
    return slice(n - k, n)


class DimFn:
    """Base class; subclasses are frozen dataclasses."""

    kind = "abstract"

    # Lower end of the represented range in L = log(1/R).
    def domain_lo(self):
        return 0.0

    def domain_closed(self):
        return False

    # Condition (ii) holds for L >= cutoff_L().
    def cutoff_L(self):
        return self.domain_lo()

    def unbounded(self):
        """True when g(L) = phi*L diverges by construction of the descriptor."""
        raise NotImplementedError

    def _raw(self, L):
        raise NotImplementedError

    @property
    def R_max(self):
        return math.exp(-self.domain_lo())

    def in_domain(self, L):
        L = np.asarray(L, dtype=float)
        lo = self.domain_lo()
        if self.domain_closed():
            return L >= lo * (1 - 1e-15)
        return L > lo

    def at_log(self, L):
        """phi at R = exp(-L); accepts scalars or arrays."""
        arr = np.asarray(L, dtype=float)
        if not np.all(self.in_domain(arr)):
            bad = arr[~self.in_domain(arr)].ravel()[0] if arr.ndim else float(arr)
            raise DomainError(
                f"{self.kind}: log(1/R) = {bad:.6g} is outside the represented range "
                f"(log(1/R) > {self.domain_lo():.6g})"
            )
        out = self._raw(arr)
        if np.ndim(L) == 0:
            return float(out)
        return out

    def gap_at_log(self, L):
        """g(L) = phi(exp(-L)) * L."""
        return self.at_log(L) * np.asarray(L, dtype=float)

    def __call__(self, R):
        R_arr = np.asarray(R, dtype=float)
        if np.any((R_arr <= 0) | (R_arr >= 1)):
            raise DomainError(f"R must lie in (0, 1), got {R}")
        return self.at_log(-np.log(R_arr) if R_arr.ndim else -math.log(float(R_arr)))

    def to_json(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(DimFn):
    c: float
    kind = "constant"

    def __post_init__(self):
        if not (self.c > 0 and math.isfinite(self.c)):
            raise DomainError(f"constant dimension function needs c > 0, got {self.c}")

    def unbounded(self):
        return True

    def _raw(self, L):
        return np.full(np.shape(L), float(self.c))

    def to_json(self):
        return {"kind": "constant", "c": self.c}


@dataclass(frozen=True)
class LogLogRatio(DimFn):
    """psi(R) = log log(1/R) / log(1/R), defined for R < 1/e."""

    kind = "loglog"

    def domain_lo(self):
        return 1.0

    def cutoff_L(self):
        return math.e

    def unbounded(self):
        return True

    def _raw(self, L):
        return np.log(L) / L

    def to_json(self):
        return {"kind": "loglog"}


@dataclass(frozen=True)
class PowerLog(DimFn):
    """phi(R) = log(1/R)^(-t) with 0 < t < 1."""

    t: float
    kind = "powerlog"

    def __post_init__(self):
        if not 0 < self.t < 1:
            raise DomainError(f"powerlog exponent must lie in (0, 1), got {self.t}")

    def unbounded(self):
        return True

    def _raw(self, L):
        return np.power(L, -self.t)

    def to_json(self):
        return {"kind": "powerlog", "t": self.t}


@dataclass(frozen=True)
class Scaled(DimFn):
    """inner(R) / alpha."""

    alpha: float
    inner: DimFn
    kind = "scaled"

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise DomainError(f"scale factor must be positive, got {self.alpha}")

    def domain_lo(self):
        return self.inner.domain_lo()

    def domain_closed(self):
        return self.inner.domain_closed()

    def cutoff_L(self):
        return self.inner.cutoff_L()

    def unbounded(self):
        return self.inner.unbounded()

    def _raw(self, L):
        return self.inner._raw(L) / self.alpha

    def to_json(self):
        return {"kind": "scaled", "alpha": self.alpha, "inner": self.inner.to_json()}


@dataclass(frozen=True)
class PiecewiseLogLinear(DimFn):
    """g(L) = phi*L linear between knots (L_i, g_i), continued by the last slope.

    The first knot may sit at L = 0 (R = 1), in which case the represented
    range is all of (0, 1).
    """

    knots: tuple
    kind = "piecewise"
    _L: np.ndarray = field(init=False, repr=False, compare=False)
    _g: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        knots = tuple((float(a), float(b)) for a, b in self.knots)
        if len(knots) < 2:
            raise SpecError("piecewise dimension function needs at least two knots")
        L = np.array([k[0] for k in knots])
        g = np.array([k[1] for k in knots])
        if L[0] < 0 or np.any(np.diff(L) <= 0):
            raise SpecError("knot positions log(1/R) must be nonnegative and strictly increasing")
        if np.any(g[L > 0] <= 0) or np.any(g < 0):
            raise SpecError("knot values phi*log(1/R) must be positive")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "_L", L)
        object.__setattr__(self, "_g", g)

    def domain_lo(self):
        return float(self._L[0])

    def domain_closed(self):
        return self._L[0] > 0

    @property
    def final_slope(self):
        return float((self._g[-1] - self._g[-2]) / (self._L[-1] - self._L[-2]))

    def unbounded(self):
        return self.final_slope > 0

    def gap(self, L):
        L = np.asarray(L, dtype=float)
        inside = np.interp(L, self._L, self._g)
        beyond = self._g[-1] + self.final_slope * (L - self._L[-1])
        return np.where(L > self._L[-1], beyond, inside)

    def _raw(self, L):
        return self.gap(L) / L

    def to_json(self):
        return {"kind": "piecewise", "knots": [list(k) for k in self.knots]}


def evaluate(phi: DimFn, R):
    """phi(R), raising DomainError outside the represented range."""
    return phi(R)


def scale(phi: DimFn, alpha: float) -> DimFn:
    """The rescaled function R -> phi(R)/alpha.

    Nested rescalings are folded into one factor so that composing scalings
    is exact.
    """
    if not alpha > 0:
        raise DomainError(f"scale factor must be positive, got {alpha}")
    if isinstance(phi, Scaled):
        total = phi.alpha * alpha
        if total == 1.0:
            return phi.inner
        return Scaled(total, phi.inner)
    if alpha == 1.0:
        return phi
    return Scaled(float(alpha), phi)


def theta_alpha(theta: float, alpha: float) -> float:
    """Solve 1/theta_a - 1 = (1/alpha)(1/theta - 1)."""
    if not 0 < theta < 1:
        raise DomainError(f"theta must lie in (0, 1), got {theta}")
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    if alpha == 1:
        return theta
    return alpha * theta / (alpha * theta + (1 - theta))


@dataclass(frozen=True)
class ScaleGrid:
    """Scales R_j = base**(-j) for j_min <= j <= j_max."""

    base: float
    j_min: int
    j_max: int

    def __post_init__(self):
        if not self.base > 1:
            raise DomainError(f"grid base must exceed 1, got {self.base}")
        if self.j_min > self.j_max:
            raise DomainError("empty scale grid")
        if self.j_min < 0:
            raise DomainError("grid indices must be nonnegative")
        if self.j_max * math.log(self.base) > LOG_TINY:
            raise DomainError("grid reaches below the floating point underflow threshold")

    @property
    def j(self):
        return np.arange(self.j_min, self.j_max + 1)

    @property
    def L(self):
        return self.j * math.log(self.base)

    @property
    def R(self):
        return np.exp(-self.L)

    def __len__(self):
        return self.j_max - self.j_min + 1

    def to_json(self):
        return {"base": self.base, "j_min": self.j_min, "j_max": self.j_max}


@dataclass(frozen=True)
class ValidationReport:
    cond_i_ok: bool
    cond_ii_ok: bool
    first_violation: tuple | None
    g_max: float
    witness: float

    @property
    def ok(self):
        return self.cond_i_ok and self.cond_ii_ok


def _first_increase(values, rtol=1e-13):
    """Index j where values[j] > values[j-1] beyond rounding noise, else None."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return None
    tol = rtol * np.maximum(np.abs(v[1:]), np.abs(v[:-1]))
    bad = np.nonzero(v[1:] - v[:-1] > tol)[0]
    return int(bad[0]) + 1 if bad.size else None


def validate(phi: DimFn, grid: ScaleGrid, witness: float = DEFAULT_WITNESS) -> ValidationReport:
    """Check conditions (i) and (ii) on the grid.

    Condition (i) needs g nondecreasing across the grid and divergence, which
    is certified either structurally (the descriptor is unbounded by
    construction) or by g(L_max) reaching ``witness``.  Condition (ii) is
    checked on grid points below the descriptor's cutoff.  Grid points outside
    the represented range count as violations of (i).
    """
    L = grid.L
    inside = phi.in_domain(L)
    violation = None
    if not np.all(inside):
        j = int(grid.j[np.argmin(inside)])
        return ValidationReport(False, False, ("domain", j), float("nan"), witness)
    g = phi.gap_at_log(L)
    j_bad = _first_increase(-g)
    diverges = phi.unbounded() or g[-1] >= witness
    cond_i = j_bad is None and diverges
    if j_bad is not None:
        violation = ("i", int(grid.j[j_bad]))
    elif not diverges:
        violation = ("i", int(grid.j[-1]))
    below = L >= phi.cutoff_L()
    vals = phi.at_log(L[below])
    k_bad = _first_increase(vals)
    cond_ii = k_bad is None
    if k_bad is not None and violation is None:
        violation = ("ii", int(grid.j[below][k_bad]))
    return ValidationReport(bool(cond_i), bool(cond_ii), violation, float(g[-1]), witness)


@dataclass(frozen=True)
class RatioProfile:
    j: np.ndarray
    ratios: np.ndarray
    tail_min: float
    tail_max: float


def ratio_profile(phi: DimFn, psi: DimFn, grid: ScaleGrid, tail: float = 0.5) -> RatioProfile:
    L = grid.L
    ratios = np.asarray(phi.at_log(L) / psi.at_log(L))
    t = ratios[tail_slice(len(ratios), tail)]
    return RatioProfile(grid.j, ratios, float(t.min()), float(t.max()))


def _sampled(phi, grid):
    L = grid.L
    if isinstance(phi, DimFn):
        vals = phi.at_log(L)
    else:
        vals = np.asarray(phi, dtype=float)
        if vals.shape != L.shape:
            raise SpecError("sampled values must match the grid length")
    if np.any(~np.isfinite(vals)) or np.any(vals <= 0):
        raise PreconditionError("sampled function must be finite and positive")
    return L, vals


def maximal_dimfn_below(phi, grid: ScaleGrid) -> PiecewiseLogLinear:
    """Largest dimension function below ``phi`` on the grid.

    ``phi`` is a descriptor or an array of samples phi(R_j).  First
    psi0(R) = inf_{r <= R} phi(r) log(1/r) / log(1/R) makes g nondecreasing;
    then psi(R) = inf over r in [R, 1) of psi0(r) makes the function
    nonincreasing.  Both infima run over grid points, so ties stay exact.
    """
    L, vals = _sampled(phi, grid)
    g = vals * L
    g0 = np.minimum.accumulate(g[::-1])[::-1]
    q = len(g0) * 3 // 4 if len(g0) >= 4 else 0
    if not g0[-1] > g0[q] * (1 + 1e-9):
        raise PreconditionError("phi(R)*log(1/R) does not grow along the grid")
    psi0 = g0 / L
    psi = np.minimum.accumulate(psi0)
    knots = tuple(zip(L.tolist(), (psi * L).tolist()))
    return PiecewiseLogLinear(knots)


_KINDS = {
    "constant": lambda o: Constant(float(o["c"])),
    "loglog": lambda o: LogLogRatio(),
    "powerlog": lambda o: PowerLog(float(o["t"])),
    "scaled": lambda o: Scaled(float(o["alpha"]), from_json(o["inner"])),
    "piecewise": lambda o: PiecewiseLogLinear(tuple(tuple(k) for k in o["knots"])),
}


def from_json(obj) -> DimFn:
    if isinstance(obj, str):
        obj = json.loads(obj)
    if not isinstance(obj, dict) or "kind" not in obj:
        raise SpecError("dimension function JSON needs a 'kind' field")
    try:
        make = _KINDS[obj["kind"]]
    except KeyError:
        raise SpecError(f"unknown dimension function kind {obj['kind']!r}") from None
    try:
        return make(obj)
    except (KeyError, TypeError) as exc:
        raise SpecError(f"malformed {obj['kind']} descriptor: {exc}") from None


def to_json(phi: DimFn) -> dict:
    return phi.to_json()


def load(text_or_path: str) -> DimFn:
    """Parse inline JSON, or read it from a file path."""
    text = text_or_path.strip()
    if not text.startswith("{"):
        with open(text_or_path) as fh:
            text = fh.read()
    try:
        return from_json(json.loads(text))
    except json.JSONDecodeError as exc:
        raise SpecError(f"invalid dimension function JSON: {exc}") from None
