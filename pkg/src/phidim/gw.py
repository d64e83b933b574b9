"""Galton-Watson processes with finitely supported offspring laws.

Exact distributions of Z_k come from repeated convolution of the offspring
law; tails in the large-deviation regime are far below anything sampling
can reach, so those are only ever computed this way.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from phidim import kernels
from phidim.config import pmap
from phidim.cover import DimProfile, SymbolicTree
from phidim.dimfun import DimFn
from phidim.errors import CapacityError, DomainError, ResolutionError, SpecError

__all__ = [
    "OffspringDist",
    "Pmf",
    "pgf_eval",
    "pgf_iterate_log",
    "pgf_coefficients",
    "extinction_prob",
    "z_distribution",
    "tail_prob",
    "large_dev_rate",
    "polybound_statistic",
    "surviving_tail_mc",
    "bound_low_check",
    "sample_tree",
    "tree_phi_profile",
    "tree_dim_formula",
    "bc_event_scan",
]

SUPPORT_CAP = 2**20
NODE_CAP = 2**24


def _as_fraction(x):
    if not isinstance(x, float):
        return Fraction(x)
    f = Fraction(x)
    # snap decimal inputs like 0.1 to 1/10, but never round a tiny mass away
    g = f.limit_denominator(10**12)
    return g if abs(g - f) <= 1e-15 * abs(f) else f


class OffspringDist:
    """Probabilities theta_0..theta_N of the offspring count."""

    def __init__(self, theta, exact=False):
        raw = list(theta)
        if len(raw) < 2:
            raise SpecError("offspring law needs at least theta_0 and theta_1")
        try:
            fr = [_as_fraction(x) for x in raw]
        except (TypeError, ValueError):
            raise SpecError("offspring probabilities must be numbers or rationals") from None
        if any(f < 0 for f in fr):
            raise SpecError("offspring probabilities must be nonnegative")
        # (1, 0) is kept as the law that dies at once
        while len(fr) > 2 and fr[-1] == 0:
            fr.pop()
        total = sum(fr)
        floats = np.array([float(x) for x in raw[: len(fr)]], dtype=np.float64)
        if abs(float(total) - 1) > 1e-12:
            raise SpecError(f"offspring probabilities sum to {float(total)!r}, not 1")
        self.exact = bool(exact)
        self.fractions = tuple(fr)
        self.theta = floats
        self.N = len(fr) - 1
        self.m = float(np.dot(np.arange(self.N + 1), floats))

    @property
    def log_m(self):
        return math.log(self.m) if self.m > 0 else -math.inf

    @property
    def gamma(self):
        """log N / log m; infinite when m <= 1."""
        if self.m <= 1:
            return math.inf
        return math.log(self.N) / math.log(self.m)

    @property
    def degenerate(self):
        """True for the law theta_1 = 1, which none of the growth results cover."""
        return self.theta[1] == 1.0

    def __repr__(self):
        return f"OffspringDist(theta={self.theta.tolist()})"

    def to_json(self):
        return {"theta": [str(f) if self.exact else float(f) for f in self.fractions], "exact": self.exact}

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        if "theta" not in obj:
            raise SpecError("offspring spec needs 'theta'")
        exact = bool(obj.get("exact", False))
        theta = [Fraction(x) if isinstance(x, str) else x for x in obj["theta"]]
        return cls(theta, exact=exact)

    @classmethod
    def parse(cls, text, exact=False):
        """Comma separated probabilities, e.g. '0.25,0,0.75' or '1/4,0,3/4'."""
        parts = [p.strip() for p in text.split(",") if p.strip()]
        try:
            vals = [Fraction(p) if "/" in p else float(p) for p in parts]
        except ValueError:
            raise SpecError(f"cannot parse offspring law {text!r}") from None
        return cls(vals, exact=exact)


@dataclass
class Pmf:
    k: int
    probs: np.ndarray  # float64, or object array of Fractions in exact mode

    @property
    def exact(self):
        return self.probs.dtype == object

    def mean(self):
        s = np.arange(len(self.probs))
        if self.exact:
            return sum(Fraction(int(i)) * p for i, p in zip(s, self.probs))
        return float(np.dot(s, self.probs))

    def as_float(self):
        return np.array([float(p) for p in self.probs]) if self.exact else self.probs


def pgf_eval(dist: OffspringDist, s: float) -> float:
    """f(s) by Horner's rule."""
    if s < 0:
        raise DomainError("pgf argument must be nonnegative")
    acc = 0.0
    for c in dist.theta[::-1]:
        acc = acc * s + c
    return acc


def _log_pgf(dist, y):
    """log f(e^y) for y >= 0 without overflow, via logsumexp over the support."""
    j = np.nonzero(dist.theta > 0)[0]
    terms = np.log(dist.theta[j]) + j * y
    top = terms.max()
    return float(top + math.log(np.exp(terms - top).sum()))


def pgf_iterate_log(dist: OffspringDist, y: float, k: int) -> float:
    """log f_k(e^y); the log-sum-exp form keeps large y exact to rounding."""
    if y < 0:
        raise DomainError("pgf_iterate_log needs y = log s >= 0")
    if k < 0:
        raise DomainError("iteration count must be nonnegative")
    for _ in range(k):
        y = _log_pgf(dist, y)
    return y


def pgf_coefficients(dist: OffspringDist, k: int, exact=False):
    """Coefficients of f_k by polynomial composition f_k = f(f_{k-1})."""
    coeffs = list(dist.fractions) if exact else dist.theta.tolist()
    zero = Fraction(0) if exact else 0.0
    cur = [zero, Fraction(1) if exact else 1.0]  # f_0(s) = s
    for _ in range(k):
        out = [zero]
        power = [Fraction(1) if exact else 1.0]
        for c in coeffs:
            if len(out) < len(power):
                out += [zero] * (len(power) - len(out))
            for i, v in enumerate(power):
                out[i] += c * v
            power = _polymul(power, cur, zero)
        cur = out
        while len(cur) > 1 and cur[-1] == 0:
            cur.pop()
    return cur if exact else np.array(cur)


def _polymul(a, b, zero):
    out = [zero] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def extinction_prob(dist: OffspringDist, tol=1e-14, max_iter=10**7) -> float:
    """Least fixed point of f on [0,1]; 1 when m <= 1.

    The degenerate law theta_1 = 1 also returns 1 and warns.
    """
    if dist.degenerate:
        warnings.warn("theta_1 = 1 is degenerate: the process never dies and never grows", stacklevel=2)
        return 1.0
    if dist.m <= 1:
        return 1.0
    if dist.theta[0] == 0:
        return 0.0
    q = 0.0
    for _ in range(max_iter):
        nq = pgf_eval(dist, q)
        if abs(nq - q) < tol:
            # the geometric tail of the iteration is removed by one Newton step
            fp = sum(j * c * nq ** (j - 1) for j, c in enumerate(dist.theta) if j)
            if fp < 1:
                nq = nq - (pgf_eval(dist, nq) - nq) / (fp - 1)
            return float(min(max(nq, 0.0), 1.0))
        q = nq
    return q


def _convolve_exact(a, b):
    """Convolution of integer object arrays."""
    return np.convolve(a, b) if len(a) * len(b) < 4096 else _convolve_big(a, b)


def _convolve_big(a, b):
    # Python ints through numpy object arrays, sliced to keep memory bounded
    out = np.zeros(len(a) + len(b) - 1, dtype=object)
    for i, x in enumerate(a):
        if x:
            out[i : i + len(b)] += x * b
    return out


def z_distribution(dist: OffspringDist, k: int, exact=None, cap=SUPPORT_CAP) -> Pmf:
    """Law of Z_k on {0, ..., N^k}.

    P(Z_k = s) = sum_x theta_x (P_{k-1})^{*x}(s).  Exact mode keeps integer
    numerators over a common denominator.
    """
    if k < 0:
        raise DomainError("level must be nonnegative")
    exact = dist.exact if exact is None else exact
    if dist.N**k > cap:
        raise CapacityError(f"support N^k = {dist.N}^{k} exceeds the cap {cap}")
    if exact:
        den = math.lcm(*[f.denominator for f in dist.fractions])
        th = np.array([int(f * den) for f in dist.fractions], dtype=object)
        cur = np.array([0, 1], dtype=object)
        cur_den = 1
        for _ in range(k):
            out = np.zeros(1, dtype=object)
            power = np.array([1], dtype=object)
            # the x-fold convolution term carries denominator cur_den^x; bring all to cur_den^N
            terms = []
            for x, c in enumerate(th):
                if x:
                    power = _convolve_exact(power, cur)
                if c:
                    terms.append((x, c, power.copy()))
            total_den = den * cur_den**dist.N
            size = max(len(p) for _, _, p in terms)
            out = np.zeros(size, dtype=object)
            for x, c, p in terms:
                out[: len(p)] += c * cur_den ** (dist.N - x) * p
            g = math.gcd(total_den, *[int(v) for v in out if v])
            cur = out // g
            cur_den = total_den // g
        probs = np.array([Fraction(int(v), cur_den) for v in cur], dtype=object)
        return Pmf(k, probs)
    th = dist.theta
    cur = np.array([0.0, 1.0])
    for _ in range(k):
        out = np.zeros((len(cur) - 1) * dist.N + 1)
        power = np.array([1.0])
        for x, c in enumerate(th):
            if x:
                power = np.convolve(power, cur)
            if c:
                out[: len(power)] += c * power
        cur = out
    return Pmf(k, cur)


def tail_prob(dist: OffspringDist, k: int, t: float, pmf: Pmf | None = None) -> float:
    """P(Z_k >= m^{tk})."""
    pmf = pmf if pmf is not None else z_distribution(dist, k, exact=False)
    if dist.m <= 0:
        return 1.0 if t == -math.inf else float(pmf.as_float()[0] == 1.0)
    thr_log = t * k * dist.log_m
    if thr_log > k * math.log(dist.N) + 1e-12:
        return 0.0
    thr = math.exp(thr_log) * (1 - 1e-12)
    start = max(0, math.ceil(thr))
    p = pmf.as_float()
    if start >= len(p):
        return 0.0
    # sum from the small end for accuracy
    return float(np.sum(p[start:][::-1]))


@dataclass
class RateProfile:
    t: float
    target: float
    rows: list  # (k, tail, rho_k)
    monotone_tail: bool
    truncated: bool

    def to_csv(self):
        lines = ["k,tail,rho_k,markov_ceiling"]
        for k, tail, rho, ceil in self.rows:
            lines.append(f"{k},{tail:.12g},{rho:.12g},{ceil:.12g}")
        return "\n".join(lines) + "\n"


def large_dev_rate(dist: OffspringDist, t: float, k_range) -> RateProfile:
    """rho_k = log_m(-log P(Z_k >= m^{tk})) / k against (t-1) gamma / (gamma-1)."""
    if dist.m <= 1:
        raise DomainError("large-deviation rates need m > 1")
    g = dist.gamma
    if not g > 1 or dist.N <= dist.m:
        raise DomainError("gamma = 1: the law is deterministic, no deviation window")
    if not 1 < t < g:
        raise DomainError(f"t must satisfy 1 < t < gamma = {g:.6g}")
    target = (t - 1) * g / (g - 1)
    rows = []
    truncated = False
    for k in k_range:
        tail = tail_prob(dist, k, t)
        if not tail > 1e-300:
            warnings.warn(f"tail at k={k} underflows; profile truncated", stacklevel=2)
            truncated = True
            break
        rho = math.log(-math.log(tail)) / dist.log_m / k if tail < 1 else -math.inf
        rows.append((k, tail, rho, dist.m ** ((1 - t) * k)))
    rhos = [r[2] for r in rows]
    half = rhos[len(rhos) // 2 :]
    monotone = all(b >= a for a, b in zip(half, half[1:]))
    return RateProfile(t, target, rows, monotone, truncated)


def polybound_statistic(dist: OffspringDist, s: float, eps: float, ks) -> list:
    """Rows (k, N^{-(s+eps)k} log f_k(exp(m^{-(1-s)k})))."""
    if dist.m <= 1:
        raise DomainError("polybound needs m > 1")
    out = []
    for k in ks:
        y = math.exp(-(1 - s) * k * dist.log_m)
        val = pgf_iterate_log(dist, y, k)
        out.append((k, val * math.exp(-(s + eps) * k * math.log(dist.N))))
    return out


def _rng(seed):
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


@dataclass
class MCEstimate:
    estimate: float
    stderr: float
    trials: int
    reference: dict

    def within(self, lo=-math.inf, hi=math.inf, z=3.0):
        return self.estimate >= lo - z * self.stderr and self.estimate <= hi + z * self.stderr


def surviving_tail_mc(dist: OffspringDist, k: int, t: float, trials: int, seed: int = 0, threshold_frac=None) -> MCEstimate:
    """P(Z_k >= m^{tk} and at least threshold_frac m^{tk} of them survive).

    Z_k is drawn from the exact law; the surviving count is Binomial(Z_k, 1-q)
    because distinct subtrees die out independently.
    """
    if trials <= 0:
        raise SpecError("trials must be positive")
    if dist.m <= 1:
        raise DomainError("surviving-offspring estimates need m > 1")
    q = extinction_prob(dist)
    frac = (1 - q) / 2 if threshold_frac is None else threshold_frac
    pmf = z_distribution(dist, k, exact=False).as_float()
    pmf = pmf / pmf.sum()
    rng = _rng(seed)
    z = rng.choice(len(pmf), size=trials, p=pmf)
    surv = rng.binomial(z, 1 - q)
    thr = math.exp(t * k * dist.log_m)
    hit = (z >= thr * (1 - 1e-12)) & (surv >= frac * thr)
    p_hat = float(hit.mean())
    se = math.sqrt(max(p_hat * (1 - p_hat), 1.0 / trials) / trials)
    tail = tail_prob(dist, k, t)
    ref = {"tail": tail, "lower": tail * (1 - q) / (1 + q), "q": q}
    return MCEstimate(p_hat, se, trials, ref)


def bound_low_check(p: float, lam: float, n: int, trials: int, seed: int = 0) -> MCEstimate:
    """Frequency that at least lam*n of n iid Bernoulli(p) events occur."""
    if not (0 < lam < p <= 1):
        raise SpecError("need 0 < lambda < p <= 1")
    if n < 1 or trials <= 0:
        raise SpecError("n and trials must be positive")
    rng = _rng(seed)
    hits = rng.binomial(n, p, size=trials) >= lam * n
    f = float(hits.mean())
    se = math.sqrt(max(f * (1 - f), 1.0 / trials) / trials)
    return MCEstimate(f, se, trials, {"lower": (p - lam) / (1 - lam)})


@dataclass
class TreeSample:
    seed: int
    depth: int
    dist: OffspringDist
    counts: list  # counts[k][i] = children of node i at level k

    @property
    def level_sizes(self):
        sizes = [1]
        for c in self.counts:
            sizes.append(int(c.sum()))
        return sizes

    def tree(self) -> SymbolicTree:
        return SymbolicTree(self.counts)

    def survivors(self):
        """Boolean masks per level: nodes with a descendant at the final depth."""
        alive = [None] * (self.depth + 1)
        alive[self.depth] = np.ones(self.level_sizes[self.depth], dtype=bool)
        for k in range(self.depth - 1, -1, -1):
            c = self.counts[k]
            owner = np.repeat(np.arange(len(c)), c)
            has = np.zeros(len(c), dtype=bool)
            has[owner[alive[k + 1]]] = True
            alive[k] = has
        return alive


def _draw_children(dist, keys):
    u = kernels.uniforms(keys)
    cdf = np.cumsum(dist.theta)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, u, side="right").astype(np.int64)


def sample_tree(dist: OffspringDist, depth: int, seed: int = 0, cap: int = NODE_CAP) -> TreeSample:
    """Child counts keyed by (seed, node path), so any traversal order gives the same tree."""
    if depth < 0:
        raise SpecError("depth must be nonnegative")
    if dist.m > 1 and dist.m**depth > cap:
        raise CapacityError(f"expected {dist.m ** depth:.3g} nodes exceed the cap {cap}")
    keys = np.array([kernels.seed_key(seed, 0x6777)], dtype=np.uint64)
    counts = []
    total = 1
    for _ in range(depth):
        c = _draw_children(dist, keys)
        counts.append(c)
        total += int(c.sum())
        if total > cap:
            raise CapacityError(f"sampled tree exceeds {cap} nodes")
        keys = kernels.child_keys(keys, c)
    return TreeSample(int(seed), depth, dist, counts)


def _level_gap(phi, k):
    return int(round(k * float(phi.at_log(float(k)))))


def tree_phi_profile(tree: TreeSample, phi: DimFn, tail=0.5, surviving=True) -> DimProfile:
    """Per level k: max over surviving level-k nodes of log(#descendants at k + Delta) / Delta.

    Balls of radius e^{-k} are level-k subtrees and Delta = round(k phi(e^{-k})).
    """
    st = tree.tree()
    alive = tree.survivors() if surviving else None
    rows = []
    for k in range(1, tree.depth + 1):
        if not phi.in_domain(float(k)):
            continue
        gap = _level_gap(phi, k)
        if gap < 1 or k + gap > tree.depth:
            continue
        agg = st.aggregate(k, k + gap)
        if alive is not None:
            agg = agg[alive[k]]
        if agg.size == 0:
            continue
        cnt = int(agg.max())
        if cnt < 1:
            continue
        rows.append((k, math.exp(-k), float(phi.at_log(float(k))), gap, cnt))
    flags = ()
    if tree.level_sizes[-1] == 0:
        flags = ("extinct",)
        if not rows:
            return DimProfile.from_rows([], tail, flags)
    if not rows:
        raise ResolutionError("no level has 1 <= Delta(k) with k + Delta(k) within the sampled depth")
    return DimProfile.from_rows(rows, tail, flags)


def tree_dim_formula(dist: OffspringDist, alpha: float) -> float:
    """alpha (1 - log m / log N) + log m for alpha <= log N, else log N."""
    if alpha < 0:
        raise DomainError("alpha must be nonnegative")
    if dist.m <= 1:
        raise DomainError("tree dimensions need m > 1")
    lm, lN = math.log(dist.m), math.log(dist.N)
    if dist.N <= dist.m * (1 + 1e-15):
        return lm
    if alpha >= lN:
        return lN
    return alpha * (1 - lm / lN) + lm


def bc_event_scan(tree: TreeSample, t: float, alpha: float, k_min: int = 1) -> list:
    """Levels k with a level-k node having >= m^{tn} descendants n = floor(log k / alpha) levels down."""
    if alpha <= 0:
        raise DomainError("alpha must be positive")
    st = tree.tree()
    lm = tree.dist.log_m
    hits = []
    skipped = []
    for k in range(max(1, k_min), tree.depth + 1):
        n = int(math.floor(math.log(k) / alpha))
        if n < 1:
            continue
        if k + n > tree.depth:
            skipped.append(k)
            continue
        agg = st.aggregate(k, k + n)
        if agg.size and agg.max() >= max(1.0, math.exp(t * n * lm) * (1 - 1e-12)):
            hits.append(k)
    if skipped:
        warnings.warn(f"levels {skipped[0]}..{skipped[-1]} skipped: depth too small", stacklevel=2)
    return hits


def tree_profiles(dist, depth, phi, seeds, tail=0.5):
    """Profiles for several seeds, in seed order."""
    return pmap(lambda s: tree_phi_profile(sample_tree(dist, depth, s), phi, tail), seeds)
