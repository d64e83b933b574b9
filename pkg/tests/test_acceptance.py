"""Acceptance criteria 1-12.

Each test records one PASS/FAIL line (printed in the terminal summary and,
when run as a script, on stdout) and then asserts.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from phidim import cover, dimfun, gw, moran, percolation, selfsim, seqset
from phidim.dimfun import Constant, LogLogRatio, PowerLog, ScaleGrid, scale

try:
    from conftest import ACCEPTANCE
except ImportError:  # run as a script
    ACCEPTANCE = []


def record(num, title, ok, elapsed, limit, detail=""):
    ok = bool(ok) and elapsed < limit
    line = f"{num}. {'PASS' if ok else 'FAIL'} {title} ({elapsed:.2f}s / {limit:g}s) {detail}".rstrip()
    ACCEPTANCE.append(line)
    print(line)
    assert ok, line


# ratio rules used by criteria 3 and 12
FLEET = [
    {"kind": "periodic", "period": [0.25]},
    {"kind": "periodic", "period": [0.5, 0.25]},
    {"kind": "periodic", "period": [1 / 3]},
    {"kind": "periodic", "period": [0.5, 0.5, 0.125]},
    {"kind": "periodic", "period": [0.2, 0.45, 0.3]},
    {"kind": "blocks", "blocks": [{"ratio": 0.25, "start": 1, "mul": 2}, {"ratio": 0.5, "start": 1, "mul": 2}]},
    {"kind": "blocks", "blocks": [{"ratio": 0.25, "start": 1, "mul": 2}, {"ratio": 0.5, "start": 1, "add": 1}]},
    {"kind": "blocks", "blocks": [{"ratio": 0.125, "start": 2, "add": 3}, {"ratio": 0.5, "start": 2, "add": 5}]},
    {"kind": "blocks", "blocks": [{"ratio": 0.3, "start": 1, "mul": 3}, {"ratio": 0.45, "start": 1, "mul": 3}]},
    {"kind": "blocks", "blocks": [{"ratio": 0.1, "start": 5}, {"ratio": 0.5, "start": 1, "add": 2}]},
]
FLEET_SPECS = [moran.MoranSpec(1 if i % 3 else 2, (), rule) for i, rule in enumerate(FLEET)]
FLEET_N = 1500


def test_c01_moran_materialization():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240601)
    worst, checked = 0.0, 0
    exact_counts = True
    for _ in range(20):
        d = int(rng.integers(1, 3))
        depth = int(rng.integers(8, 17)) if d == 1 else int(rng.integers(6, 11))
        # mix dyadic and generic ratios
        choice = rng.random(depth)
        ratios = np.where(choice < 0.4, 2.0 ** -rng.integers(1, 5, depth), rng.uniform(0.05, 0.5, depth))
        spec = moran.MoranSpec.from_ratios(d, ratios.tolist())
        gs = moran.materialize(spec, depth)
        for _ in range(6):
            n = int(rng.integers(0, depth))
            m = int(rng.integers(n, depth + 1))
            code = rng.integers(0, 2**n, d)
            exact_counts &= cover.count_cells(gs, n, code, m) == 2 ** (d * (m - n))
        phi = Constant(float(rng.uniform(0.2, 0.9)))
        logs = gs.L  # log(1/rho_k)
        # rows computed from counts in the materialized set
        oracle = {}
        for n in range(1, depth):
            target = logs[n] * (1 + phi.c)
            m = max(k for k in range(n, depth + 1) if logs[k] < target)
            if m == depth:
                continue
            cnt = int(gs.descendant_counts(n, m).max())
            oracle[n] = math.log(cnt) / (phi.c * logs[n])
        if not oracle:
            continue
        res = moran.exact_phi_dim(spec, phi, max(oracle), tail=1.0)
        for n, m_, v in res.rows():
            if n in oracle:
                worst = max(worst, abs(v - oracle[n]))
                checked += 1
    elapsed = time.perf_counter() - t0
    record(1, "Moran exact formula vs materialized counts", exact_counts and worst <= 1e-12 and checked > 20, elapsed, 10, f"max|diff|={worst:.2e} rows={checked}")


def test_c02_continuity_converse():
    t0 = time.perf_counter()
    psi = LogLogRatio()
    phi = scale(psi, 2)
    g = moran.build_gap_moran(phi, psi, 0.4, 1, d=1, min_depth=12000)
    a = moran.exact_phi_dim(g.spec, phi, 10**4).sup
    b = moran.exact_phi_dim(g.spec, psi, 10**4).sup
    elapsed = time.perf_counter() - t0
    record(2, "gap Moran: phi summary near 1, psi summary small", abs(a - 1) <= 0.02 and b <= 0.65, elapsed, 5, f"phi={a:.4f} psi={b:.4f}")


def test_c03_upper_from_windows():
    t0 = time.perf_counter()
    alphas = [round(0.05 * i, 2) for i in range(1, 21)]
    worst = 0.0
    for spec in FLEET_SPECS:
        for phi in (Constant(1.0), LogLogRatio()):
            up = moran.exact_upper_phi_dim(spec, phi, FLEET_N).sup
            best = max(moran.exact_phi_dim(spec, scale(phi, a), FLEET_N).sup for a in alphas)
            worst = max(worst, abs(up - best))
    elapsed = time.perf_counter() - t0
    record(3, "upper value from the rate window", worst <= 0.05, elapsed, 30, f"max|diff|={worst:.4f}")


def _fk_oracle(theta, k):
    """Coefficients of f_k by composing f with itself as a polynomial."""
    P = np.polynomial.polynomial
    cur = np.array([0.0, 1.0])
    for _ in range(k):
        # Horner: f(cur) = theta_0 + cur (theta_1 + cur (...))
        acc = np.array([theta[-1]], dtype=float)
        for c in theta[-2::-1]:
            acc = P.polyadd(P.polymul(acc, cur), [c])
        cur = acc
    return cur


def test_c04_gw_distribution():
    t0 = time.perf_counter()
    half = gw.OffspringDist.parse("0,1/2,1/2", exact=True)
    pmf = gw.z_distribution(half, 2, exact=True)
    want = [0, Fraction(1, 4), Fraction(3, 8), Fraction(1, 4), Fraction(1, 8)]
    ok_exact = list(pmf.probs) == want
    pf = gw.z_distribution(gw.OffspringDist([0, 0.5, 0.5]), 2, exact=False)
    ok_float = np.allclose(pf.probs, [float(x) for x in want], atol=1e-12, rtol=0)
    worst = 0.0
    for theta in ([0, 0.5, 0.5], [0.25, 0, 0.75], [0.1, 0.3, 0.2, 0.4]):
        dist = gw.OffspringDist(theta)
        for k in range(1, 7):
            orc = _fk_oracle(theta, k)
            got = gw.z_distribution(dist, k, exact=False).as_float()
            n = max(len(orc), len(got))
            worst = max(worst, float(np.max(np.abs(np.pad(orc, (0, n - len(orc))) - np.pad(got, (0, n - len(got)))))))
    p12 = float(gw.z_distribution(gw.OffspringDist([0.25, 0, 0.75]), 12).as_float()[0])
    elapsed = time.perf_counter() - t0
    ok = ok_exact and ok_float and worst <= 1e-12 and abs(p12 - 1 / 3) <= 1e-3
    record(4, "Galton-Watson law of Z_k", ok, elapsed, 5, f"oracle={worst:.1e} pmf0(12)={p12:.6f}")


def test_c05_large_deviation_rate():
    t0 = time.perf_counter()
    dist = gw.OffspringDist([0, 0.5, 0.5])
    prof = gw.large_dev_rate(dist, 1.3, range(8, 13))
    rhos = [r[2] for r in prof.rows]
    mono = all(b >= a for a, b in zip(rhos, rhos[1:]))
    rel = abs(rhos[-1] - prof.target) / prof.target
    ceil_ok = all(tail <= ceil for _, tail, _, ceil in prof.rows)
    elapsed = time.perf_counter() - t0
    record(5, "large-deviation rate profile", mono and rel <= 0.35 and ceil_ok, elapsed, 10, f"rho12={rhos[-1]:.4f} target={prof.target:.5f} rel={rel:.3f}")


def test_c06_polybound():
    t0 = time.perf_counter()
    rows = gw.polybound_statistic(gw.OffspringDist([0.25, 0, 0.75]), 0.5, 0.2, range(5, 41))
    vals = [v for _, v in rows]
    dec = all(b < a for a, b in zip(vals, vals[1:]))
    elapsed = time.perf_counter() - t0
    record(6, "iterated generating function statistic decays", dec and vals[-1] < 0.05, elapsed, 1, f"k40={vals[-1]:.5f}")


def test_c07_surviving_mc():
    t0 = time.perf_counter()
    est = gw.surviving_tail_mc(gw.OffspringDist([0.25, 0, 0.75]), 10, 1.15, 10**6, seed=7)
    lo, hi = est.reference["lower"], est.reference["tail"]
    ok = lo - 3 * est.stderr <= est.estimate <= hi + 3 * est.stderr
    elapsed = time.perf_counter() - t0
    record(7, "surviving offspring Monte Carlo bracket", ok, elapsed, 30, f"est={est.estimate:.5f} in [{lo:.5f}, {hi:.5f}]")


def test_c08_tree_and_percolation_formulas():
    t0 = time.perf_counter()
    dist = gw.OffspringDist([0, 0.5, 0.5])
    lm, lN = math.log(dist.m), math.log(dist.N)
    ends = gw.tree_dim_formula(dist, 0.0) == lm and gw.tree_dim_formula(dist, lN) == lN
    mid = abs(gw.tree_dim_formula(dist, lN / 2) - (lN + lm) / 2) <= 1e-12
    spec = percolation.PercSpec(2, 2, 0.65)
    v0 = percolation.perc_dim_formula(spec, 0.0)
    a_star = 2 * math.log(2)
    left = percolation.perc_dim_formula(spec, a_star * (1 - 1e-15))
    junction = abs(left - percolation.perc_dim_formula(spec, a_star)) <= 1e-10
    elapsed = time.perf_counter() - t0
    ok = ends and mid and abs(v0 - math.log(2.6) / math.log(2)) <= 1e-6 and abs(v0 - 1.378512) <= 1e-6 and junction
    record(8, "tree and percolation closed forms", ok, elapsed, 1, f"perc(0)={v0:.7f}")


def test_c09_tree_profiles():
    t0 = time.perf_counter()
    dist = gw.OffspringDist([0, 0.5, 0.5])
    profs = gw.tree_profiles(dist, 22, LogLogRatio(), range(20))
    lo, hi = math.log(1.5) - 0.15, math.log(2)
    good = sum(1 for p in profs if len(p.tail_values()) and np.all((p.tail_values() >= lo) & (p.tail_values() <= hi + 1e-12)))
    elapsed = time.perf_counter() - t0
    record(9, "sampled tree profiles in band", good >= 18, elapsed, 60, f"{good}/20 seeds")


def test_c10_selfsim_ledger():
    t0 = time.perf_counter()
    tp = selfsim.build_nk_sequence(3, 10)
    first = tp.n[1] == 1 and tp.r[1] == Fraction(10, 27) and tp.n[2] == 2 and tp.r[2] == Fraction(100, 2187)
    bound = all(-(math.log(r.numerator) - math.log(r.denominator)) <= 2 * 3**k * math.log(3) + 1e-12 for k, r in enumerate(tp.r))
    led = selfsim.microset_ledger(tp)
    amp = all(r == tp.r[k] and e == Fraction(9, 10) ** (k + 1) for k, (r, e) in enumerate(led))
    c3 = selfsim.threshold_constant(3)
    elapsed = time.perf_counter() - t0
    ok = first and bound and amp and abs(c3 - math.log(3) / math.log(10 / 9)) <= 1e-12 and abs(c3 - 10.4273) <= 1e-3
    record(10, "self-similar construction ledger", ok, elapsed, 1, f"C3={c3:.6f}")


def test_c11_sequence_formula_vs_cover():
    t0 = time.perf_counter()
    spec = seqset.ExpPower(0.5)
    grid = ScaleGrid(10**0.25, 8, 32)
    pts = seqset.build_points(spec, 1500)
    diffs = []
    for phi in (Constant(0.5), LogLogRatio()):
        f = seqset.seq_dim_formula(spec, phi, grid)
        direct = seqset.seq_direct_profile(pts, phi, grid, sweep=False)
        diffs.append(abs(f.sup - direct.sup))
    elapsed = time.perf_counter() - t0
    record(11, "sequence set formula vs direct covering", max(diffs) <= 0.1, elapsed, 10, "diffs=" + ",".join(f"{d:.4f}" for d in diffs))


def test_c12_inequality_suite():
    t0 = time.perf_counter()
    phis = [Constant(0.25), Constant(1.0), Constant(3.0), LogLogRatio(), PowerLog(0.5)]
    box_gap = -math.inf
    inter_gap = -math.inf
    equiv_gap = -math.inf
    grid = ScaleGrid(2.0, 40, 1000)
    for spec in FLEET_SPECS:
        box = moran.box_value(spec, FLEET_N)
        for phi in phis:
            box_gap = max(box_gap, box - moran.exact_phi_dim(spec, phi, FLEET_N).sup)
        # psi/101 for psi -> 0 has a gap below one ratio step at every float scale
        for psi in (Constant(0.5), Constant(1.0), Constant(3.0)):
            phi = scale(psi, 101)
            assert dimfun.ratio_profile(phi, psi, grid).tail_max <= 0.01
            up = moran.exact_upper_phi_dim(spec, psi, FLEET_N).sup
            inter_gap = max(inter_gap, up - moran.exact_phi_dim(spec, phi, FLEET_N).sup)
        eps = 0.05
        bound = eps * (1 + 2 * math.log2(4**spec.d) + eps) + 0.05
        for psi in (LogLogRatio(), Constant(1.0), PowerLog(0.5)):
            phi = scale(psi, 1 / (1 + 0.9 * eps))
            rp = dimfun.ratio_profile(phi, psi, grid)
            assert 1 - eps < rp.tail_min and rp.tail_max < 1 + eps
            diff = abs(moran.exact_phi_dim(spec, phi, FLEET_N).sup - moran.exact_phi_dim(spec, psi, FLEET_N).sup)
            equiv_gap = max(equiv_gap, diff - bound)
    # full branching trees as symbolic oracles
    tgrid = ScaleGrid(math.e, 2, 14)
    for b in (2, 3):
        tree = cover.SymbolicTree.full(b, 16)
        box = cover.box_profile(tree, tgrid).sup
        for phi in (Constant(0.5), Constant(1.0)):
            box_gap = max(box_gap, box - cover.phi_profile(tree, phi, tgrid).sup)
    elapsed = time.perf_counter() - t0
    ok = box_gap <= 0.05 and inter_gap <= 0.1 and equiv_gap <= 0
    record(12, "global inequality suite", ok, elapsed, 60, f"box-phi={box_gap:.4f} upper-phi={inter_gap:.4f} equiv_slack={equiv_gap:.4f}")


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_c") and callable(fn):
            try:
                fn()
            except AssertionError:
                pass
