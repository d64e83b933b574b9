"""Command line front end.

Exit codes: 0 success, 2 invalid spec or arguments, 3 numeric failure,
4 input/output error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction

import numpy as np

from phidim import config, dimfun, gw, moran, percolation, selfsim, seqset
from phidim.cover import PointSet1D
from phidim.errors import PhidimError, SpecError

EXIT_OK, EXIT_SPEC, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


def fmt(x):
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    return str(x)


class _Out:
    """Writes output files; an existing file is only replaced with --force."""

    def __init__(self, args):
        self.force = getattr(args, "force", False)

    def write(self, path, data):
        if path is None:
            return
        if os.path.exists(path) and not self.force:
            raise FileExistsError(f"{path} exists; pass --force to overwrite")
        mode = "wb" if isinstance(data, bytes) else "w"
        with open(path, mode, newline="" if mode == "w" else None) as fh:
            fh.write(data)


def _read_json(text):
    text = text.strip()
    if not text.startswith("{"):
        with open(text) as fh:
            text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"invalid JSON: {exc}") from None


def _grid(args):
    try:
        return dimfun.ScaleGrid(args.base, args.jmin, args.jmax)
    except TypeError:
        raise SpecError("grid needs --base, --jmin and --jmax") from None


def _phi(text):
    """A JSON descriptor, a path to one, a bare number (constant) or 'loglog'."""
    t = text.strip()
    if t == "loglog":
        return dimfun.LogLogRatio()
    try:
        return dimfun.Constant(float(t))
    except ValueError:
        return dimfun.load(t)


def _floats(text):
    try:
        return [float(Fraction(p)) if "/" in p else float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise SpecError(f"cannot parse number list {text!r}") from None


def _dist(args):
    if getattr(args, "dist", None):
        return gw.OffspringDist.from_json(_read_json(args.dist))
    if getattr(args, "theta", None) is None:
        raise SpecError("offspring law needs --theta or --dist")
    return gw.OffspringDist.parse(args.theta, exact=args.precision == "exact")


def _perc(args):
    if getattr(args, "spec", None):
        return percolation.PercSpec.from_json(_read_json(args.spec))
    return percolation.PercSpec(args.n, args.d, args.p, args.condition_depth)


def _seqspec(args):
    return seqset.from_json(_read_json(args.spec))


# dimfn


def cmd_dimfn_validate(args, out):
    phi, grid = _phi(args.phi), _grid(args)
    rep = dimfun.validate(phi, grid, witness=args.witness)
    print(f"cond_i_ok {rep.cond_i_ok}")
    print(f"cond_ii_ok {rep.cond_ii_ok}")
    print(f"first_violation {rep.first_violation}")
    print(f"g_max {fmt(rep.g_max)}")
    return EXIT_OK if rep.ok else EXIT_NUMERIC


def cmd_dimfn_ratio(args, out):
    prof = dimfun.ratio_profile(_phi(args.phi), _phi(args.psi), _grid(args), args.tail)
    lines = ["j,ratio"] + [f"{j},{fmt(v)}" for j, v in zip(prof.j, prof.ratios)]
    out.write(args.out, "\n".join(lines) + "\n")
    print(f"tail_min {fmt(prof.tail_min)}")
    print(f"tail_max {fmt(prof.tail_max)}")
    return EXIT_OK


def cmd_dimfn_envelope(args, out):
    env = dimfun.maximal_dimfn_below(_phi(args.phi), _grid(args))
    text = json.dumps(env.to_json(), sort_keys=True)
    out.write(args.out, text + "\n")
    print(text if args.out is None else f"knots {len(env.knots)}")
    return EXIT_OK


# moran


def _moran_spec(args):
    return moran.MoranSpec.from_json(_read_json(args.spec))


def _moran_rows(res, out, path):
    lines = ["n,m_n,value"] + [f"{n},{m},{fmt(v)}" for n, m, v in res.rows()]
    out.write(path, "\n".join(lines) + "\n")
    print(f"sup {fmt(res.sup)}")
    print(f"argmax_n {res.argmax}")


def cmd_moran_dim(args, out):
    res = moran.exact_phi_dim(_moran_spec(args), _phi(args.phi), args.n_max, args.tail)
    _moran_rows(res, out, args.out)
    return EXIT_OK


def cmd_moran_upper(args, out):
    res = moran.exact_upper_phi_dim(_moran_spec(args), _phi(args.phi), args.n_max, depth=args.depth, tail=args.tail)
    _moran_rows(res, out, args.out)
    return EXIT_OK


def cmd_moran_build_gap(args, out):
    g = moran.build_gap_moran(_phi(args.phi), _phi(args.psi), args.eps, args.n_scales, d=args.d, min_depth=args.min_depth)
    out.write(args.out, json.dumps(g.spec.to_json()) + "\n")
    out.write(args.ledger, g.ledger_csv())
    print(f"depth {len(g.spec.prefix_log2)}")
    print(f"scales {len(g.ledger)}")
    if args.n_max:
        print(f"phi_sup {fmt(moran.exact_phi_dim(g.spec, _phi(args.phi), args.n_max).sup)}")
        print(f"psi_sup {fmt(moran.exact_phi_dim(g.spec, _phi(args.psi), args.n_max).sup)}")
    return EXIT_OK


def cmd_moran_build_profile(args, out):
    if args.points:
        pts = np.loadtxt(args.points, ndmin=1)
        F = PointSet1D(np.unique(pts), args.delta)
    else:
        obj = _read_json(args.spec)
        if "prefix" in obj or "prefix_log2" in obj or "rule" in obj:
            src = moran.MoranSpec.from_json(obj)
            depth = args.depth
            gs = moran.materialize(src, depth)
            pts = moran.corners(src, depth, gs.levels[depth])[:, 0]
            F = PointSet1D(np.unique(np.concatenate([pts, pts + float(2.0 ** -np.sum(src.neg_log2(depth)))])), 0.0)
        else:
            raise SpecError("build-profile needs --points or a Moran --spec to sample from")
    spec, rho = moran.build_profile_moran(F, args.d)
    out.write(args.out, json.dumps(spec.to_json()) + "\n")
    print(f"levels {len(rho) - 1}")
    print("rho " + ",".join(fmt(x) for x in rho))
    return EXIT_OK


def cmd_moran_recover(args, out):
    obj = _read_json(args.witnesses)
    phi = moran.build_assouad_recover_dimfn([tuple(w) for w in obj["witnesses"]])
    text = json.dumps(phi.to_json(), sort_keys=True)
    out.write(args.out, text + "\n")
    print(text if args.out is None else "written")
    return EXIT_OK


def cmd_moran_interpolate(args, out):
    res = moran.build_interpolating_dimfn(_moran_spec(args), args.alpha, _grid(args), n_max=args.n_max, tail=args.tail)
    out.write(args.out, json.dumps(res.phi.to_json(), sort_keys=True) + "\n")
    print(f"case {res.case}")
    print(f"box {fmt(res.box)}")
    print(f"assouad {fmt(res.assouad)}")
    print(f"achieved {fmt(res.post_value)}")
    print(f"post_check {'ok' if res.post_ok else 'failed'}")
    return EXIT_OK if res.post_ok else EXIT_NUMERIC


# gw


def cmd_gw_pmf(args, out):
    dist = _dist(args)
    pmf = gw.z_distribution(dist, args.k, exact=args.precision == "exact")
    lines = ["s,prob"] + [f"{s},{fmt(p)}" for s, p in enumerate(pmf.probs) if p != 0]
    out.write(args.out, "\n".join(lines) + "\n")
    if args.out is None:
        print("\n".join(lines))
    print(f"mean {fmt(pmf.mean())}")
    return EXIT_OK


def cmd_gw_tail(args, out):
    dist = _dist(args)
    tail = gw.tail_prob(dist, args.k, args.t)
    print(f"tail {fmt(tail)}")
    print(f"markov_ceiling {fmt(dist.m ** ((1 - args.t) * args.k))}")
    if 0 < tail < 1 and dist.m > 1:
        print(f"rho_k {fmt(math.log(-math.log(tail)) / dist.log_m / args.k)}")
    return EXIT_OK


def cmd_gw_rate(args, out):
    dist = _dist(args)
    prof = gw.large_dev_rate(dist, args.t, range(args.k_min, args.k_max + 1))
    out.write(args.out, prof.to_csv())
    if args.out is None:
        sys.stdout.write(prof.to_csv())
    print(f"target {fmt(prof.target)}")
    print(f"nondecreasing_tail {prof.monotone_tail}")
    return EXIT_OK


def cmd_gw_polybound(args, out):
    rows = gw.polybound_statistic(_dist(args), args.s, args.eps, range(args.k_min, args.k_max + 1))
    lines = ["k,statistic"] + [f"{k},{fmt(v)}" for k, v in rows]
    out.write(args.out, "\n".join(lines) + "\n")
    if args.out is None:
        print("\n".join(lines))
    dec = all(b[1] < a[1] for a, b in zip(rows, rows[1:]))
    print(f"strictly_decreasing {dec}")
    return EXIT_OK


def cmd_gw_extinction(args, out):
    dist = _dist(args)
    print(f"q {fmt(gw.extinction_prob(dist))}")
    print(f"m {fmt(dist.m)}")
    if dist.degenerate:
        print("degenerate true")
    return EXIT_OK


def cmd_gw_sample(args, out):
    tree = gw.sample_tree(_dist(args), args.depth, args.seed)
    sizes = tree.level_sizes
    lines = ["level,size"] + [f"{k},{s}" for k, s in enumerate(sizes)]
    out.write(args.out, "\n".join(lines) + "\n")
    print("sizes " + ",".join(str(s) for s in sizes))
    return EXIT_OK


def cmd_gw_profile(args, out):
    tree = gw.sample_tree(_dist(args), args.depth, args.seed)
    prof = gw.tree_phi_profile(tree, _phi(args.phi), args.tail)
    out.write(args.out, prof.to_csv(footer=True))
    print(f"sup {fmt(prof.sup)}")
    return EXIT_OK


def cmd_gw_scan(args, out):
    tree = gw.sample_tree(_dist(args), args.depth, args.seed)
    hits = gw.bc_event_scan(tree, args.t, args.alpha)
    print("levels " + ",".join(str(k) for k in hits))
    return EXIT_OK


def cmd_gw_mc_surviving(args, out):
    est = gw.surviving_tail_mc(_dist(args), args.k, args.t, args.trials, args.seed)
    print(f"estimate {fmt(est.estimate)}")
    print(f"stderr {fmt(est.stderr)}")
    print(f"tail {fmt(est.reference['tail'])}")
    print(f"lower_bound {fmt(est.reference['lower'])}")
    return EXIT_OK


def cmd_gw_mc_boundlow(args, out):
    est = gw.bound_low_check(args.p, args.lam, args.n, args.trials, args.seed)
    print(f"frequency {fmt(est.estimate)}")
    print(f"stderr {fmt(est.stderr)}")
    print(f"lower_bound {fmt(est.reference['lower'])}")
    return EXIT_OK


# percolation


def cmd_perc_sample(args, out):
    s = percolation.sample(_perc(args), args.depth, args.seed)
    lines = ["level,cells"] + [f"{k},{c}" for k, c in enumerate(s.level_sizes)]
    out.write(args.out, "\n".join(lines) + "\n")
    print("sizes " + ",".join(str(c) for c in s.level_sizes))
    return EXIT_OK


def cmd_perc_render(args, out):
    s = percolation.sample(_perc(args), args.depth, args.seed)
    level = args.depth if args.level is None else args.level
    img = percolation.render(s, level, args.pixel_scale)
    out.write(args.out, percolation.pgm_bytes(img))
    print(f"size {img.shape[1]}x{img.shape[0]}")
    print(f"black {int((img == 0).sum())}")
    return EXIT_OK


def cmd_perc_formula(args, out):
    print(fmt(percolation.perc_dim_formula(_perc(args), args.alpha)))
    return EXIT_OK


def cmd_perc_profile(args, out):
    s = percolation.sample(_perc(args), args.depth, args.seed)
    prof = percolation.perc_phi_profile(s, _phi(args.phi), args.tail)
    out.write(args.out, prof.to_csv(footer=True))
    print(f"sup {fmt(prof.sup)}")
    if prof.flags:
        print("flags " + ",".join(prof.flags))
    return EXIT_OK


# selfsim


def cmd_selfsim_nk(args, out):
    tp = selfsim.build_nk_sequence(args.m, args.K)
    lines = ["k,n_k,N_k,r_k,eps_k"]
    for k in range(tp.K):
        lines.append(f"{k + 1},{tp.n[k]},{tp.N[k]},{fmt(tp.r[k])},{fmt(tp.eps[k])}")
    out.write(args.out, "\n".join(lines) + "\n")
    if args.out is None:
        print("\n".join(lines))
    print(f"constraint_ok {tp.constraint_ok()}")
    print(f"bound_ok {tp.bound_ok()}")
    return EXIT_OK


def cmd_selfsim_points(args, out):
    tp = selfsim.build_nk_sequence(args.m, args.K)
    spec = selfsim.IFSSpec1D.explicit(tp, args.t_digits)
    cyl = selfsim.cylinder_points(spec, args.level)
    lines = ["numerator,multiplicity"] + [f"{int(x)},{int(c)}" for x, c in zip(cyl.numerators, cyl.mult)]
    out.write(args.out, "\n".join(lines) + "\n")
    print(f"denominator {cyl.denominator}")
    print(f"distinct {len(cyl.numerators)}")
    print(f"words {cyl.words}")
    return EXIT_OK


def cmd_selfsim_mtilde(args, out):
    tp = selfsim.build_nk_sequence(args.m, args.K)
    spec = selfsim.IFSSpec1D.explicit(tp, args.t_digits)
    ns = list(range(1, args.n_max + 1))
    vals = selfsim.m_tilde_series(spec, ns, args.window_constant)
    lines = ["n,m_tilde,log_per_n"] + [f"{n},{v},{fmt(math.log(v) / n)}" for n, v in zip(ns, vals)]
    out.write(args.out, "\n".join(lines) + "\n")
    if args.out is None:
        print("\n".join(lines))
    print(f"window_constant {fmt(args.window_constant)}")
    if args.phi:
        rep = selfsim.upper_bound_report(ns, vals, _phi(args.phi), args.m)
        print(f"statistic_tail_max {fmt(rep.tail_max)}")
        print(f"box_regime {rep.box_regime}")
    return EXIT_OK


def cmd_selfsim_threshold(args, out):
    print(fmt(selfsim.threshold_constant(args.m)))
    return EXIT_OK


def cmd_selfsim_microset(args, out):
    tp = selfsim.build_nk_sequence(args.m, max(args.k, 2) + 1)
    chk = selfsim.microset_density_check(tp, args.k, args.depth)
    print(f"claimed {fmt(chk.claimed)}")
    print(f"measured {fmt(chk.measured)}")
    print(f"max_gap {fmt(chk.gap)}")
    print(f"slack {fmt(chk.slack)}")
    print(f"ok {chk.ok}")
    return EXIT_OK


# seq


def cmd_seq_validate(args, out):
    rep = seqset.validate_regular_gaps(_seqspec(args), args.x_lo, args.x_hi)
    for k in ("decreasing", "fprime_increasing", "ratio_increasing"):
        print(f"{k} {getattr(rep, k)}")
    print(f"ratio_limit {fmt(rep.ratio_limit)}")
    print(f"gap_ratio_limit {fmt(rep.gap_ratio_limit)}")
    print(f"regular {rep.ok}")
    return EXIT_OK


def cmd_seq_points(args, out):
    ps = seqset.build_points(_seqspec(args), args.n_max)
    out.write(args.out, "\n".join(fmt(x) for x in ps.points) + "\n")
    print(f"points {len(ps)}")
    print(f"resolution {fmt(ps.delta)}")
    return EXIT_OK


def cmd_seq_formula(args, out):
    res = seqset.seq_dim_formula(_seqspec(args), _phi(args.phi), _grid(args), args.tail)
    lines = ["R,value,crossover"] + [f"{fmt(R)},{fmt(v)},{fmt(x)}" for R, v, x in zip(res.R, res.values, res.crossover)]
    out.write(args.out, "\n".join(lines) + "\n")
    print(f"whole_window {res.fires}")
    print(f"sup {fmt(res.sup)}")
    return EXIT_OK


def cmd_seq_profile(args, out):
    spec = _seqspec(args)
    prof = seqset.seq_direct_profile(seqset.build_points(spec, args.n_max), _phi(args.phi), _grid(args), args.tail)
    out.write(args.out, prof.anchored.to_csv(footer=True))
    print(f"sup {fmt(prof.sup)}")
    if prof.sweep is not None:
        print(f"sweep_sup {fmt(prof.sweep.sup)}")
    return EXIT_OK


def _add_grid(p, base=2.0, jmin=2, jmax=40):
    p.add_argument("--base", type=float, default=base, help="grid base b; scales R_j = b^-j")
    p.add_argument("--jmin", type=int, default=jmin)
    p.add_argument("--jmax", type=int, default=jmax)
    p.add_argument("--tail", type=float, default=0.5, help="fraction of the grid used for summaries")


def _add_out(p):
    p.add_argument("--out", help="output file (CSV, JSON or PGM by subcommand)")


def _add_theta(p):
    p.add_argument("--theta", help="offspring probabilities theta_0,...,theta_N (decimals or a/b)")
    p.add_argument("--dist", help="offspring law as JSON or a path to it")


def _add_perc(p):
    p.add_argument("--spec", help="percolation spec JSON or path")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--p", type=float, default=0.65)
    p.add_argument("--condition-depth", type=int, default=0)


def build_parser():
    def common(suppress):
        c = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS if suppress else None)
        c.add_argument("--threads", type=int, help="worker thread cap (default: PHIDIM_THREADS or 1)")
        c.add_argument("--seed", type=int, help="64-bit seed for sampling commands (default 0)")
        c.add_argument("--precision", choices=["float", "exact"], help="float (default) or exact rational arithmetic")
        c.add_argument("--force", action="store_true", help="overwrite existing output files")
        return c

    parser = argparse.ArgumentParser(prog="phidim", parents=[common(False)], description="phi-Assouad dimensions: exact formulas, constructions and covering checks.")
    parser.set_defaults(seed=0, precision="float", force=False)
    leaf = common(True)
    top = parser.add_subparsers(dest="group", required=True)

    def group(name, help_):
        g = top.add_parser(name, help=help_)
        return g.add_subparsers(dest="cmd", required=True)

    def cmd(sub, name, fn, help_):
        p = sub.add_parser(name, help=help_, description=help_, parents=[leaf])
        p.set_defaults(func=fn)
        return p

    g = group("dimfn", "dimension functions")
    p = cmd(g, "validate", cmd_dimfn_validate, "check monotonicity of phi and divergence of phi(R) log(1/R) on a grid (definition of a dimension function)")
    p.add_argument("--phi", required=True)
    p.add_argument("--witness", type=float, default=dimfun.DEFAULT_WITNESS)
    _add_grid(p)
    p = cmd(g, "ratio", cmd_dimfn_ratio, "ratios phi/psi on a grid, classifying rate windows (fundamental comparison of phi-dimensions)")
    p.add_argument("--phi", required=True)
    p.add_argument("--psi", required=True)
    _add_grid(p)
    _add_out(p)
    p = cmd(g, "envelope", cmd_dimfn_envelope, "largest dimension function below a given function (existence of a maximal dimension function)")
    p.add_argument("--phi", required=True)
    _add_grid(p)
    _add_out(p)

    g = group("moran", "homogeneous Moran sets")
    p = cmd(g, "dim", cmd_moran_dim, "phi-Assouad dimension from ratio data (exact Moran dimension formula)")
    p.add_argument("--spec", required=True)
    p.add_argument("--phi", required=True)
    p.add_argument("--n-max", type=int, default=1000)
    p.add_argument("--tail", type=float, default=0.5)
    _add_out(p)
    p = cmd(g, "upper", cmd_moran_upper, "upper phi-Assouad dimension from ratio data (exact Moran formula for the upper variant)")
    p.add_argument("--spec", required=True)
    p.add_argument("--phi", required=True)
    p.add_argument("--n-max", type=int, default=1000)
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--tail", type=float, default=0.5)
    _add_out(p)
    p = cmd(g, "build-gap", cmd_moran_build_gap, "Moran set with full phi-dimension but small psi-dimension (phi-dimensions are not continuous across windows)")
    p.add_argument("--phi", required=True)
    p.add_argument("--psi", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--n-scales", type=int, default=20)
    p.add_argument("--min-depth", type=int, default=0)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--n-max", type=int, default=0, help="also report both dimensions up to this row")
    p.add_argument("--ledger", help="CSV of witness scales")
    _add_out(p)
    p = cmd(g, "build-profile", cmd_moran_build_profile, "Moran set whose covering numbers track those of a given set (cover-profile construction)")
    p.add_argument("--points", help="text file of reals in [0,1]")
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--spec", help="Moran spec to materialize as the source set")
    p.add_argument("--depth", type=int, default=10)
    p.add_argument("--d", type=int, default=1)
    _add_out(p)
    p = cmd(g, "recover", cmd_moran_recover, "dimension function through witness pairs (attaining the Assouad dimension by a phi-dimension)")
    p.add_argument("--witnesses", required=True, help='JSON {"witnesses": [[R, theta], ...]} or path')
    _add_out(p)
    p = cmd(g, "interpolate", cmd_moran_interpolate, "dimension function with prescribed phi-dimension between box and Assouad values (interpolation by phi-dimensions)")
    p.add_argument("--spec", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--n-max", type=int, default=None)
    _add_grid(p, 2.0, 1, 1000)
    _add_out(p)

    g = group("gw", "Galton-Watson processes")
    p = cmd(g, "pmf", cmd_gw_pmf, "exact law of Z_k by convolution (generating function of Z_k)")
    _add_theta(p)
    p.add_argument("--k", type=int, required=True)
    _add_out(p)
    p = cmd(g, "tail", cmd_gw_tail, "P(Z_k >= m^{tk}) with its Markov ceiling (large deviations of Z_k)")
    _add_theta(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--t", type=float, required=True)
    p = cmd(g, "rate", cmd_gw_rate, "rate profile log_m(-log tail)/k against (t-1)gamma/(gamma-1) (large deviations of Z_k)")
    _add_theta(p)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--k-min", type=int, default=4)
    p.add_argument("--k-max", type=int, default=12)
    _add_out(p)
    p = cmd(g, "polybound", cmd_gw_polybound, "decay of N^{-(s+eps)k} log f_k(exp(m^{-(1-s)k})) (iterated generating function bound)")
    _add_theta(p)
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--eps", type=float, default=0.2)
    p.add_argument("--k-min", type=int, default=5)
    p.add_argument("--k-max", type=int, default=40)
    _add_out(p)
    p = cmd(g, "extinction", cmd_gw_extinction, "least fixed point of the generating function (extinction probability)")
    _add_theta(p)
    p = cmd(g, "sample", cmd_gw_sample, "seeded Galton-Watson tree, level sizes")
    _add_theta(p)
    p.add_argument("--depth", type=int, required=True)
    _add_out(p)
    p = cmd(g, "profile", cmd_gw_profile, "phi-profile of a sampled tree (phi-dimensions of Galton-Watson boundaries)")
    _add_theta(p)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--phi", default='{"kind": "loglog"}')
    p.add_argument("--tail", type=float, default=0.5)
    _add_out(p)
    p = cmd(g, "scan", cmd_gw_scan, "levels with a subtree of at least m^{tn} descendants (Borel-Cantelli events for trees)")
    _add_theta(p)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p = cmd(g, "mc-surviving", cmd_gw_mc_surviving, "Monte Carlo of large Z_k with many surviving individuals (deviations conditioned on survival)")
    _add_theta(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--trials", type=int, default=10**5)
    p = cmd(g, "mc-boundlow", cmd_gw_mc_boundlow, "frequency of at least lambda n of n events (lower bound for many occurring events)")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--lam", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, default=10**5)

    g = group("perc", "Mandelbrot percolation")
    p = cmd(g, "sample", cmd_perc_sample, "seeded percolation sample, cells per level")
    _add_perc(p)
    p.add_argument("--depth", type=int, required=True)
    _add_out(p)
    p = cmd(g, "render", cmd_perc_render, "binary PGM raster of retained cells")
    _add_perc(p)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--level", type=int, default=None)
    p.add_argument("--pixel-scale", type=int, default=1)
    _add_out(p)
    p = cmd(g, "formula", cmd_perc_formula, "closed-form phi-dimension of percolation (phi-dimensions of Mandelbrot percolation)")
    _add_perc(p)
    p.add_argument("--alpha", type=float, required=True)
    p = cmd(g, "profile", cmd_perc_profile, "phi-profile of a sample (phi-dimensions of Mandelbrot percolation)")
    _add_perc(p)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--phi", default='{"kind": "loglog"}')
    p.add_argument("--tail", type=float, default=0.5)
    _add_out(p)

    g = group("selfsim", "overlapping self-similar sets")
    p = cmd(g, "nk", cmd_selfsim_nk, "block lengths n_k and scales r_k of the explicit translation t (choice of the digit blocks)")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--K", type=int, default=10)
    _add_out(p)
    p = cmd(g, "points", cmd_selfsim_points, "exact cylinder endpoints S_sigma(0) with multiplicities")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--K", type=int, default=8)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--t-digits", type=int, default=16)
    _add_out(p)
    p = cmd(g, "mtilde", cmd_selfsim_mtilde, "overlap counts M_n and the box-dimension regime test (upper bound for self-similar sets)")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--K", type=int, default=8)
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--t-digits", type=int, default=16)
    p.add_argument("--window-constant", type=float, default=1.0)
    p.add_argument("--phi", default=None)
    _add_out(p)
    p = cmd(g, "threshold", cmd_selfsim_threshold, "C_m = log m / log(1 + 1/m^2) (threshold for full phi-dimension)")
    p.add_argument("--m", type=int, required=True)
    p = cmd(g, "microset", cmd_selfsim_microset, "finite-depth density of the k-th microset (amplification of microsets)")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--depth", type=int, default=12)

    g = group("seq", "decreasing sequence sets")
    p = cmd(g, "validate", cmd_seq_validate, "sampled regular-gaps conditions")
    p.add_argument("--spec", required=True)
    p.add_argument("--x-lo", type=float, default=10.0)
    p.add_argument("--x-hi", type=float, default=1e6)
    p = cmd(g, "points", cmd_seq_points, "the points f(1..n) with 0")
    p.add_argument("--spec", required=True)
    p.add_argument("--n-max", type=int, required=True)
    _add_out(p)
    p = cmd(g, "formula", cmd_seq_formula, "closed-form phi-dimension of a sequence set (phi-dimensions of decreasing sequences)")
    p.add_argument("--spec", required=True)
    p.add_argument("--phi", required=True)
    _add_grid(p, 10**0.25, 8, 32)
    _add_out(p)
    p = cmd(g, "profile", cmd_seq_profile, "direct covering profile of a sequence set (phi-dimensions of decreasing sequences)")
    p.add_argument("--spec", required=True)
    p.add_argument("--phi", required=True)
    p.add_argument("--n-max", type=int, default=1500)
    _add_grid(p, 10**0.25, 8, 32)
    _add_out(p)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    threads = args.threads
    if threads is not None and threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_SPEC
    config.set_threads(threads)
    try:
        return args.func(args, _Out(args))
    except PhidimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, FileExistsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except (ArithmeticError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    finally:
        config.set_threads(None)


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
