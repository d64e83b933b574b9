import itertools
import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from phidim import cover, moran
from phidim.cover import GridSetD, PointSet1D, SymbolicTree, count_cover_1d
from phidim.dimfun import Constant, LogLogRatio, ScaleGrid
from phidim.errors import DepthError, ResolutionError, SpecError

EPS = 1e-12


def brute_cover(points, r):
    """Smallest number of length-2r intervals, trying every split into consecutive runs."""
    p = sorted(points)
    n = len(p)
    if n == 0:
        return 0
    best = n
    for cuts in itertools.product((0, 1), repeat=n - 1):
        groups, start = [], 0
        for i, c in enumerate(cuts, 1):
            if c:
                groups.append(p[start:i])
                start = i
        groups.append(p[start:])
        if all(g[-1] - g[0] <= 2 * r * (1 + EPS) for g in groups):
            best = min(best, len(groups))
    return best


def test_single_point():
    ps = PointSet1D(np.array([0.3]))
    for r in (1e-6, 0.1, 10):
        assert count_cover_1d(ps, (0, 1), r) == 1


def test_tenth_lattice():
    ps = PointSet1D(np.linspace(0, 1, 11))
    assert count_cover_1d(ps, (0, 1), 0.05) == 6
    assert brute_cover(ps.points, 0.05) == 6


def test_sixteenth_lattice():
    ps = PointSet1D(np.arange(17) / 16)
    assert count_cover_1d(ps, (0, 1), 1 / 16) == 6
    assert brute_cover(ps.points, 1 / 16) == 6


def test_empty_window():
    ps = PointSet1D(np.array([0.0, 1.0]))
    assert count_cover_1d(ps, (0.2, 0.8), 0.01) == 0


def test_resolution_guard():
    ps = PointSet1D(np.linspace(0, 1, 5), delta=0.01)
    with pytest.raises(ResolutionError):
        count_cover_1d(ps, (0, 1), 0.001)


points12 = st.lists(st.floats(0, 1, allow_nan=False), min_size=1, max_size=12, unique=True)


@given(points12, st.floats(1e-3, 0.5))
def test_greedy_matches_exhaustive(pts, r):
    ps = PointSet1D(np.array(sorted(pts)))
    assert count_cover_1d(ps, (0, 1), r) == brute_cover(pts, r)


@given(points12, st.floats(1e-3, 0.3), st.floats(1.01, 4))
def test_count_nonincreasing_in_r(pts, r, k):
    ps = PointSet1D(np.array(sorted(pts)))
    assert count_cover_1d(ps, (0, 1), r * k) <= count_cover_1d(ps, (0, 1), r)


@given(points12, st.floats(0, 0.5), st.floats(0.5, 1), st.floats(1e-3, 0.3))
def test_nested_windows(pts, a, b, r):
    ps = PointSet1D(np.array(sorted(pts)))
    assert count_cover_1d(ps, (a, b), r) <= count_cover_1d(ps, (0, 1), r)


@given(points12, points12, st.floats(1e-3, 0.3))
def test_subadditive(a, b, r):
    A, B = PointSet1D(np.array(sorted(a))), PointSet1D(np.array(sorted(b)))
    U = PointSet1D(np.unique(np.concatenate([A.points, B.points])))
    assert count_cover_1d(U, (0, 1), r) <= count_cover_1d(A, (0, 1), r) + count_cover_1d(B, (0, 1), r)


def test_pointset_must_be_sorted():
    with pytest.raises(SpecError):
        PointSet1D(np.array([0.5, 0.1]))


def _full_grid(d, depth):
    levels = []
    for k in range(depth + 1):
        ax = np.arange(2**k)
        g = np.meshgrid(*([ax] * d), indexing="ij")
        levels.append(np.stack([x.ravel() for x in g], axis=1))
    return GridSetD(d, 2, np.arange(depth + 1) * math.log(2), levels)


def test_count_cells_full_square():
    gs = _full_grid(2, 4)
    assert cover.count_cells(gs, 0, (0, 0), 3) == 64
    assert gs.check_nested()


def test_count_cells_leaf():
    gs = _full_grid(1, 3)
    assert cover.count_cells(gs, 3, (5,), 3) == 1
    with pytest.raises(DepthError):
        cover.count_cells(gs, 2, (1,), 4)


def test_count_cells_moran():
    spec = moran.MoranSpec.from_ratios(1, [0.5, 0.5, 0.25, 0.25, 0.5, 0.25])
    gs = moran.materialize(spec, 6)
    for n in range(6):
        for m in range(n, 7):
            assert cover.count_cells(gs, n, (0,), m) == 2 ** (m - n)


def test_ball_mode_counts_neighbours():
    gs = _full_grid(2, 3)
    # interior level-1 cell: the whole 2x2 block of level-1 cells is in reach
    assert int(gs.descendant_counts(1, 3, ball=True).max()) == 64


def test_profile_on_interval():
    ps = PointSet1D(np.linspace(0, 1, 10**6 + 1), 1e-6)
    prof = cover.phi_profile(ps, Constant(1), ScaleGrid(2, 2, 9))
    assert np.all(prof.local >= 0.9) and np.all(prof.local <= 1.0 + 1e-12)
    assert prof.sup >= 0.9


def test_profile_single_point():
    ps = PointSet1D(np.array([0.5]))
    prof = cover.phi_profile(ps, Constant(1), ScaleGrid(2, 2, 9))
    assert np.all(prof.count == 1) and np.all(prof.local == 0)


def test_full_binary_tree():
    tree = SymbolicTree.full(2, 16)
    grid = ScaleGrid(math.e, 1, 8)
    prof = cover.phi_profile(tree, Constant(1), grid)
    np.testing.assert_allclose(prof.local, math.log(2), rtol=1e-14)
    up = cover.upper_phi_profile(tree, Constant(1), grid)
    assert up.sup == pytest.approx(math.log(2), rel=1e-14)


@pytest.mark.parametrize("phi", [Constant(0.5), Constant(1.5), LogLogRatio()], ids=repr)
def test_upper_dominates_plain(phi):
    spec = moran.MoranSpec.from_ratios(1, [0.5, 0.25, 0.5, 0.5, 0.125, 0.5, 0.25, 0.5, 0.5, 0.5, 0.25, 0.5, 0.5, 0.5])
    gs = moran.materialize(spec, 14)
    grid = ScaleGrid(2, 1, 12)
    try:
        a = cover.phi_profile(gs, phi, grid, ball=False)
    except ResolutionError:
        pytest.skip("no admissible scale")
    b = cover.upper_phi_profile(gs, phi, grid, ball=False)
    assert b.sup >= a.sup - 1e-12


def test_box_examples():
    grid = ScaleGrid(2, 2, 9)
    assert cover.box_profile(PointSet1D(np.linspace(0, 1, 2**12 + 1), 2**-12), grid).sup == pytest.approx(1, abs=0.1)
    assert cover.box_profile(PointSet1D(np.array([0.2])), grid).sup == 0
    spec = moran.MoranSpec.from_ratios(1, [0.25] * 10)
    gs = moran.materialize(spec, 10)
    pts = np.unique(np.concatenate([moran.corners(spec, 10, gs.levels[10])[:, 0], moran.corners(spec, 10, gs.levels[10])[:, 0] + 4.0**-10]))
    v = cover.box_profile(PointSet1D(pts, 4.0**-10), ScaleGrid(4, 2, 9)).sup
    assert abs(v - 0.5) <= 0.05


def test_profile_csv():
    tree = SymbolicTree.full(3, 8)
    prof = cover.phi_profile(tree, Constant(1), ScaleGrid(math.e, 1, 4))
    text = prof.to_csv(footer=True)
    lines = text.strip().splitlines()
    assert lines[0] == "scale_index,R,phi_R,gap_exponent,count,local_dim"
    assert lines[-1].startswith("# {")


def test_empty_grid_raises():
    with pytest.raises(ResolutionError):
        cover.phi_profile(SymbolicTree.full(2, 3), Constant(1), ScaleGrid(math.e, 5, 6))


@given(st.integers(2, 4), st.integers(3, 10), st.floats(0.2, 2.0))
def test_box_below_phi_on_trees(b, depth, c):
    tree = SymbolicTree.full(b, depth)
    grid = ScaleGrid(math.e, 1, depth)
    try:
        phi = cover.phi_profile(tree, Constant(c), grid).sup
    except ResolutionError:
        assume(False)
    assert cover.box_profile(tree, grid).sup <= phi + 0.05
