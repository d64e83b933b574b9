import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phidim import cover, seqset
from phidim.cover import PointSet1D
from phidim.dimfun import Constant, LogLogRatio, ScaleGrid
from phidim.errors import SpecError

GRID = ScaleGrid(10**0.25, 8, 32)  # R from 1e-2 down to 1e-8
SQRT = seqset.ExpPower(0.5)
PTS = seqset.build_points(SQRT, 1500)


@pytest.mark.parametrize("spec", [seqset.ExpPower(0.5), seqset.ExpPower(0.3), seqset.ExpLogPower(2.0), seqset.ExpLogPower(1.5)], ids=repr)
def test_regular_gaps_pass(spec):
    rep = seqset.validate_regular_gaps(spec, 10, 1e6)
    assert rep.ok
    assert rep.gap_ratio_limit == pytest.approx(1, abs=0.01)


def test_lacunary_table_fails():
    rep = seqset.validate_regular_gaps(seqset.Tabulated(np.exp(-np.arange(1, 60.0))), 2, 60)
    assert not rep.ok
    assert rep.ratio_limit == pytest.approx(math.exp(-1), rel=1e-9)


def test_spec_validation():
    with pytest.raises(SpecError):
        seqset.ExpPower(1.0)
    with pytest.raises(SpecError):
        seqset.ExpLogPower(1.0)
    with pytest.raises(SpecError):
        seqset.Tabulated([1.0, 0.5, 0.6, 0.1])
    with pytest.raises(SpecError):
        seqset.from_json({"kind": "harmonic"})


@pytest.mark.parametrize("spec", [seqset.ExpPower(0.5), seqset.ExpLogPower(2.0), seqset.Tabulated([0.9, 0.5, 0.3, 0.2, 0.15])], ids=repr)
def test_json_roundtrip(spec):
    back = seqset.from_json(json.dumps(spec.to_json()))
    x = np.array([1.0, 2.0, 3.5])
    np.testing.assert_allclose(back.log_f(x), spec.log_f(x))


def test_build_points_small():
    ps = seqset.build_points(SQRT, 5)
    want = [0.0] + [math.exp(-math.sqrt(n)) for n in (5, 4, 3, 2, 1)]
    np.testing.assert_allclose(ps.points, want, rtol=1e-14)
    assert len(ps.points) == 6
    assert ps.delta == pytest.approx(math.exp(-2) - math.exp(-math.sqrt(5)), rel=1e-12)
    with pytest.raises(SpecError):
        seqset.build_points(SQRT, 1)


@given(st.sampled_from([seqset.ExpPower(0.5), seqset.ExpPower(0.7), seqset.ExpLogPower(2.0)]), st.integers(20, 400))
def test_build_points_gaps(spec, n):
    ps = seqset.build_points(spec, n)
    assert len(ps.points) == n + 1
    gaps = np.diff(ps.points[1:])
    # gaps between consecutive f(k) shrink toward 0 beyond the start of the range
    assert np.all(np.diff(gaps[len(gaps) // 4 :]) > 0)


def test_build_points_underflow_warns():
    with pytest.warns(UserWarning, match="underflows"):
        seqset.build_points(seqset.ExpPower(0.9), 2000)


@pytest.mark.parametrize("phi", [Constant(0.5), Constant(1.0), LogLogRatio()], ids=repr)
def test_formula_matches_direct(phi):
    f = seqset.seq_dim_formula(SQRT, phi, GRID)
    d = seqset.seq_direct_profile(PTS, phi, GRID, sweep=False)
    assert abs(f.sup - d.sup) <= 0.1


def test_formula_matches_direct_log_power():
    spec = seqset.ExpLogPower(2.0)
    pts = seqset.build_points(spec, 3000)
    for phi in (Constant(0.5), LogLogRatio()):
        assert abs(seqset.seq_dim_formula(spec, phi, GRID).sup - seqset.seq_direct_profile(pts, phi, GRID).sup) <= 0.1


@pytest.mark.parametrize("phi", [Constant(0.5), Constant(1.0), LogLogRatio()], ids=repr)
def test_classifier_agrees_with_covering(phi):
    f = seqset.seq_dim_formula(SQRT, phi, GRID)
    d = seqset.seq_direct_profile(PTS, phi, GRID, sweep=False)
    tail = d.anchored.local[-max(1, len(d.anchored.local) // 2) :]
    assert f.fires == bool(np.all(tail > 0.9))
    if f.fires:
        assert f.sup == 1


def test_count_decomposition():
    phi = Constant(0.5)
    f = seqset.seq_dim_formula(SQRT, phi, GRID)
    for R, val in zip(f.R, f.values):
        r = R**1.5
        model = math.exp(val * 0.5 * math.log(1 / R))
        direct = cover.count_cover_1d(PTS, (0.0, R), r / 2)
        assert model / 4 <= direct <= 4 * model


@pytest.mark.parametrize("phi", [Constant(0.5), LogLogRatio()], ids=repr)
def test_sweep_dominated_by_anchor(phi):
    d = seqset.seq_direct_profile(PTS, phi, GRID)
    assert d.sweep.sup <= d.anchored.sup + 0.05


def test_single_point():
    d = seqset.seq_direct_profile(PointSet1D(np.array([0.0])), Constant(1.0), GRID)
    assert np.all(d.anchored.local == 0) and np.all(d.sweep.local == 0)
