import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phidim import selfsim as S
from phidim.dimfun import Constant, LogLogRatio
from phidim.errors import CapacityError, DomainError, SpecError

TP3 = S.build_nk_sequence(3, 6)


def _words_oracle(m, shifts, den, n):
    """S_sigma(0) = sum_i a_i m^{-i} for every word, exact."""
    pts = {}
    for w in itertools.product(shifts, repeat=n):
        v = sum(Fraction(a, den) / m ** (i + 1) for i, a in enumerate(w))
        pts[v] = pts.get(v, 0) + 1
    return pts


def test_nk_examples():
    assert TP3.n[:3] == [1, 1, 2]
    assert TP3.r[1] == Fraction(10, 27)
    assert TP3.r[2] == Fraction(100, 2187)
    assert -math.log(float(TP3.r[2])) == pytest.approx(3.085, abs=1e-3)
    assert -math.log(float(TP3.r[2])) <= 2 * 9 * math.log(3)


@pytest.mark.parametrize("m", [3, 4, 5, 7, 10])
def test_nk_constraint_and_bound(m):
    tp = S.build_nk_sequence(m, 7)
    assert tp.constraint_ok()
    assert tp.bound_ok(1.0)
    for k in range(tp.K - 1):
        # minimal admissible block: one fewer digit violates the lower end
        assert Fraction(m, m ** (tp.n[k + 1] - 1)) > tp.r[k]


def test_nk_errors():
    with pytest.raises(DomainError):
        S.build_nk_sequence(2, 3)
    with pytest.raises(DomainError):
        S.build_nk_sequence(3, 0)


def test_digits_of_t():
    assert TP3.digits(8) == [1, 1, 0, 1, 0, 0, 0, 1]
    assert TP3.t_numerator(4) == 1 * 27 + 1 * 9 + 0 + 1
    with pytest.raises(SpecError):
        S.build_nk_sequence(3, 2).digits(10)


def test_level_one_points():
    spec = S.IFSSpec1D(10, (0, 1, 10), 1)
    cyl = S.cylinder_points(spec, 1)
    assert [Fraction(int(v), cyl.denominator) for v in cyl.numerators] == [0, Fraction(1, 100), Fraction(1, 10)]


@pytest.mark.parametrize("n", [1, 3, 6])
def test_points_match_word_oracle(n):
    spec = S.IFSSpec1D.explicit(TP3, 8)
    cyl = S.cylinder_points(spec, n)
    want = _words_oracle(3, spec.shifts, 3**8, n)
    got = {Fraction(int(v), cyl.denominator): int(c) for v, c in zip(cyl.numerators, cyl.mult)}
    assert got == want


@pytest.mark.parametrize("n", [2, 5, 9])
def test_self_similarity(n):
    spec = S.IFSSpec1D.explicit(TP3, 10)
    lo = S.cylinder_points(spec, n)
    hi = S.cylinder_points(spec, n + 1)
    base = Fraction(1, lo.denominator)
    images = set()
    for a in spec.shifts:
        for v in lo.numerators:
            images.add((int(v) * base + Fraction(a, 3**10)) / 3)
    assert images == {Fraction(int(v), hi.denominator) for v in hi.numerators}
    assert int(hi.mult.sum()) == 3 ** (n + 1)


@given(st.integers(1, 10), st.integers(0, 12))
def test_points_in_hull_and_counted(n, extra):
    spec = S.IFSSpec1D.explicit(TP3, min(n + extra, sum(TP3.n)))
    cyl = S.cylinder_points(spec, n)
    x = cyl.floats()
    assert x.min() >= 0 and x.max() <= 1 / 2 + 1e-15
    assert len(x) <= 3**n
    assert np.all(np.diff(cyl.numerators.astype(np.int64)) > 0)


def test_big_numerators_use_exact_ints():
    spec = S.IFSSpec1D.explicit(S.build_nk_sequence(3, 8), 40)
    cyl = S.cylinder_points(spec, 4)
    assert cyl.numerators.dtype == object
    ref = S.cylinder_points(S.IFSSpec1D.explicit(S.build_nk_sequence(3, 8), 30), 4)
    np.testing.assert_allclose(cyl.floats(), ref.floats(), atol=3.0**-30)


def test_point_budget():
    with pytest.raises(CapacityError):
        S.cylinder_points(S.IFSSpec1D(3, (0, 1, 2, 5, 7, 8), 1), 10, budget=10**5)


def test_m_tilde_separated():
    spec = S.IFSSpec1D.digits(3, [0, 2])
    assert max(S.m_tilde_series(spec, range(1, 13))) <= 2


def test_m_tilde_full_overlap():
    spec = S.IFSSpec1D.digits(3, [0, 0, 0])
    assert S.m_tilde_series(spec, range(1, 8)) == [3**n for n in range(1, 8)]


def test_m_tilde_explicit_trend():
    spec = S.IFSSpec1D.explicit(TP3, 16)
    ns = list(range(1, 13))
    vals = S.m_tilde_series(spec, ns)
    rate = [math.log(v) / n for n, v in zip(ns, vals)]
    assert all(b <= a + 1e-12 for a, b in zip(rate, rate[1:]))
    assert vals[-1] < 3**6


@given(st.integers(2, 9), st.floats(0, 3), st.floats(0, 3))
def test_m_tilde_monotone_in_window(n, a, b):
    spec = S.IFSSpec1D.explicit(TP3, 12)
    cyl = S.cylinder_points(spec, n)
    lo, hi = sorted((a, b))
    assert S.m_tilde(cyl, lo, spec.diameter) <= S.m_tilde(cyl, hi, spec.diameter)


def test_upper_bound_verdicts():
    ns = np.arange(10, 400)
    assert S.upper_bound_report(ns, np.full(ns.shape, 7.0), lambda n: 1.0, 3).box_regime
    far = np.arange(10, 10**5, 97)
    assert S.upper_bound_report(far, far.astype(float), Constant(0.5), 3).box_regime
    C = S.threshold_constant(3)
    rep = S.upper_bound_report(ns, ns.astype(float), lambda n: math.log(n) / (C * n), 3)
    assert not rep.box_regime
    np.testing.assert_allclose(rep.statistic, C, rtol=1e-12)


def test_upper_bound_bounded_series_with_builtins():
    # under loglog the statistic decays like 1/log n, so go far out
    ns = 10 ** np.arange(10, 18)
    rep = S.upper_bound_report(ns, np.full(ns.shape, 4.0), LogLogRatio(), 3)
    assert rep.box_regime


def test_upper_bound_input_errors():
    with pytest.raises(SpecError):
        S.upper_bound_report([1, 2], [1.0], Constant(1), 3)
    with pytest.raises(SpecError):
        S.upper_bound_report([1, 2], [0.5, 1.0], Constant(1), 3)


def test_amplify():
    assert S.microset_amplify((Fraction(1), Fraction(1)), 1, Fraction(1, 2), 1) == (Fraction(1), Fraction(1, 2))
    for c in (0, 1.5):
        with pytest.raises(DomainError):
            S.microset_amplify((1, 1), c, 0.5, 1)
    with pytest.raises(DomainError):
        S.microset_amplify((1, 1), 0.5, 1.0, 1)


@pytest.mark.parametrize("m", [3, 5, 8])
def test_ledger_reproduces_recursion(m):
    tp = S.build_nk_sequence(m, 6)
    led = S.microset_ledger(tp)
    assert [r for r, _ in led] == tp.r
    assert [e for _, e in led] == tp.eps


def test_density_checks():
    first = S.microset_density_check(TP3, 1, 12)
    assert first.measured <= first.claimed
    for k in (2, 3):
        d = S.microset_density_check(TP3, k, 12)
        assert d.measured <= d.claimed + 3.0**-6
        assert d.ok


def test_density_on_full_grid():
    x = np.linspace(0, 1, 101)
    radius, gap, _ = S.max_gap_density(x, 1.0)
    assert gap == pytest.approx(0.01, rel=1e-9)
    assert radius == pytest.approx(0.005, rel=1e-9)


def test_density_errors():
    with pytest.raises(DomainError):
        S.microset_density_check(TP3, 0, 8)
    with pytest.raises(SpecError):
        S.max_gap_density([], 1.0)


def test_threshold_constant():
    assert S.threshold_constant(3) == pytest.approx(10.427173, abs=1e-6)
    vals = [S.threshold_constant(m) for m in range(3, 65)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    with pytest.raises(DomainError):
        S.threshold_constant(2)
