import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import make_event, naive_lift, oracle_tails, quantile_level
from strategies import interior_t, monotone_dnf
from threshold_lab import (IncreasingEvent, InputError, MeasureFamily, delta_moment, lift_report, quantile_map,
                           truncated_pushforward, verify_fs, verify_lift_bounds, verify_modified_poincare)
from threshold_lab.lift import digits_to_value, value_to_digits

EMB2 = MeasureFamily.embedded(2)
DICT = IncreasingEvent.dictator(1, 2)
MAJ = IncreasingEvent.majority(3, 2)


def test_quantile_map_examples():
    assert quantile_map(EMB2, 0.5, 0.3) == 1
    assert quantile_map(EMB2, 0.5, 0.5) == 2
    assert quantile_map(MeasureFamily.power([1, 2]), 0.5, 0.6) == 2
    with pytest.raises(InputError):
        quantile_map(EMB2, 0.5, 1.0)


@given(interior_t, st.floats(0, 1, exclude_max=True))
def test_quantile_map_matches_counting(t, u):
    fam = MeasureFamily.power([0.5, 1.0, 2.0])
    assert quantile_map(fam, t, u) == quantile_level(u, oracle_tails("power", 4, (0.5, 1.0, 2.0), t))


def test_pushforward_examples():
    np.testing.assert_allclose(truncated_pushforward(EMB2, 0.3, 2).q, [0.75, 0.25])
    for m in (1, 3, 6):
        np.testing.assert_allclose(truncated_pushforward(EMB2, 0.5, m).q, [0.5, 0.5])


@given(interior_t, st.integers(1, 12))
def test_pushforward_close_to_pmf(t, m):
    tp = truncated_pushforward(MeasureFamily.power([1, 2]), t, m)
    assert tp.max_deviation <= 2.0 ** (1 - m) + 1e-15
    assert tp.total_variation <= 3 * 2.0**-m + 1e-15
    assert tp.q.sum() == pytest.approx(1.0)
    assert np.all(tp.q * 2**m == np.round(tp.q * 2**m))


def test_digit_helpers():
    assert digits_to_value((1, 0, 1)) == 0.625
    assert value_to_digits(0.625, 3) == (1, 0, 1)
    with pytest.raises(InputError):
        value_to_digits(0.7, 2)


def test_delta_moment_examples():
    assert delta_moment(DICT, EMB2, 0.5, 1, 1, 0, 1) == pytest.approx(0.5)
    assert delta_moment(DICT, EMB2, 0.5, 1, 1, 0, 2) == pytest.approx(0.25)
    assert delta_moment(DICT, EMB2, 0.5, 2, 2, 0, 1) == 0.0
    assert delta_moment(DICT, EMB2, 0.75, 2, 2, 0, 1) == pytest.approx(0.25)


def test_lift_report_dictator():
    rep = lift_report(DICT, EMB2, 0.5, 1)
    assert (rep.m1, rep.m2, rep.variance, rep.total_influence) == pytest.approx((0.25, 0.25, 0.25, 1.0))


def test_constant_event_has_zero_moments():
    full = IncreasingEvent.from_table(2, 3, [True] * 9)
    rep = lift_report(full, MeasureFamily.embedded(3), 0.4, 3)
    assert rep.m1 == rep.m2 == rep.variance == 0
    assert verify_fs(full, MeasureFamily.embedded(3), 0.4, 3).status == "vacuous"
    assert verify_lift_bounds(full, MeasureFamily.embedded(3), 0.4, 3).passed


def test_fs_and_bounds_examples():
    chk = verify_fs(DICT, EMB2, 0.5, 1)
    assert chk.residual == pytest.approx(0.25) and chk.status == "pass"
    b = verify_lift_bounds(DICT, EMB2, 0.5, 1)
    assert (b.m2_vs_influence.lhs, b.m2_vs_influence.rhs) == pytest.approx((0.25, 0.5))
    assert (b.digit_vs_pivotal[0].lhs, b.digit_vs_pivotal[0].rhs) == pytest.approx((0.5, 0.5))
    assert (b.m1_vs_gamma.lhs, b.m1_vs_gamma.rhs) == pytest.approx((0.25, 0.5))
    assert b.passed
    assert verify_lift_bounds(MAJ, EMB2, 0.6, 4).passed
    rep = lift_report(MAJ, EMB2, 0.5, 3)
    assert rep.m2 <= 0.5 * rep.total_influence


@given(monotone_dnf(max_n=2, max_r=3), interior_t, st.integers(1, 3))
def test_lift_matches_digit_enumeration(case, t, m):
    n, r, clauses = case
    fam = MeasureFamily.power([1.0 + k for k in range(r - 1)])
    rep = lift_report(make_event(n, r, clauses), fam, t, m)
    abs_m, sq_m, m1, m2, v, nu, piv, inf, q = naive_lift(clauses, n, r, oracle_tails("power", r, [1.0 + k for k in
                                                                                                   range(r - 1)], t), m)
    np.testing.assert_allclose(rep.q, q, atol=1e-15)
    np.testing.assert_allclose(rep.abs_moments, abs_m, atol=1e-12)
    np.testing.assert_allclose(rep.sq_moments, sq_m, atol=1e-12)
    assert (rep.m1, rep.m2, rep.variance, rep.nu) == pytest.approx((m1, m2, v, nu), abs=1e-12)
    np.testing.assert_allclose(rep.pivotal, piv, atol=1e-12)
    assert rep.total_influence == pytest.approx(sum(inf), abs=1e-12)


def test_lift_matches_enumeration_three_coordinates():
    clauses = [[(0, 2), (1, 2)], [(1, 2), (2, 2)], [(0, 2), (2, 2)]]
    for t in (0.3, 0.5, 0.6):
        rep = lift_report(MAJ, EMB2, t, 3)
        abs_m, sq_m, m1, m2, v, *_ = naive_lift(clauses, 3, 2, oracle_tails("embedded", 2, None, t), 3)
        np.testing.assert_allclose(rep.abs_moments, abs_m, atol=1e-12)
        assert (rep.m1, rep.m2, rep.variance) == pytest.approx((m1, m2, v), abs=1e-12)


@given(monotone_dnf(max_n=3), interior_t, st.integers(1, 5))
def test_lift_properties(case, t, m):
    n, r, clauses = case
    ev, fam = make_event(n, r, clauses), MeasureFamily.embedded(r)
    rep = lift_report(ev, fam, t, m)
    # indicator lifts: Delta takes values in {0, +-1/2}
    np.testing.assert_allclose(rep.sq_moments, 0.5 * rep.abs_moments, atol=1e-15)
    assert verify_lift_bounds(ev, fam, t, m).passed
    assert verify_fs(ev, fam, t, m).status != "fail"


@given(monotone_dnf(max_n=3), interior_t, st.data())
def test_relabel_permutes_digit_moments(case, t, data):
    n, r, clauses = case
    ev = make_event(n, r, clauses)
    perm = data.draw(st.permutations(range(n)))
    fam = MeasureFamily.embedded(r)
    a, b = lift_report(ev, fam, t, 3), lift_report(ev.relabel(perm), fam, t, 3)
    for j in range(n):
        np.testing.assert_allclose(b.abs_moments[:, perm[j]], a.abs_moments[:, j], atol=1e-15)


@given(monotone_dnf(max_n=3), interior_t)
def test_truncated_measure_grows_with_depth(case, t):
    # truncating u to m digits rounds it down, and deeper truncations round less
    n, r, clauses = case
    ev, fam = make_event(n, r, clauses), MeasureFamily.power([1.0 + k for k in range(r - 1)])
    nus = [lift_report(ev, fam, t, m).nu for m in range(1, 8)]
    assert all(b >= a - 1e-15 for a, b in zip(nus, nus[1:]))


def test_moment_sums_need_not_grow_with_depth():
    # M1 for the dictator at t=0.7 falls from 1/4 once the 0.3 cutoff is resolved
    m1 = [lift_report(DICT, EMB2, 0.7, m).m1 for m in range(1, 6)]
    assert m1[0] == pytest.approx(0.25) and m1[1] == pytest.approx(0.25)
    assert m1[2] < m1[1]


def test_modified_poincare_trend_dictator_matches_fs():
    trend = verify_modified_poincare(DICT, EMB2, 0.5, 6)
    for m, chk in enumerate(trend.checks, start=1):
        assert chk == verify_fs(DICT, EMB2, 0.5, m)
    assert trend.passed


def test_modified_poincare_majority_dyadic_cutoff():
    trend = verify_modified_poincare(MAJ, EMB2, 0.5, 6)
    assert all(r.variance == pytest.approx(0.25) for r in trend.reports)
    assert all(r.m2 == pytest.approx(trend.reports[0].m2) for r in trend.reports)


def test_modified_poincare_variance_error_shrinks():
    trend = verify_modified_poincare(MAJ, EMB2, 0.3, 8)
    exact = 0.216 * (1 - 0.216)
    assert trend.exact_variance == pytest.approx(exact)
    errs = trend.variance_error
    assert all(b <= a + 1e-15 for a, b in zip(errs, errs[1:]))
    assert errs[-1] < errs[0] / 10
    assert trend.passed


def test_lift_rejects_bad_arguments():
    with pytest.raises(InputError):
        lift_report(DICT, EMB2, 0.5, 0)
    with pytest.raises(InputError):
        delta_moment(DICT, EMB2, 0.5, 2, 3, 0, 1)
    with pytest.raises(InputError):
        delta_moment(DICT, EMB2, 0.5, 2, 1, 0, 3)
    with pytest.raises(InputError):
        verify_modified_poincare(DICT, EMB2, 0.5, 0)


def test_fs_uses_natural_log():
    rep = lift_report(MAJ, EMB2, 0.6, 4)
    chk = verify_fs(MAJ, EMB2, 0.6, 4)
    assert chk.lhs == pytest.approx(0.5 * rep.variance * math.log(rep.variance / rep.m1))
