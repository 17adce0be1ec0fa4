import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from pgss import InputError, ModelSpec, build_ensemble, one_step_predictive
from pgss.analytics import (
    check_monotone_in_b, check_monotone_in_t, check_nondecreasing, first_crossing,
    fixed_point_gap, fixed_point_lower_bound, log_zero_prob_sequence, pgf, pgf_general,
    pgf_unit, predictive_mean, scan_fixed_point_gap, tower_crosscheck, variance_track,
    zero_prob_sequence, zero_prob_table,
)


# --- brute-force oracle: enumerate y_1 (and y_2) with scipy's negative binomial

def nb(a, b, g):
    return stats.nbinom(g * a, g * b / (g * b + 1))


def enumerate_y2(spec, cut=400):
    """Joint law of (y_1, y_2 | y_1): returns weights and the conditional NB per y_1."""
    g, a0, b0 = spec.gamma, spec.a0, spec.b0
    ys = np.arange(cut)
    w = nb(a0, b0, g).pmf(ys)
    b1 = g * b0 + 1
    return ys, w, b1


def oracle_p0_t2(spec, s=0.0):
    g = spec.gamma
    ys, w, b1 = enumerate_y2(spec)
    a1 = g * spec.a0 + ys
    cond = (g * b1 / (g * b1 + 1 - s)) ** (g * a1)
    return float(np.sum(w * cond))


def oracle_p0_t3(spec, cut=300):
    g, a0, b0 = spec.gamma, spec.a0, spec.b0
    b1 = g * b0 + 1
    b2 = g * b1 + 1
    y1 = np.arange(cut)
    w1 = nb(a0, b0, g).pmf(y1)
    total = 0.0
    for y, wy in zip(y1, w1):
        if wy < 1e-300:
            continue
        a1 = g * a0 + y
        y2 = np.arange(cut)
        w2 = nb(a1, b1, g).pmf(y2)
        a2 = g * a1 + y2
        total += wy * np.sum(w2 * (g * b2 / (g * b2 + 1)) ** (g * a2))
    return total


def oracle_var_t2(spec):
    g = spec.gamma
    ys, w, b1 = enumerate_y2(spec)
    a1 = g * spec.a0 + ys
    m = a1 / b1
    v = m * (g * b1 + 1) / (g * b1)
    mean = np.sum(w * m)
    return float(np.sum(w * (v + m * m)) - mean**2), float(mean)


def oracle_var_t3(spec, cut=300):
    g, a0, b0 = spec.gamma, spec.a0, spec.b0
    b1 = g * b0 + 1
    b2 = g * b1 + 1
    ex = ex2 = 0.0
    for y, wy in zip(np.arange(cut), nb(a0, b0, g).pmf(np.arange(cut))):
        a1 = g * a0 + y
        y2 = np.arange(cut)
        w2 = nb(a1, b1, g).pmf(y2)
        m = (g * a1 + y2) / b2
        v = m * (g * b2 + 1) / (g * b2)
        ex += wy * np.sum(w2 * m)
        ex2 += wy * np.sum(w2 * (v + m * m))
    return ex2 - ex**2


ORACLE_SPECS = [ModelSpec(6.5, 1.2, 0.75), ModelSpec(1.0, 4.0, 0.75), ModelSpec(0.5, 0.5, 0.3),
                ModelSpec(2.0, 20.0, 0.9)]


# --- moments ------------------------------------------------------------------

def test_predictive_mean(paper_spec):
    assert predictive_mean(paper_spec, 1) == pytest.approx(5.416666666666667)
    assert predictive_mean(paper_spec, 500) == predictive_mean(paper_spec, 1)
    assert predictive_mean(ModelSpec(1, 1, 0.5), 7) == 1.0
    with pytest.raises(InputError):
        predictive_mean(paper_spec, 0)


def test_variance_track_t1(paper_spec):
    m = variance_track(paper_spec, 5)
    nb1 = one_step_predictive(paper_spec.initial_state(), paper_spec)
    assert m.var_y[0] == pytest.approx(nb1.variance, rel=1e-14)
    assert m.var_y[0] == pytest.approx((1.9 / (0.75 * 1.2)) * (6.5 / 1.2), rel=1e-15)
    assert m.var_a[0] == 0
    assert np.all(m.mean_y == 6.5 / 1.2)
    assert m.b_trace[0] == 1.2 and m.b_trace.size == 6


@pytest.mark.parametrize("spec", ORACLE_SPECS)
def test_variance_track_against_enumeration(spec):
    m = variance_track(spec, 3)
    v2, mean2 = oracle_var_t2(spec)
    assert mean2 == pytest.approx(spec.mean, rel=1e-10)
    assert m.var_y[1] == pytest.approx(v2, rel=1e-9)
    assert m.var_y[2] == pytest.approx(oracle_var_t3(spec), rel=1e-8)


def test_variance_growth(paper_spec):
    m = variance_track(paper_spec, 400)
    assert np.all(np.diff(m.var_y[1:]) > 0)
    assert np.all(np.diff(m.var_a) > 0)


# --- p.g.f. -------------------------------------------------------------------

def test_pgf_unit_base_case():
    assert pgf_unit(0.0, 1, 1.2, 0.75) == pytest.approx((0.9 / 1.9) ** 0.75, rel=1e-15)
    assert pgf_unit(0.0, 1, 1.2, 0.75) == pytest.approx(0.570974, abs=1e-6)


def test_pgf_unit_second_step_at_fixed_point():
    g = 0.75
    p1 = g**g
    by_hand = (p1 * 3.0 / (3.0 + 1.0 - p1)) ** g
    assert pgf_unit(0.0, 2, 4.0, g) == pytest.approx(by_hand, rel=1e-14)
    assert by_hand == pytest.approx(0.81153, abs=1e-5)
    assert pgf_unit(0.0, 2, 4.0, g) == pytest.approx(oracle_p0_t2(ModelSpec(1.0, 4.0, g)), rel=1e-12)


def test_pgf_unit_second_step_by_simulation():
    n = 10**6
    e = build_ensemble(ModelSpec(1.0, 4.0, 0.75), 2, n, 31, "path")
    z = (e.counts[:, 1] == 0).mean()
    p = pgf_unit(0.0, 2, 4.0, 0.75)
    assert abs(z - p) <= 3 * math.sqrt(p * (1 - p) / n)


@pytest.mark.parametrize("spec", ORACLE_SPECS)
@pytest.mark.parametrize("s", [-1.0, -0.5, 0.0, 0.5, 0.9])
def test_pgf_t2_against_enumeration(spec, s):
    assert pgf(s, 2, spec) == pytest.approx(oracle_p0_t2(spec, s), rel=1e-11)


@pytest.mark.parametrize("spec", ORACLE_SPECS)
def test_zero_prob_t3_against_enumeration(spec):
    assert pgf(0.0, 3, spec) == pytest.approx(oracle_p0_t3(spec), rel=1e-10)


def test_pgf_t1_equals_negbin(paper_spec):
    nb1 = one_step_predictive(paper_spec.initial_state(), paper_spec)
    assert abs(pgf(0.0, 1, paper_spec) - nb1.pmf(0)) <= 1e-12
    assert pgf(0.0, 1, paper_spec) == pytest.approx(0.570974458572690**6.5, rel=1e-12)
    for s in (-0.7, 0.3, 0.95):
        assert pgf(s, 1, paper_spec) == pytest.approx(nb1.pgf(s), rel=1e-13)


def test_pgf_by_simulation(paper_spec):
    n = 200_000
    y = build_ensemble(paper_spec, 8, n, 5, "chain").counts[:, 7]
    for s in (-0.5, 0.5, 0.9):
        v = s ** y.astype(float)
        assert abs(v.mean() - pgf(s, 8, paper_spec)) <= 3 * v.std() / math.sqrt(n)


@pytest.mark.parametrize("t", [1, 5, 20, 50])
def test_pgf_normalization(t):
    for b0, g in [(1.2, 0.75), (0.5, 0.3), (10.0, 0.9)]:
        assert abs(pgf_unit(1 - 1e-12, t, b0, g) - 1) <= 1e-9


def test_pgf_unit_a0_one(paper_spec):
    spec = ModelSpec(1.0, 1.2, 0.75)
    assert pgf(0.3, 7, spec) == pgf_unit(0.3, 7, 1.2, 0.75)


@given(st.floats(0.1, 20), st.floats(0.1, 20), st.floats(0.05, 0.95), st.floats(-1, 0.999),
       st.integers(1, 40))
@settings(max_examples=100, deadline=None)
def test_power_law_two_orders(a0, b0, g, s, t):
    spec = ModelSpec(a0, b0, g)
    assert abs(pgf(s, t, spec) - pgf_unit(s, t, b0, g) ** a0) <= 1e-12
    assert abs(pgf_general(s, t, spec) - pgf(s, t, spec)) <= 1e-12


def test_pgf_domain():
    with pytest.raises(InputError):
        pgf_unit(1.0, 3, 1.0, 0.5)
    with pytest.raises(InputError):
        pgf_unit(-1.5, 3, 1.0, 0.5)
    with pytest.raises(InputError):
        pgf_unit(0.0, 0, 1.0, 0.5)


# --- zero probabilities ---------------------------------------------------------

@pytest.mark.parametrize("g", [0.1, 0.3, 0.5, 0.75, 0.9])
def test_fixed_point_start(g):
    tab = zero_prob_table(ModelSpec(1.0, 1 / (1 - g), g), 300)
    assert abs(tab.p(1) - g**g) <= 1e-12
    assert np.all(tab.unit_zero_prob >= fixed_point_lower_bound(g))
    assert fixed_point_lower_bound(0.75) == pytest.approx(0.421875, rel=1e-15)


def test_table_entries_match_pgf(paper_spec):
    tab = zero_prob_table(paper_spec, 40)
    for t, k in [(1, 0), (3, 5), (10, 30), (40, 0), (20, 20)]:
        assert tab.p(t, k) == pytest.approx(pgf_unit(0.0, t, tab.b_traj[k], 0.75), rel=1e-13)
    assert tab.zero_prob[0] == pytest.approx(0.026182338229165079, rel=1e-13)


def test_table_monotone_on_grid(paper_spec):
    tab = zero_prob_table(paper_spec, 120)
    for t in range(1, 120):
        row, nxt = tab.log_rows[t - 1], tab.log_rows[t]
        assert np.all(np.exp(row) > 0) and np.all(np.exp(row) < 1)
        assert np.all(nxt >= row[:-1] - 1e-12)  # in t, fixed k
        assert np.all(np.diff(row) >= -1e-12)  # in k (b^(k) increases here)


@pytest.mark.parametrize("spec", [ModelSpec(6.5, 1.2, 0.75), ModelSpec(1.0, 0.5, 0.9),
                                  ModelSpec(2.0, 30.0, 0.3), ModelSpec(1.0, 2.0, 0.5)])
def test_fast_sequence_matches_table(spec):
    T = 700
    tab = zero_prob_table(spec, T)
    assert np.allclose(log_zero_prob_sequence(spec, T), tab.log_unit_zero_prob, rtol=1e-13, atol=0)
    assert np.allclose(zero_prob_sequence(spec, T), tab.zero_prob, rtol=1e-12, atol=0)


def test_convergence_examples(paper_spec):
    fixed = ModelSpec(1.0, 4.0, 0.75)
    p = zero_prob_sequence(fixed, 5000)
    assert p[199] > p[49] > p[0]
    assert p[-1] > 0.99


def test_first_crossing(paper_spec):
    t = first_crossing(paper_spec, 0.9)
    p = zero_prob_sequence(paper_spec, t)
    assert p[-1] > 0.9 >= p[-2]
    assert first_crossing(paper_spec, 0.999, t_max=1000) is None


# --- checks ---------------------------------------------------------------------

def test_monotone_in_b_examples():
    assert check_monotone_in_b(0.75, 10, [0.5, 1, 2, 4, 8]).ok
    r = check_monotone_in_b(0.75, 1, np.geomspace(0.01, 100, 50))
    assert r.ok and r.strict


def test_nondecreasing_detector():
    values = zero_prob_table(ModelSpec(1.0, 1.2, 0.75), 10).unit_zero_prob.copy()
    values[4] = values[6] + 1e-6
    r = check_nondecreasing(values, labels=range(1, 11))
    assert not r.ok
    assert r.violations[0][:2] == (5, 6)
    assert check_nondecreasing([0.1, 0.1, 0.2]).ok
    assert not check_nondecreasing([0.1, 0.1, 0.2]).strict
    assert check_nondecreasing([0.3, 0.3 - 1e-13]).ok


def test_monotone_in_t_examples(paper_spec):
    assert check_monotone_in_t(paper_spec, 200).ok
    r = check_monotone_in_t(ModelSpec(1.0, 4.0, 0.75), 200)
    assert r.ok and r.strict
    assert check_monotone_in_t(paper_spec, 1).ok


@pytest.mark.parametrize("g", np.round(np.arange(0.1, 1.0, 0.1), 1))
def test_fixed_point_gap(g):
    rep = scan_fixed_point_gap(g)
    assert rep.ok and rep.min_gap > 0 and rep.n_points == 10_000


def test_fixed_point_gap_matches_direct_evaluation():
    g = 0.6
    gb = g / (1 - g)
    for p in (0.3, 0.5, 0.9, 0.999):
        direct = g * math.log(p * gb / (gb + 1 - p)) - math.log(p)
        assert fixed_point_gap(g, 1 - p) == pytest.approx(direct, rel=1e-9)


def test_tower_t0_zero(paper_spec):
    tc = tower_crosscheck(paper_spec, 7, 0, 10, 0)
    assert tc.mc_se == 0 and tc.lhs == pytest.approx(tc.rhs_estimate, rel=1e-13)


def test_tower_unit_shape():
    spec = ModelSpec(1.0, 1.2, 0.75)
    tc = tower_crosscheck(spec, 6, 4, 50_000, 2)
    assert tc.passes()
    assert tc.lhs == pytest.approx(pgf_unit(0.0, 10, 1.2, 0.75), rel=1e-13)
