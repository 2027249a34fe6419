import numpy as np
import pytest
from scipy import optimize
from scipy.stats import norm

from stochlot.core import RSPolicy
from stochlot.cycles import CycleModel, TermCost
from stochlot.static_dynamic_rs import (cycle_cost_exact, cycle_cost_piecewise, make_model, rs_action,
                                        solve_static_dynamic)

from conftest import make_instance, random_instances, schedule_oracle, wagner_whitin_backlog

INST = make_instance([80, 120, 60, 140, 100, 90], cv=0.25, K=250, b=5)


def cycle_terms(inst, first, last):
    t = np.arange(first - 1, last)
    m = np.cumsum(inst.mu[first - 1:last])
    s = np.sqrt(np.cumsum(inst.sigma[first - 1:last] ** 2))
    return m, s, t


def test_single_period_is_newsvendor():
    S, _ = cycle_cost_exact(INST, 2, 2)
    assert S == pytest.approx(120 + 30 * norm.ppf(5 / 6), abs=1e-8)


def test_two_period_cycle_between_single_period_levels():
    inst = make_instance([100, 100], cv=0.2, K=100, b=5)
    S, c = cycle_cost_exact(inst, 1, 2)
    lo = cycle_cost_exact(inst, 1, 1)[0]
    ys = np.linspace(50, 400, 350001)
    m, s, _ = cycle_terms(inst, 1, 2)
    z = (ys[:, None] - m) / s
    vals = np.sum((ys[:, None] - m) + 6 * s * (norm.pdf(z) - z * norm.sf(z)), axis=1)
    assert S == pytest.approx(ys[np.argmin(vals)], abs=2e-3)
    assert c == pytest.approx(vals.min(), rel=1e-9)
    assert lo < S < 200 + 20 * np.sqrt(2) * norm.ppf(5 / 6)


def test_exact_cycle_cost_matches_monte_carlo():
    S, c = cycle_cost_exact(INST, 2, 4)
    rng = np.random.default_rng(11)
    D = rng.normal(INST.mu[1:4], INST.sigma[1:4], size=(200_000, 3))
    x = S - np.cumsum(D, axis=1)
    sims = np.sum(np.maximum(x, 0) + 5 * np.maximum(-x, 0), axis=1)
    assert sims.mean() == pytest.approx(c, rel=3e-3)


def test_convexity_and_bisection_residual():
    tc = TermCost(1.0, 5.0)
    for first, last in [(1, 1), (1, 3), (2, 6), (4, 5)]:
        S, _ = cycle_cost_exact(INST, first, last)
        m, s, _ = cycle_terms(INST, first, last)
        assert abs(tc.derivative(m, s, S)) <= 1e-8 * 6
        for y in np.linspace(S - 200, S + 200, 41):
            e = 0.5
            second = tc.value(m, s, y + e) - 2 * tc.value(m, s, y) + tc.value(m, s, y - e)
            assert second >= -1e-9


@pytest.mark.parametrize("segments", [2, 4, 10, 30])
def test_piecewise_majorizes_exact(segments):
    tc_pw = TermCost(1.0, 5.0, segments)
    tc = TermCost(1.0, 5.0)
    m, s, _ = cycle_terms(INST, 1, 4)
    for y in np.linspace(0, 600, 121):
        assert tc_pw.value(m, s, y) >= tc.value(m, s, y) - 1e-9
    assert cycle_cost_piecewise(INST, 1, 4, segments)[1] >= cycle_cost_exact(INST, 1, 4)[1] - 1e-9


def test_piecewise_converges():
    S, c = cycle_cost_exact(INST, 1, 4)
    errs = [abs(cycle_cost_piecewise(INST, 1, 4, w)[1] / c - 1) for w in (4, 16, 64, 256)]
    assert all(a >= b for a, b in zip(errs, errs[1:]))
    assert errs[-1] <= 1e-3


def test_two_segments_symmetric_minimizer_near_exact():
    inst = make_instance([100], cv=0.2, K=0, b=1)
    S, _ = cycle_cost_exact(inst, 1, 1)
    Sp, _ = cycle_cost_piecewise(inst, 1, 1, 2)
    # a two-piece majorant has its only breakpoint at the median; the
    # minimizer sits there, within one breakpoint gap (here sigma) of exact
    assert Sp == pytest.approx(100.0, abs=1e-9)
    assert abs(Sp - S) <= 20.0


def test_piecewise_minimum_is_exact_for_the_approximation():
    tc = TermCost(1.0, 5.0, 10)
    m, s, _ = cycle_terms(INST, 2, 5)
    S, c = cycle_cost_piecewise(INST, 2, 5, 10)
    res = optimize.minimize_scalar(lambda y: tc.value(m, s, y), bounds=(0, 800), method="bounded",
                                   options=dict(xatol=1e-10))
    assert c <= res.fun + 1e-9


@pytest.mark.parametrize("inst", random_instances(2, 50), ids=lambda i: i.name)
def test_matches_exhaustive_schedule_enumeration(inst):
    pol = solve_static_dynamic(inst, "exact")
    oracle, _ = schedule_oracle(inst, "rs")
    assert pol.expected_cost == pytest.approx(oracle, rel=1e-6)


@pytest.mark.parametrize("seed", range(20))
@pytest.mark.parametrize("variant", ["exact", "piecewise"])
def test_deterministic_limit(seed, variant):
    rng = np.random.default_rng(300 + seed)
    means = rng.integers(1, 120, int(rng.integers(3, 9))).astype(float)
    K, b = float(rng.choice([50, 200, 800])), float(rng.choice([2, 5, 10]))
    pol = solve_static_dynamic(make_instance(means, cv=1e-11, K=K, b=b), variant)
    ww, _ = wagner_whitin_backlog(means, K, 1.0, b)
    assert pol.expected_cost == pytest.approx(ww, rel=1e-3)


def test_deterministic_schedule_and_levels():
    means = [69, 29, 36, 61, 61, 26, 34, 67, 45, 67, 79, 56]
    pol = solve_static_dynamic(make_instance(means, cv=1e-11, K=85, b=1000))
    _, blocks = wagner_whitin_backlog(means, 85, 1.0, 1000)
    assert pol.schedule == tuple(k + 1 for _, k, _ in blocks)
    assert np.allclose(pol.levels, [sum(means[i:j]) for i, _, j in blocks], atol=1e-4)


def test_large_setup_cost_single_replenishment():
    pol = solve_static_dynamic(make_instance([50, 70, 90, 60], cv=0.2, K=2000, b=5))
    assert pol.schedule == (1,)


def test_expected_orders_nonnegative(by_name):
    inst = by_name["LCY2-cv0.30-K250-b10"]
    pol = solve_static_dynamic(inst)
    cum = np.concatenate([[0.0], np.cumsum(inst.mu)])
    Y = [lvl + cum[p - 1] for p, lvl in zip(pol.schedule, pol.levels)]
    assert np.all(np.diff(Y) >= -1e-9)


def test_variants_mostly_agree(test_bed):
    # near-ties between cycle layouts break differently under the majorant;
    # on the whole test bed 182 of 216 schedules coincide
    sample = test_bed[::3]
    same = 0
    for inst in sample:
        ex = solve_static_dynamic(inst, "exact")
        pw = solve_static_dynamic(inst, "piecewise")
        same += ex.schedule == pw.schedule
        model = make_model(inst, "exact")
        sched = [p - 1 for p in pw.schedule]
        _, c = model.pool(0, 0.0, sched[0], list(zip(sched, sched[1:] + [inst.N])))
        assert c + inst.costs.K * len(sched) <= ex.expected_cost * 1.005
    assert same >= 0.8 * len(sample)


def test_rs_action_examples():
    pol = RSPolicy((1, 3), (150.0, 90.0), 4)
    assert rs_action(pol, 1, 200.0) == 0
    assert rs_action(pol, 1, 0.0) == 150
    assert rs_action(pol, 2, -500.0) == 0
    assert rs_action(pol, 3, 10.0) == 80


def test_model_rejects_unknown_kind():
    with pytest.raises(ValueError):
        CycleModel(INST, "qq")
    with pytest.raises(ValueError):
        cycle_cost_piecewise(INST, 1, 2, 1)
