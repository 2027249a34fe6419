import numpy as np
import pytest

from stochlot.dist import NormalDist, inv_cdf, period_cost
from stochlot.dynamic_heuristics import (TAIL_PERIODS, TableCoverageError, _CycleCosts, _window_gap,
                                         askin_cycles, askin_policy, bollapragada_policy, match_stationary,
                                         silver_meal_length)
from stochlot.sdp import solve_sdp
from stochlot.stationary import build_table

from conftest import make_instance


def silver_meal(d, K, h):
    out, t = [], 0
    while t < len(d):
        best_T, best_r = 1, K
        for T in range(2, len(d) - t + 1):
            r = (K + h * sum((k - t) * d[k] for k in range(t, t + T))) / T
            if r > best_r:
                break
            best_T, best_r = T, r
        out.append((t + 1, best_T))
        t += best_T
    return out


@pytest.mark.parametrize("seed", range(10))
def test_deterministic_cycles_match_silver_meal(seed):
    rng = np.random.default_rng(seed)
    d = rng.integers(10, 150, int(rng.integers(4, 13))).astype(float)
    K = float(rng.choice([60, 150, 400]))
    inst = make_instance(d, cv=1e-11, K=K, b=1e4)
    assert askin_cycles(inst) == silver_meal(list(d), K, 1.0)


def test_single_period():
    inst = make_instance([100.0], cv=0.2, K=50.0, b=5.0)
    pol = askin_policy(inst)
    dist = NormalDist(100, 20)
    assert pol.S[0] == pytest.approx(inv_cdf(dist, 5 / 6), abs=1e-6)
    gap = period_cost(dist, pol.s[0], 1, 5) - period_cost(dist, pol.S[0], 1, 5)
    assert gap == pytest.approx(50.0, abs=1e-6 * 50)


def test_first_cycle_length_monotone_in_setup_cost():
    lengths = [askin_cycles(make_instance([100.0] * 12, cv=0.2, K=K, b=5))[0][1]
               for K in (50, 100, 250, 500, 1000, 2000, 4000)]
    assert lengths == sorted(lengths)
    assert lengths[-1] > lengths[0]


def test_askin_reorder_levels(by_name):
    inst = by_name["SIN2-cv0.20-K1000-b5"]
    pol = askin_policy(inst)
    assert np.all(pol.s <= pol.S)
    cc = _CycleCosts(inst)
    K = inst.costs.K
    for t in (0, 5, 17):
        T = silver_meal_length(lambda a, b: cc.cost[(a, b)], K, t, inst.N)
        last = t + T - 1
        later = K + cc.cost[(t + 1, last)] if last > t else 0.0
        resid = period_cost(NormalDist(inst.mu[t], inst.sigma[t]), pol.s[t], 1, 5) + later \
            - (K + cc.cost[(t, last)])
        assert abs(resid) <= 1e-6 * K


@pytest.fixture(scope="module")
def sta(tmp_path_factory):
    inst = make_instance([100.0] * 24, cv=0.2, K=500, b=5)
    sdp, _ = solve_sdp(inst)
    table = build_table(0.2, inst.costs, 100, cache_dir=tmp_path_factory.mktemp("tab"))
    return inst, sdp, table


def test_bollapragada_stationary_fixed_point(sta):
    inst, sdp, table = sta
    pol = bollapragada_policy(inst, table, sdp)
    head = slice(0, inst.N - TAIL_PERIODS)
    e = table[99]
    assert np.all(pol.S[head] == e.S)
    assert np.all(pol.s[head] == e.s + 0.5)
    assert np.array_equal(pol.s[inst.N - 8:], sdp.s[inst.N - 8:])
    assert np.array_equal(pol.S[inst.N - 8:], sdp.S[inst.N - 8:])


def test_bollapragada_matching_locally_optimal(by_name, tmp_path):
    inst = by_name["LCY2-cv0.20-K1000-b10"]
    table = build_table(0.2, inst.costs, int(np.ceil(inst.mu.max())), cache_dir=tmp_path)
    cum = np.concatenate([[0.0], np.cumsum(inst.mu)])
    for n in range(inst.N - TAIL_PERIODS):
        k = match_stationary(inst.mu, n, table)
        g = _window_gap(cum, n, table[k])
        for j in (k - 1, k + 1):
            if 0 <= j < len(table):
                assert g <= _window_gap(cum, n, table[j])


def test_bollapragada_table_coverage(sta):
    inst, sdp, table = sta
    with pytest.raises(TableCoverageError):
        bollapragada_policy(inst, table[:50], sdp)
    with pytest.raises(ValueError):
        bollapragada_policy(make_instance([100.0] * 3, cv=0.2, K=500, b=5), table, sdp)
