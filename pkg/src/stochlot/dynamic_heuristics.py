"""Dynamic-uncertainty heuristics producing non-stationary (s, S) policies.

``askin_policy`` extends the Silver-Meal cycle-length rule to stochastic
demand; ``bollapragada_policy`` matches each period to a stationary problem
with the same cumulative mean demand over its expected reorder cycle.
"""

from __future__ import annotations

import math

import numpy as np

from .core import Instance, SsPolicy
from .cycles import CycleModel
from .dist import period_cost_arr
from .stationary import StationaryEntry

TAIL_PERIODS = 8


class TableCoverageError(RuntimeError):
    pass


class _CycleCosts:
    """Minimal expected cost and level of every cycle (first..last), 0-based."""

    def __init__(self, instance: Instance):
        self.model = CycleModel(instance, "rs")
        tab = self.model._table(0)
        ymin = tab["ystar"]
        cmin = self.model.cost.value_rows(tab["M"], tab["S"], tab["mask"], ymin)
        cum = np.concatenate([[0.0], np.cumsum(instance.mu)])
        self.level = {}
        self.cost = {}
        for r, (i, j) in enumerate(tab["arcs"]):
            self.level[(i, j - 1)] = float(ymin[r] - cum[i])
            self.cost[(i, j - 1)] = float(cmin[r])

    def g(self, first: int, last: int, x: float) -> float:
        """Expected cost over periods first..last starting from level x, no order."""
        m, s = self.model.terms(first, first, last)
        return self.model.cost.value(m, s, x)


def silver_meal_length(cycle_cost, K: float, t: int, N: int) -> int:
    """Cycle length from period t (0-based): stop at the first increase of
    (K + cost) / length."""
    best_T = 1
    best_r = K + cycle_cost(t, t)
    for T in range(2, N - t + 1):
        r = (K + cycle_cost(t, t + T - 1)) / T
        if r > best_r:
            break
        best_T, best_r = T, r
    return best_T


def askin_cycles(instance: Instance) -> list[tuple[int, int]]:
    """Forward pass: (order period, cycle length), 1-based periods."""
    cc = _CycleCosts(instance)
    out = []
    t = 0
    while t < instance.N:
        T = silver_meal_length(lambda a, b: cc.cost[(a, b)], instance.costs.K, t, instance.N)
        out.append((t + 1, T))
        t += T
    return out


def _reorder_level(excess, S: float, K: float) -> float:
    """Largest x <= S with excess(x) = 0, where ``excess`` is convex and
    negative at S. Returns S when ordering is never worse at S."""
    if excess(S) >= 0:
        return S
    step = max(1.0, abs(S) * 0.1)
    lo = S - step
    while excess(lo) < 0:
        step *= 2
        lo = S - step
    hi = S
    tol = 1e-8 * max(K, 1.0)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        r = excess(mid)
        if abs(r) <= tol:
            return mid
        if r > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def askin_policy(instance: Instance) -> SsPolicy:
    """Order-up-to levels from the Silver-Meal cycle beginning at each period;
    reorder levels from an order-now versus order-next-period trade-off.

    Ordering at t costs K plus the cycle cost at S_t over the cycle t..l.
    Not ordering carries x through period t and replenishes at t+1 for the
    rest of the same cycle, paying K then (nothing if l = t). s_t is the
    indifference point of the two branches.
    """
    cc = _CycleCosts(instance)
    K, N = instance.costs.K, instance.N
    h, b = instance.costs.h, instance.costs.b
    s = np.empty(N)
    S = np.empty(N)
    for t in range(N):
        T = silver_meal_length(lambda a, c: cc.cost[(a, c)], K, t, N)
        last = t + T - 1
        S[t] = cc.level[(t, last)]
        order = K + cc.cost[(t, last)]
        later = K + cc.cost[(t + 1, last)] if last > t else 0.0

        def excess(x, t=t, later=later, order=order):
            return float(period_cost_arr(instance.mu[t], instance.sigma[t], x, h, b)) + later - order

        s[t] = _reorder_level(excess, S[t], K)
    return SsPolicy(s, S)


def match_stationary(means: np.ndarray, n: int, table: list[StationaryEntry]) -> int:
    """Index into ``table`` whose lambda*T best matches the mean demand of the
    T periods following 0-based period ``n``."""
    cum = np.concatenate([[0.0], np.cumsum(means)])
    gaps = np.array([_window_gap(cum, n, e) for e in table])
    return int(np.argmin(gaps))


def _window_gap(cum: np.ndarray, n: int, e: StationaryEntry) -> float:
    """|D(n, n + T) - lambda*T| with D the cumulative mean demand, linear
    within a period (a fractional last period counts pro rata) and flat past
    the horizon."""
    grid = np.arange(len(cum))
    demand = float(np.interp(n + e.T, grid, cum)) - cum[n]
    return abs(demand - e.mean * e.T)


def bollapragada_policy(instance: Instance, table: list[StationaryEntry], optimal_tail: SsPolicy,
                        tail: int = TAIL_PERIODS) -> SsPolicy:
    """Stationary-table lookup for early periods, optimal (s, S) for the last ``tail``.

    Stationary reorder points are converted to the strict-inequality
    convention of ``SsPolicy`` at the midpoint s + 0.5 between lattice states.
    """
    N = instance.N
    if optimal_tail.N != N:
        raise ValueError("optimal policy horizon differs from instance horizon")
    if not table or table[-1].mean < math.ceil(instance.mu.max() - 1e-9):
        raise TableCoverageError("stationary table does not cover the largest mean demand")
    s = optimal_tail.s.copy()
    S = optimal_tail.S.copy()
    for n in range(max(N - tail, 0)):
        e = table[match_stationary(instance.mu, n, table)]
        s[n] = e.s + 0.5
        S[n] = e.S
    return SsPolicy(s, S)
