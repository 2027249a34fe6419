"""Replenishment-cycle machinery shared by the (R,Q) and (R,S) planners.

Both planners choose a schedule of order periods and one level per cycle.
After shifting every level into cumulative-supply coordinates (level plus the
mean demand of all earlier periods in the sub-horizon) the expected cost of a
cycle is a convex function of one scalar ``Y``, a sum of newsvendor terms
``h*(Y - m) + (h + b) * E[(D - Y)^+]`` with ``D ~ N(m, s)``.  The two planners
only differ in which standard deviation enters each term:

* ``rq``: uncertainty accumulated from the start of the horizon,
* ``rs``: uncertainty accumulated from the start of the cycle only.

Nonnegative (expected) orders mean ``x <= Y_1 <= Y_2 <= ...``, which is an
isotonic constraint solved exactly by pool-adjacent-violators.  Schedules are
enumerated best-first by a lower bound that drops the isotonic coupling; the
search stops as soon as no unexplored schedule can beat the incumbent.
"""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import ndtr, ndtri

from .core import Instance
from .dist import cdf_arr, loss_arr, std_loss

BISECTION_ITERS = 200

log = logging.getLogger(__name__)


@lru_cache(maxsize=64)
def pw_breakpoints(segments: int) -> tuple[np.ndarray, np.ndarray]:
    """Equal-probability standard-normal quantiles and the loss at each."""
    if segments < 2:
        raise ValueError("need at least 2 segments")
    z = ndtri(np.arange(1, segments) / segments)
    return z, std_loss(z)


def pw_std_loss(z, segments: int):
    """Piecewise-linear majorant of the standard normal loss with ``segments`` pieces.

    Chords between consecutive breakpoints, slope -1 left of the first one,
    flat right of the last one.
    """
    zb, lb = pw_breakpoints(segments)
    z = np.asarray(z, dtype=float)
    return np.interp(z, zb, lb) + np.maximum(zb[0] - z, 0.0)


class TermCost:
    """Cost of a sum of newsvendor terms, exact or piecewise-linear."""

    def __init__(self, h: float, b: float, segments: int | None = None):
        self.h, self.b = h, b
        self.segments = segments

    def loss(self, m, s, y):
        if self.segments is None:
            return loss_arr(m, s, y)
        m, s, y = (np.asarray(a, dtype=float) for a in (m, s, y))
        pos = s > 0
        safe = np.where(pos, s, 1.0)
        return np.where(pos, safe * pw_std_loss((y - m) / safe, self.segments), np.maximum(m - y, 0.0))

    def value(self, m, s, y) -> float:
        m = np.asarray(m, float)
        if m.size == 0:
            return 0.0
        return float(np.sum(self.h * (y - m) + (self.h + self.b) * self.loss(m, s, y)))

    def derivative(self, m, s, y) -> float:
        return float(np.sum((self.h + self.b) * cdf_arr(m, s, y) - self.b))

    def argmin(self, m, s) -> float:
        m, s = np.asarray(m, float), np.asarray(s, float)
        if self.segments is None:
            return float(self.argmin_rows(m[None, :], s[None, :], np.ones((1, m.size), bool))[0])
        zb, _ = pw_breakpoints(self.segments)
        cand = np.unique(np.concatenate([(m[:, None] + s[:, None] * zb[None, :]).ravel(), m]))
        tot = self.h * (cand[:, None] - m[None, :]) + (self.h + self.b) * self.loss(
            m[None, :], s[None, :], cand[:, None])
        return float(cand[np.argmin(tot.sum(axis=1))])

    def argmin_rows(self, M, S, mask) -> np.ndarray:
        """Row-wise minimizers for padded term matrices."""
        if self.segments is not None:
            return np.array([self.argmin(M[r, mask[r]], S[r, mask[r]]) for r in range(len(M))])
        big = np.where(mask, M + 12 * S, -np.inf).max(axis=1) + 1.0
        small = np.where(mask, M - 12 * S, np.inf).min(axis=1) - 1.0
        lo, hi = small, big
        hb = self.h + self.b
        safe_s = np.where(S > 0, S, 1.0)
        for _ in range(BISECTION_ITERS):
            mid = 0.5 * (lo + hi)
            z = (mid[:, None] - M) / safe_s
            phi = np.where(S > 0, ndtr(z), (mid[:, None] >= M).astype(float))
            d = np.where(mask, hb * phi - self.b, 0.0).sum(axis=1)
            up = d >= 0
            hi = np.where(up, mid, hi)
            lo = np.where(up, lo, mid)
            if np.all(hi - lo <= 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(hi))):
                break
        return 0.5 * (lo + hi)

    def value_rows(self, M, S, mask, Y) -> np.ndarray:
        t = self.h * (Y[:, None] - M) + (self.h + self.b) * self.loss(M, S, np.broadcast_to(Y[:, None], M.shape))
        return np.where(mask, t, 0.0).sum(axis=1)


@dataclass
class Plan:
    schedule: tuple       # 0-based order periods within the sub-horizon
    levels: tuple         # cumulative-supply level of each scheduled cycle
    cost: float           # planner's expected cost including setup costs
    optimal: bool         # False if the search hit its path limit


class CycleModel:
    """Schedule search over a fixed instance, reusable across sub-horizons.

    ``kind`` is ``"rq"`` or ``"rs"``; ``segments`` selects the piecewise
    cost (None for exact).
    """

    def __init__(self, instance: Instance, kind: str, segments: int | None = None,
                 max_paths: int = 1000):
        if kind not in ("rq", "rs"):
            raise ValueError(f"unknown cycle model kind {kind!r}")
        self.instance = instance
        self.kind = kind
        self.cost = TermCost(instance.costs.h, instance.costs.b, segments)
        self.K = instance.costs.K
        self.max_paths = max_paths
        self._cum_mu = np.concatenate([[0.0], np.cumsum(instance.mu)])
        self._cum_var = np.concatenate([[0.0], np.cumsum(instance.sigma ** 2)])
        self._tables: dict[int, dict] = {}

    # -- terms ---------------------------------------------------------------
    def terms(self, start: int, first: int, last: int):
        """Terms of a cycle covering 0-based periods ``first..last`` of the
        sub-horizon beginning at 0-based period ``start``."""
        t = np.arange(first, last + 1)
        m = self._cum_mu[t + 1] - self._cum_mu[start]
        origin = start if self.kind == "rq" else first
        var = np.maximum(self._cum_var[t + 1] - self._cum_var[origin], 0.0)
        return m, np.sqrt(var)

    def prefix_terms(self, start: int, last: int):
        t = np.arange(start, last + 1)
        m = self._cum_mu[t + 1] - self._cum_mu[start]
        return m, np.sqrt(np.maximum(self._cum_var[t + 1] - self._cum_var[start], 0.0))

    def _table(self, start: int) -> dict:
        tab = self._tables.get(start)
        if tab is not None:
            return tab
        L = self.instance.N - start
        arcs = [(i, j) for i in range(L) for j in range(i + 1, L + 1)]
        M = np.zeros((len(arcs), L))
        S = np.zeros((len(arcs), L))
        mask = np.zeros((len(arcs), L), bool)
        for r, (i, j) in enumerate(arcs):
            m, s = self.terms(start, start + i, start + j - 1)
            M[r, :len(m)], S[r, :len(s)], mask[r, :len(m)] = m, s, True
        ystar = self.cost.argmin_rows(M, S, mask)
        pm, ps = self.prefix_terms(start, self.instance.N - 1)
        tab = dict(L=L, arcs=arcs, M=M, S=S, mask=mask, ystar=ystar, pm=pm, ps=ps,
                   index={a: r for r, a in enumerate(arcs)})
        self._tables[start] = tab
        return tab

    def cycle_argmin(self, start: int, first: int, last: int) -> float:
        tab = self._table(start)
        return float(tab["ystar"][tab["index"][(first - start, last - start + 1)]])

    # -- isotonic pooling ----------------------------------------------------
    def pool(self, start: int, x: float, prefix_end: int, cycles: list[tuple[int, int]]):
        """Optimal isotonic levels for a fixed schedule.

        ``prefix_end`` is the (relative) first order period; periods before it
        are covered by the starting inventory ``x``. Returns (levels, cost
        excluding setups).
        """
        # each block: [fixed, value, m, s, ncycles]
        if prefix_end > 0:
            pm, ps = self.prefix_terms(start, start + prefix_end - 1)
        else:
            pm, ps = np.zeros(0), np.zeros(0)
        blocks = [[True, x, pm, ps, 0]]
        for i, j in cycles:
            m, s = self.terms(start, start + i, start + j - 1)
            blocks.append([False, self.cycle_argmin(start, start + i, start + j - 1), m, s, 1])
            while len(blocks) > 1 and blocks[-1][1] < blocks[-2][1]:
                top = blocks.pop()
                prev = blocks[-1]
                m = np.concatenate([prev[2], top[2]])
                s = np.concatenate([prev[3], top[3]])
                fixed = prev[0]
                val = x if fixed else self.cost.argmin(m, s)
                blocks[-1] = [fixed, val, m, s, prev[4] + top[4]]
        levels = []
        total = 0.0
        for fixed, val, m, s, k in blocks:
            levels.extend([val] * k)
            total += self.cost.value(m, s, val)
        return levels, total

    # -- schedule search -----------------------------------------------------
    def solve(self, start: int = 0, x: float | None = None) -> Plan:
        """Best plan for the sub-horizon starting at 0-based ``start`` with
        starting inventory ``x``."""
        if x is None:
            x = self.instance.initial_inventory
        tab = self._table(start)
        L = tab["L"]
        K = self.K
        ycl = np.maximum(tab["ystar"], x)
        bounds = K + self.cost.value_rows(tab["M"], tab["S"], tab["mask"], ycl)
        w = {a: bounds[r] for r, a in enumerate(tab["arcs"])}
        pt = self.cost.h * (x - tab["pm"]) + (self.cost.h + self.cost.b) * self.cost.loss(
            tab["pm"], tab["ps"], np.full(L, x))
        prefix = np.concatenate([[0.0], np.cumsum(pt)])  # prefix[j]: no order in 0..j-1

        togo = np.full(L + 1, np.inf)
        togo[L] = 0.0
        for i in range(L - 1, -1, -1):
            togo[i] = min(w[(i, j)] + togo[j] for j in range(i + 1, L + 1))

        # entries: (f, -depth, g, prefix_end, cycles)
        heap = [(prefix[j] + togo[j], 0, prefix[j], j, ()) for j in range(0, L + 1)]
        heapq.heapify(heap)
        best = None
        best_cost = np.inf
        n_complete = 0
        optimal = True
        while heap:
            f, negdepth, g, pe, cyc = heapq.heappop(heap)
            if f >= best_cost - 1e-12 * max(1.0, abs(best_cost)):
                break
            node = cyc[-1][1] if cyc else pe
            if node == L:
                levels, c = self.pool(start, x, pe, list(cyc))
                c += K * len(cyc)
                n_complete += 1
                if c < best_cost:
                    best_cost, best = c, (pe, cyc, levels)
                if n_complete >= self.max_paths:
                    optimal = not heap or heap[0][0] >= best_cost - 1e-12 * max(1.0, abs(best_cost))
                    break
                continue
            for j in range(node + 1, L + 1):
                gj = g + w[(node, j)]
                heapq.heappush(heap, (gj + togo[j], negdepth - 1, gj, pe, cyc + ((node, j),)))
        if not optimal:
            log.warning("schedule search stopped after %d complete paths; plan may be suboptimal", n_complete)
        pe, cyc, levels = best
        return Plan(tuple(i for i, _ in cyc), tuple(levels), float(best_cost), optimal)

    def first_action(self, start: int, x: float) -> tuple[bool, float]:
        """(order now?, cumulative-supply target of the imminent cycle)."""
        plan = self.solve(start, x)
        if plan.schedule and plan.schedule[0] == 0:
            return True, plan.levels[0]
        return False, x
