"""Stationary infinite-horizon (s, S) policies for integer-valued demand.

Conventions follow renewal theory: an order up to ``S`` is placed whenever the
inventory position is at or below ``s``, so a cycle visits ``S, S-1, ..., s+1``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .core import CostParams
from .dist import DiscreteDemand, NormalDist, discretize

DISCRETIZATION_VERSION = "normal-step1-k4"
DELTA_CAP = 1 << 15


class SearchBoundError(RuntimeError):
    pass


@dataclass(frozen=True)
class StationaryEntry:
    mean: float
    s: int
    S: int
    avg_cost: float
    T: float


def _lattice_probs(demand: DiscreteDemand) -> np.ndarray:
    sup = demand.support
    if np.any(sup < 0) or np.any(np.abs(sup - np.round(sup)) > 1e-9):
        raise ValueError("stationary analysis needs nonnegative integer demand support")
    p = np.zeros(int(round(sup[-1])) + 1)
    p[np.round(sup).astype(int)] = demand.probs
    return p


def renewal_mass(p: np.ndarray, n: int) -> np.ndarray:
    """m(j), j < n: expected number of periods the cumulative demand since the
    last order equals j."""
    p0 = p[0]
    if p0 >= 1.0:
        raise ValueError("demand is identically zero")
    m = np.zeros(n)
    m[0] = 1.0 / (1.0 - p0)
    tail = p[1:]
    for j in range(1, n):
        k = min(j, len(tail))
        # sum_{i=1..k} p_i m(j - i)
        m[j] = tail[:k] @ m[j - 1::-1][:k] / (1.0 - p0)
    return m


def one_period_cost(y, p: np.ndarray, costs: CostParams) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    d = np.arange(len(p), dtype=float)
    diff = y[..., None] - d
    return (costs.h * np.maximum(diff, 0) + costs.b * np.maximum(-diff, 0)) @ p


def stationary_cost(s: int, S: int, demand: DiscreteDemand, costs: CostParams) -> tuple[float, float]:
    """Long-run average cost per period and mean cycle length of (s, S)."""
    if not s < S:
        raise ValueError("need s < S")
    p = _lattice_probs(demand)
    delta = S - s
    m = renewal_mass(p, delta)
    G = one_period_cost(S - np.arange(delta), p, costs)
    M = m.sum()
    return float((costs.K + m @ G) / M), float(M)


def _delta_guess(mean: float, std: float, costs: CostParams) -> int:
    if costs.K == 0:
        return 8
    eoq = math.sqrt(2 * costs.K * max(mean, 1e-9) * (costs.h + costs.b) / (costs.h * costs.b))
    return int(3 * eoq + 6 * std + 10)


def optimize_stationary(demand: DiscreteDemand, costs: CostParams, delta_max: int | None = None,
                        strict_bound: bool = False) -> StationaryEntry:
    """Exhaustive search over (S, S - s) with Delta <= delta_max.

    For every Delta the order-up-to level is scanned over a window around the
    myopic minimizer y* of the one-period cost; the optimum satisfies
    s < y* <= S so the window [y* - 4, y* + delta_max] is exhaustive. If the
    best Delta sits on ``delta_max`` the bound is doubled (or, with
    ``strict_bound``, an error is raised).
    """
    p = _lattice_probs(demand)
    std = float(np.sqrt(demand.probs @ (demand.support - demand.mean) ** 2))
    if delta_max is None:
        delta_max = _delta_guess(demand.mean, std, costs)
    ys = np.arange(-2, len(p) + 2)
    y_star = int(ys[np.argmin(one_period_cost(ys, p, costs))])
    while True:
        m = renewal_mass(p, delta_max)
        M = np.cumsum(m)
        S_vals = np.arange(y_star - 4, y_star + delta_max + 1)
        lo = S_vals[0] - delta_max + 1
        G = one_period_cost(np.arange(lo, S_vals[-1] + 1), p, costs)
        acc = np.zeros(len(S_vals))
        best = (np.inf, 0, 0)
        for delta in range(1, delta_max + 1):
            off = S_vals[0] - (delta - 1) - lo
            acc += m[delta - 1] * G[off:off + len(S_vals)]
            c = (costs.K + acc) / M[delta - 1]
            i = int(np.argmin(c))
            if c[i] < best[0] - 1e-12:
                best = (float(c[i]), int(S_vals[i]), delta)
        cost, S, delta = best
        if S == S_vals[0] or S == S_vals[-1]:
            raise SearchBoundError(f"order-up-to level {S} on the search window edge")
        if delta < delta_max:
            return StationaryEntry(demand.mean, S - delta, S, cost, float(M[delta - 1]))
        if strict_bound or delta_max >= DELTA_CAP:
            raise SearchBoundError(f"optimal Delta reached the bound {delta_max}")
        delta_max *= 2


def stationary_demand(lam: float, cv: float) -> DiscreteDemand:
    return discretize(NormalDist(lam, cv * lam), step=1.0, k_sigma=4.0)


def build_table(cv: float, costs: CostParams, lam_max: int, cache_dir: str | Path | None = None
                ) -> list[StationaryEntry]:
    """Optimal stationary policies for integer mean demands 1..lam_max."""
    cache = None
    if cache_dir is not None:
        key = f"{DISCRETIZATION_VERSION}_cv{cv:g}_K{costs.K:g}_h{costs.h:g}_b{costs.b:g}"
        cache = Path(cache_dir) / f"stationary_{key}.json"
        if cache.exists():
            entries = [StationaryEntry(**e) for e in json.loads(cache.read_text())["entries"]]
            if len(entries) >= lam_max:
                return entries[:lam_max]
    entries = [replace(optimize_stationary(stationary_demand(lam, cv), costs), mean=float(lam))
               for lam in range(1, lam_max + 1)]
    if cache is not None:
        cache.parent.mkdir(parents=True, exist_ok=True)
        tmp = cache.with_suffix(".tmp")
        tmp.write_text(json.dumps({"version": DISCRETIZATION_VERSION, "cv": cv,
                                   "costs": asdict(costs), "lam_max": lam_max,
                                   "entries": [asdict(e) for e in entries]}))
        tmp.replace(cache)
    return entries
