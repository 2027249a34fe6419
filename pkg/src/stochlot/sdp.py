"""Backward stochastic dynamic programming for the optimal non-stationary (s, S) policy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CostParams, Instance, SsPolicy
from .dist import DiscreteDemand, NormalDist, discretize


class GridTooSmallError(RuntimeError):
    """The optimal decision fell on the edge of the inventory grid."""


@dataclass(frozen=True)
class ValueFunction:
    grid: np.ndarray
    values: np.ndarray  # values[n - 1] is the cost-to-go at the start of period n

    def at(self, n: int, x: float) -> float:
        return float(np.interp(x, self.grid, self.values[n - 1]))


def default_grid(instance: Instance, step: float = 1.0) -> np.ndarray:
    mu, sigma = instance.mu, instance.sigma
    window = min(10, instance.N)
    top = max(np.convolve(mu, np.ones(window), mode="valid").max(), 0.0)
    # backlog deep enough that, even in the last period, ordering beats waiting
    lower = -6.0 * max(mu.max(), 10.0 / 6.0) - instance.costs.K / instance.costs.b
    upper = top + 4.0 * sigma.max() + max(instance.initial_inventory, 0.0)
    lower = min(lower, instance.initial_inventory - 1.0)
    lower = step * np.floor(lower / step)
    upper = step * np.ceil(max(upper, 10.0 * step) / step)
    return lower + step * np.arange(int(round((upper - lower) / step)) + 1)


def discrete_expected(grid: np.ndarray, values: np.ndarray, demand: DiscreteDemand) -> np.ndarray:
    """E[values(y - D)] for every grid point y; flat extrapolation off the grid."""
    out = np.zeros_like(grid)
    for d, p in zip(demand.support, demand.probs):
        if p > 0:
            out += p * np.interp(grid - d, grid, values)
    return out


def discrete_period_cost(grid: np.ndarray, demand: DiscreteDemand, h: float, b: float) -> np.ndarray:
    x = grid[:, None] - demand.support[None, :]
    return (h * np.maximum(x, 0) + b * np.maximum(-x, 0)) @ demand.probs


def backward_recursion(demands: list[DiscreteDemand], costs: CostParams, grid: np.ndarray):
    """Run the recursion over an explicit inventory grid.

    Returns ``(s, S, values)`` where ``values`` has one row per period.
    """
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    N = len(demands)
    K = costs.K
    s = np.empty(N)
    S = np.empty(N)
    values = np.empty((N, len(grid)))
    v_next = np.zeros_like(grid)
    for n in range(N - 1, -1, -1):
        J = discrete_period_cost(grid, demands[n], costs.h, costs.b)
        if n < N - 1:
            J += discrete_expected(grid, v_next, demands[n])
        iS = int(np.argmin(J))
        if iS == len(grid) - 1:
            raise GridTooSmallError(
                f"period {n + 1}: order-up-to level at upper grid edge {grid[-1]:g}; expand the grid")
        suffix_min = np.minimum.accumulate(J[::-1])[::-1]
        v = np.minimum(J, K + suffix_min)
        f = J[:iS + 1] - (K + J[iS])
        above = np.nonzero(f > 0)[0]
        if len(above) == 0:
            raise GridTooSmallError(
                f"period {n + 1}: reorder level below lower grid edge {grid[0]:g}; expand the grid")
        i = above[-1]
        # f crosses zero between grid[i] and grid[i + 1]
        s_n = grid[i] + f[i] / (f[i] - f[i + 1]) * (grid[i + 1] - grid[i])
        s[n], S[n] = min(s_n, grid[iS]), grid[iS]
        values[n] = v
        v_next = v
    return s, S, values


def period_demands(instance: Instance, step: float = 1.0, k_sigma: float = 4.0) -> list[DiscreteDemand]:
    return [discretize(NormalDist(m, sd), step, k_sigma) for m, sd in zip(instance.mu, instance.sigma)]


def solve_sdp(instance: Instance, grid_step: float = 1.0, grid: np.ndarray | None = None,
              k_sigma: float = 4.0) -> tuple[SsPolicy, ValueFunction]:
    if grid is None:
        grid = default_grid(instance, grid_step)
    demands = period_demands(instance, grid_step, k_sigma)
    s, S, values = backward_recursion(demands, instance.costs, grid)
    return SsPolicy(s, S), ValueFunction(np.asarray(grid, float), values)


def sdp_action(policy: SsPolicy, n: int, x: float) -> float:
    if x < policy.s[n - 1]:
        return float(policy.S[n - 1] - x)
    return 0.0
