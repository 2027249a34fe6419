"""Normal-distribution helpers: cdf, quantile, first-order loss, newsvendor cost
and lattice discretization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

SQRT_2PI = np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class NormalDist:
    mean: float
    std: float = 0.0

    def __post_init__(self):
        if not self.std >= 0:
            raise ValueError(f"std must be >= 0, got {self.std}")


@dataclass(frozen=True)
class DiscreteDemand:
    support: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        support = np.asarray(self.support, dtype=float)
        probs = np.asarray(self.probs, dtype=float)
        if support.shape != probs.shape or support.ndim != 1 or len(support) == 0:
            raise ValueError("support and probs must be non-empty 1-d arrays of equal length")
        if np.any(np.diff(support) <= 0):
            raise ValueError("support must be strictly increasing")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError("probs must be nonnegative and sum to 1")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)

    @property
    def mean(self) -> float:
        return float(self.support @ self.probs)


def std_pdf(z):
    return np.exp(-0.5 * np.square(z)) / SQRT_2PI


def std_loss(z):
    """E[(Z - z)^+] for a standard normal Z."""
    return std_pdf(z) - z * ndtr(-z)


def cdf(dist: NormalDist, y):
    y = np.asarray(y, dtype=float)
    if dist.std == 0:
        return (y >= dist.mean).astype(float)
    return ndtr((y - dist.mean) / dist.std)


def inv_cdf(dist: NormalDist, p: float) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must lie in (0, 1), got {p}")
    return float(dist.mean + dist.std * ndtri(p))


# The functions below take arrays of means/stds so that the cycle solvers can
# evaluate many demand terms at once. A std of exactly zero is a point mass.

def loss_arr(mean, std, y):
    """E[(D - y)^+] for D ~ N(mean, std), broadcasting over all arguments."""
    mean, std, y = (np.asarray(a, dtype=float) for a in (mean, std, y))
    pos = std > 0
    safe = np.where(pos, std, 1.0)
    return np.where(pos, safe * std_loss((y - mean) / safe), np.maximum(mean - y, 0.0))


def cdf_arr(mean, std, y):
    mean, std, y = (np.asarray(a, dtype=float) for a in (mean, std, y))
    pos = std > 0
    safe = np.where(pos, std, 1.0)
    return np.where(pos, ndtr((y - mean) / safe), (y >= mean).astype(float))


def period_cost_arr(mean, std, y, h, b):
    return h * (np.asarray(y, float) - mean) + (h + b) * loss_arr(mean, std, y)


def loss(dist: NormalDist, y: float) -> float:
    return float(loss_arr(dist.mean, dist.std, y))


def period_cost(dist: NormalDist, y: float, h: float, b: float) -> float:
    """Expected end-of-period holding plus backorder cost at stock level ``y``."""
    return float(period_cost_arr(dist.mean, dist.std, y, h, b))


def newsvendor_level(dist: NormalDist, h: float, b: float) -> float:
    if dist.std == 0:
        return dist.mean
    return inv_cdf(dist, b / (b + h))


def discretize(dist: NormalDist, step: float | None = None, k_sigma: float = 4.0) -> DiscreteDemand:
    """Lattice approximation of a normal demand.

    Support points are multiples of ``step`` covering
    [max(0, mean - k_sigma*std), mean + k_sigma*std]. Each point receives the
    probability of the interval of width ``step`` around it. Mass below the
    lowest point (including negative demand) is folded into it; the remaining
    upper tail is dropped by renormalization.
    """
    if step is None:
        step = max(1.0, dist.std / 10.0)
    if step <= 0 or k_sigma <= 0:
        raise ValueError("step and k_sigma must be positive")
    if dist.std == 0:
        return DiscreteDemand(np.array([dist.mean]), np.array([1.0]))
    lo = step * np.floor(max(0.0, dist.mean - k_sigma * dist.std) / step)
    hi = step * np.ceil((dist.mean + k_sigma * dist.std) / step)
    n = int(round((hi - lo) / step)) + 1
    support = lo + step * np.arange(n)
    edges = np.concatenate([support - step / 2.0, [support[-1] + step / 2.0]])
    c = ndtr((edges - dist.mean) / dist.std)
    c[0] = 0.0
    probs = np.diff(c)
    probs /= probs.sum()
    return DiscreteDemand(support, probs)
