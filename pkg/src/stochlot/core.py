"""Domain types, trajectory costing and the 216-instance test bed."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources

import numpy as np

PATTERNS = ("STA", "RAND", "SIN1", "SIN2", "LCY1", "LCY2")
CVS = (0.10, 0.20, 0.30)
SETUP_COSTS = (250.0, 500.0, 1000.0, 2000.0)
PENALTY_COSTS = (2.0, 5.0, 10.0)
HOLDING_COST = 1.0
GENERATOR_VERSION = "testbed-v1"


@dataclass(frozen=True)
class CostParams:
    K: float
    h: float
    b: float

    def __post_init__(self):
        if not (self.K >= 0 and self.h > 0 and self.b > 0):
            raise ValueError(f"invalid cost parameters K={self.K}, h={self.h}, b={self.b}")

    def scaled(self, lam: float) -> "CostParams":
        return CostParams(self.K * lam, self.h * lam, self.b * lam)


@dataclass(frozen=True)
class DemandSpec:
    means: tuple
    cv: float

    def __post_init__(self):
        means = tuple(float(m) for m in self.means)
        if len(means) < 1 or min(means) < 0:
            raise ValueError("demand means must be a non-empty vector of nonnegative values")
        if not 0 <= self.cv < 1:
            raise ValueError(f"coefficient of variation must lie in [0, 1), got {self.cv}")
        object.__setattr__(self, "means", means)

    @property
    def horizon(self) -> int:
        return len(self.means)

    @property
    def mean_array(self) -> np.ndarray:
        return np.array(self.means)

    @property
    def std_array(self) -> np.ndarray:
        return self.cv * np.array(self.means)


@dataclass(frozen=True)
class Instance:
    demand: DemandSpec
    costs: CostParams
    initial_inventory: float = 0.0
    pattern: str = "CUSTOM"
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if not np.isfinite(self.initial_inventory):
            raise ValueError("initial inventory must be finite")

    @property
    def N(self) -> int:
        return self.demand.horizon

    @property
    def mu(self) -> np.ndarray:
        return self.demand.mean_array

    @property
    def sigma(self) -> np.ndarray:
        return self.demand.std_array

    def tail(self, start: int, inventory: float) -> "Instance":
        """Sub-instance over periods ``start..N`` (1-based) with a new starting inventory."""
        if not 1 <= start <= self.N:
            raise ValueError(f"start period {start} outside 1..{self.N}")
        return replace(self, demand=DemandSpec(self.demand.means[start - 1:], self.demand.cv),
                       initial_inventory=float(inventory))


@dataclass(frozen=True)
class SsPolicy:
    """Per-period (s, S): order up to S_n when inventory is strictly below s_n."""
    s: np.ndarray
    S: np.ndarray

    def __post_init__(self):
        s, S = np.asarray(self.s, float), np.asarray(self.S, float)
        if s.shape != S.shape:
            raise ValueError("s and S must have the same length")
        if np.any(s > S + 1e-9):
            raise ValueError("reorder level exceeds order-up-to level")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "S", S)

    @property
    def N(self) -> int:
        return len(self.s)


@dataclass(frozen=True)
class RQPolicy:
    """Fixed order periods (1-based) and fixed quantities."""
    schedule: tuple
    quantities: tuple
    N: int
    expected_cost: float = float("nan")

    def __post_init__(self):
        if len(self.schedule) != len(self.quantities):
            raise ValueError("one quantity per scheduled period required")
        if list(self.schedule) != sorted(set(self.schedule)):
            raise ValueError("schedule must be strictly increasing")
        if any(q < 0 for q in self.quantities):
            raise ValueError("quantities must be nonnegative")

    def orders(self) -> np.ndarray:
        q = np.zeros(self.N)
        for n, qty in zip(self.schedule, self.quantities):
            q[n - 1] = qty
        return q


@dataclass(frozen=True)
class RSPolicy:
    """Fixed order periods (1-based) with one order-up-to level each."""
    schedule: tuple
    levels: tuple
    N: int
    expected_cost: float = float("nan")

    def __post_init__(self):
        if len(self.schedule) != len(self.levels):
            raise ValueError("one level per scheduled period required")
        if list(self.schedule) != sorted(set(self.schedule)):
            raise ValueError("schedule must be strictly increasing")

    def level_vector(self) -> np.ndarray:
        """Order-up-to level per period, NaN where no order is allowed."""
        out = np.full(self.N, np.nan)
        for n, lvl in zip(self.schedule, self.levels):
            out[n - 1] = lvl
        return out


@dataclass(frozen=True)
class SimReport:
    instance: str
    method: str
    deployment: str
    avg_cost: float
    ci_half_width: float
    gap_pct: float
    replications: int
    precision_reached: bool
    gap_ci_pct: float = float("nan")


def evaluate_trajectory(instance: Instance, orders, demands) -> float:
    orders = np.asarray(orders, dtype=float)
    demands = np.asarray(demands, dtype=float)
    if orders.shape != (instance.N,) or demands.shape != (instance.N,):
        raise ValueError(f"orders and demands must both have length {instance.N}")
    if np.any(orders < 0):
        raise ValueError("orders must be nonnegative")
    c = instance.costs
    x = instance.initial_inventory + np.cumsum(orders - demands)
    return float(np.sum(c.K * (orders > 0) + c.h * np.maximum(x, 0) + c.b * np.maximum(-x, 0)))


@lru_cache(maxsize=1)
def load_patterns() -> dict:
    text = resources.files("stochlot").joinpath("data/patterns.json").read_text()
    return json.loads(text)


def pattern_means(label: str) -> tuple:
    return tuple(load_patterns()["patterns"][label])


def instance_name(pattern: str, cv: float, K: float, b: float) -> str:
    return f"{pattern}-cv{cv:.2f}-K{K:g}-b{b:g}"


def generate_test_bed() -> list[Instance]:
    out = []
    for pattern, cv, K, b in itertools.product(PATTERNS, CVS, SETUP_COSTS, PENALTY_COSTS):
        out.append(Instance(
            demand=DemandSpec(pattern_means(pattern), cv),
            costs=CostParams(K, HOLDING_COST, b),
            initial_inventory=0.0,
            pattern=pattern,
            name=instance_name(pattern, cv, K, b),
        ))
    return out


def ci_subset(instances: list[Instance] | None = None) -> list[Instance]:
    """Pinned 36-instance subset: every pattern x cv pair, with (K, b) cycling
    so that each setup and penalty value is represented in every pattern."""
    bed = instances if instances is not None else generate_test_bed()
    by_name = {i.name: i for i in bed}
    pairs = [(K, b) for K in SETUP_COSTS for b in PENALTY_COSTS]
    out = []
    for pi, pattern in enumerate(PATTERNS):
        for ci, cv in enumerate(CVS):
            for j in range(2):
                K, b = pairs[(pi * 5 + ci * 4 + j * 6) % len(pairs)]
                out.append(by_name[instance_name(pattern, cv, K, b)])
    return out
