"""Monte-Carlo policy evaluation with common random numbers.

Demand for replication ``r`` of batch ``k`` is drawn from a generator seeded by
``(seed, k)``; with the fixed batch size every realization is a pure function
of (seed, replication, period), whichever policy consumes it.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .core import Instance, RQPolicy, RSPolicy, SimReport, SsPolicy
from .cycles import CycleModel
from .dynamic_heuristics import askin_policy, bollapragada_policy
from .sdp import solve_sdp
from .static_dynamic_rs import DEFAULT_SEGMENTS, make_model, solve_static_dynamic
from .static_rq import solve_static
from .stationary import build_table

log = logging.getLogger(__name__)

METHODS = ("sdp", "ask", "bol", "soxvar", "tar", "ros")
REPLANNABLE = ("soxvar", "tar", "ros")
DEPLOYMENTS = ("conventional", "replanning")
LABELS = {("ask", "conventional"): "Ask", ("bol", "conventional"): "Bol",
          ("tar", "conventional"): "Tar", ("tar", "replanning"): "Tar-R",
          ("ros", "conventional"): "Ros", ("ros", "replanning"): "Ros-R",
          ("soxvar", "conventional"): "Sox/Var", ("soxvar", "replanning"): "Sox/Var-R",
          ("sdp", "conventional"): "SDP"}

BATCH = 1000
MAX_REPLICATIONS = 1_000_000
REL_PRECISION = 0.001
Z95 = 1.959963984540054


class UsageError(ValueError):
    pass


def demand_batch(instance: Instance, seed: int, batch: int, size: int = BATCH) -> np.ndarray:
    rng = np.random.default_rng([seed, batch])
    z = rng.standard_normal((size, instance.N))
    return np.maximum(instance.mu + instance.sigma * z, 0.0)


# -- controllers ----------------------------------------------------------------

class SsController:
    def __init__(self, policy: SsPolicy):
        self.policy = policy

    def __call__(self, n: int, x: np.ndarray) -> np.ndarray:
        s, S = self.policy.s[n - 1], self.policy.S[n - 1]
        return np.where(x < s, S - x, 0.0)


class RQController:
    def __init__(self, policy: RQPolicy):
        self.q = policy.orders()

    def __call__(self, n, x):
        return np.full_like(x, self.q[n - 1])


class RSController:
    def __init__(self, policy: RSPolicy):
        self.levels = policy.level_vector()

    def __call__(self, n, x):
        S = self.levels[n - 1]
        if np.isnan(S):
            return np.zeros_like(x)
        return np.maximum(S - x, 0.0)


class ReplanController:
    """Re-solve the remaining horizon at the observed inventory every period.

    Decisions are memoized on (period, inventory rounded to ``qstep``); the
    stored decision is the imminent cycle's cumulative-supply target, so the
    order actually placed is ``target - x`` at the unrounded inventory.
    """

    def __init__(self, model: CycleModel, qstep: float = 1.0):
        self.model = model
        self.qstep = qstep
        self.memo: dict[tuple[int, int], tuple[bool, float]] = {}

    def decide(self, n: int, x: float) -> tuple[bool, float]:
        key = (n, int(round(x / self.qstep)))
        hit = self.memo.get(key)
        if hit is None:
            hit = self.model.first_action(n - 1, key[1] * self.qstep)
            self.memo[key] = hit
        return hit

    def __call__(self, n, x):
        keys, inv = np.unique(np.rint(x / self.qstep).astype(np.int64), return_inverse=True)
        flags = np.empty(len(keys), bool)
        targets = np.empty(len(keys))
        for k, key in enumerate(keys):
            flags[k], targets[k] = self.decide(n, key * self.qstep)
        flags, targets = flags[inv], targets[inv]
        return np.where(flags, np.maximum(targets - x, 0.0), 0.0)


# -- method suite -------------------------------------------------------------------

# Finer than the unit grid: paired gap CIs reach 0.001%, below the unit-grid SDP error.
SDP_GRID_STEP = 0.5

@dataclass
class MethodSuite:
    """Lazily computed policies of every method for one instance."""
    instance: Instance
    segments: int = DEFAULT_SEGMENTS
    grid_step: float = SDP_GRID_STEP
    cache_dir: str | None = None
    qstep: float = 1.0
    _policies: dict = field(default_factory=dict, repr=False)

    def policy(self, method: str):
        if method in self._policies:
            return self._policies[method]
        inst = self.instance
        if method == "sdp":
            pol = solve_sdp(inst, self.grid_step)[0]
        elif method == "ask":
            pol = askin_policy(inst)
        elif method == "bol":
            lam_max = int(math.ceil(inst.mu.max() - 1e-9))
            table = build_table(inst.demand.cv, inst.costs, lam_max, self.cache_dir)
            pol = bollapragada_policy(inst, table, self.policy("sdp"))
        elif method == "soxvar":
            pol = solve_static(inst)
        elif method == "tar":
            pol = solve_static_dynamic(inst, "piecewise", self.segments)
        elif method == "ros":
            pol = solve_static_dynamic(inst, "exact")
        else:
            raise UsageError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
        self._policies[method] = pol
        return pol

    def model(self, method: str) -> CycleModel:
        if method == "soxvar":
            return CycleModel(self.instance, "rq")
        if method == "tar":
            return make_model(self.instance, "piecewise", self.segments)
        if method == "ros":
            return make_model(self.instance, "exact")
        raise UsageError(f"re-planning is only defined for {', '.join(REPLANNABLE)}")

    def controller(self, method: str, deployment: str = "conventional"):
        check_deployment(method, deployment)
        if deployment == "replanning":
            return ReplanController(self.model(method), self.qstep)
        pol = self.policy(method)
        if isinstance(pol, SsPolicy):
            return SsController(pol)
        if isinstance(pol, RQPolicy):
            return RQController(pol)
        return RSController(pol)


def check_deployment(method: str, deployment: str) -> None:
    if method not in METHODS:
        raise UsageError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    if deployment not in DEPLOYMENTS:
        raise UsageError(f"unknown deployment {deployment!r}")
    if deployment == "replanning" and method not in REPLANNABLE:
        raise UsageError(
            f"re-planning {method!r} is meaningless: its (s, S) parameters do not depend on the "
            "inventory on hand, so re-solving reproduces the same decisions")


def run_batch(instance: Instance, controller, demands: np.ndarray, record: bool = False):
    """Per-replication total cost (and optionally the order matrix)."""
    c = instance.costs
    x = np.full(len(demands), float(instance.initial_inventory))
    total = np.zeros(len(demands))
    orders = np.zeros_like(demands) if record else None
    for n in range(1, instance.N + 1):
        q = controller(n, x)
        x = x + q - demands[:, n - 1]
        total += c.K * (q > 0) + c.h * np.maximum(x, 0) + c.b * np.maximum(-x, 0)
        if record:
            orders[:, n - 1] = q
    return (total, orders) if record else total


@dataclass
class _Acc:
    n: int = 0
    s1: float = 0.0
    s2: float = 0.0

    def add(self, v: np.ndarray):
        self.n += len(v)
        self.s1 += float(v.sum())
        self.s2 += float(v @ v)

    @property
    def mean(self):
        return self.s1 / self.n

    @property
    def half_width(self):
        if self.n < 2:
            return math.inf
        var = max(self.s2 - self.s1 ** 2 / self.n, 0.0) / (self.n - 1)
        return Z95 * math.sqrt(var / self.n)


def simulate_many(instance: Instance, runs: list[tuple[str, str]], seed: int = 0,
                  suite: MethodSuite | None = None, batch: int = BATCH,
                  max_replications: int = MAX_REPLICATIONS, rel_precision: float = REL_PRECISION
                  ) -> list[SimReport]:
    """Simulate several (method, deployment) pairs on one common demand stream.

    The SDP policy is always simulated alongside as the gap reference. All runs
    share the replication count; sampling stops once every run's 95% half-width
    is within ``rel_precision`` of its mean, or at ``max_replications``.
    """
    for m, d in runs:
        check_deployment(m, d)
    suite = suite or MethodSuite(instance)
    keys = [("sdp", "conventional")] + [r for r in runs if r != ("sdp", "conventional")]
    ctrls = {k: suite.controller(*k) for k in keys}
    acc = {k: _Acc() for k in keys}
    diff = {k: _Acc() for k in keys}
    b = 0
    while True:
        demands = demand_batch(instance, seed, b, batch)
        costs = {k: run_batch(instance, ctrls[k], demands) for k in keys}
        for k in keys:
            acc[k].add(costs[k])
            diff[k].add(costs[k] - costs[keys[0]])
        b += 1
        n = b * batch
        done = all(a.half_width <= rel_precision * abs(a.mean) for a in acc.values())
        if done or n >= max_replications:
            break
    if not done:
        log.warning("%s: precision not reached after %d replications", instance.name, n)
    opt = acc[keys[0]].mean
    out = []
    for k in keys:
        if k not in runs:
            continue
        a = acc[k]
        out.append(SimReport(
            instance=instance.name, method=k[0], deployment=k[1], avg_cost=a.mean,
            ci_half_width=a.half_width, gap_pct=100.0 * (a.mean - opt) / opt, replications=a.n,
            precision_reached=a.half_width <= rel_precision * abs(a.mean),
            gap_ci_pct=100.0 * diff[k].half_width / opt if diff[k].n > 1 else 0.0))
    return out


def simulate(instance: Instance, method: str, deployment: str = "conventional", seed: int = 0,
             **kwargs) -> SimReport:
    return simulate_many(instance, [(method, deployment)], seed, **kwargs)[0]


def gap(report: SimReport, optimal: SimReport) -> float:
    if optimal.avg_cost <= 0:
        raise ValueError("optimal average cost must be positive")
    return 100.0 * (report.avg_cost - optimal.avg_cost) / optimal.avg_cost


def replan_step(method: str, sub_instance: Instance, x: float | None = None, segments: int = DEFAULT_SEGMENTS) -> float:
    """Order quantity for the first period of ``sub_instance`` after a full re-solve."""
    if x is None:
        x = sub_instance.initial_inventory
    suite = MethodSuite(sub_instance, segments=segments)
    model = suite.model(method)
    order, target = model.first_action(0, x)
    return max(target - x, 0.0) if order else 0.0
