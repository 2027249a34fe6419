"""Static-dynamic uncertainty (R, S) plans: order periods fixed up front,
quantities set on the day by an order-up-to level."""

from __future__ import annotations

import numpy as np

from .core import Instance, RSPolicy
from .cycles import CycleModel

VARIANTS = ("exact", "piecewise")
DEFAULT_SEGMENTS = 10


def _cycle(instance, first, last, segments):
    if not 1 <= first <= last <= instance.N:
        raise ValueError(f"invalid cycle {first}..{last}")
    model = CycleModel(instance, "rs", segments)
    m, s = model.terms(first - 1, first - 1, last - 1)
    S = model.cost.argmin(m, s)
    return S, model.cost.value(m, s, S)


def cycle_cost_exact(instance: Instance, first: int, last: int):
    """Order-up-to level minimizing expected holding and backorder cost over
    periods ``first..last`` (1-based), and that minimum."""
    return _cycle(instance, first, last, None)


def cycle_cost_piecewise(instance: Instance, first: int, last: int, segments: int = DEFAULT_SEGMENTS):
    if segments < 2:
        raise ValueError("segments must be >= 2")
    return _cycle(instance, first, last, segments)


def make_model(instance: Instance, variant: str = "exact", segments: int = DEFAULT_SEGMENTS,
               max_paths: int = 1000) -> CycleModel:
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    return CycleModel(instance, "rs", None if variant == "exact" else segments, max_paths)


def plan_to_policy(model: CycleModel, start: int, plan) -> RSPolicy:
    cum = np.concatenate([[0.0], np.cumsum(model.instance.mu[start:])])
    levels = tuple(float(y - cum[i]) for i, y in zip(plan.schedule, plan.levels))
    schedule = tuple(start + i + 1 for i in plan.schedule)
    return RSPolicy(schedule, levels, model.instance.N - start, plan.cost)


def solve_static_dynamic(instance: Instance, variant: str = "exact",
                         segments: int = DEFAULT_SEGMENTS, max_paths: int = 1000) -> RSPolicy:
    model = make_model(instance, variant, segments, max_paths)
    plan = model.solve(0, instance.initial_inventory)
    return plan_to_policy(model, 0, plan)


def rs_action(policy: RSPolicy, n: int, x: float) -> float:
    try:
        k = policy.schedule.index(n)
    except ValueError:
        return 0.0
    return max(0.0, policy.levels[k] - x)
