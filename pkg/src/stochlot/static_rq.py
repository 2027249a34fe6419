"""Static-uncertainty (R, Q) plans: order periods and quantities fixed up front."""

from __future__ import annotations

from .core import Instance, RQPolicy
from .cycles import CycleModel


def cumulative_cost(instance: Instance, first: int, last: int, y_prev: float = float("-inf")):
    """Best cumulative supply for a cycle covering periods ``first..last`` (1-based).

    The unconstrained minimizer balances the summed critical ratios of the
    cumulative demand distributions; it is then raised to ``y_prev`` so that the
    cycle's order is nonnegative. Returns ``(Y, expected cycle cost)``.
    """
    if not 1 <= first <= last <= instance.N:
        raise ValueError(f"invalid cycle {first}..{last}")
    model = CycleModel(instance, "rq")
    m, s = model.terms(0, first - 1, last - 1)
    tc = model.cost
    y = max(tc.argmin(m, s), y_prev)
    return y, tc.value(m, s, y)


def plan_to_policy(model: CycleModel, start: int, x: float, plan) -> RQPolicy:
    schedule, quantities = [], []
    prev = x
    for i, y in zip(plan.schedule, plan.levels):
        q = y - prev
        prev = y
        if q > 0:
            schedule.append(start + i + 1)
            quantities.append(float(q))
    return RQPolicy(tuple(schedule), tuple(quantities), model.instance.N - start, plan.cost)


def solve_static(instance: Instance, max_paths: int = 1000) -> RQPolicy:
    model = CycleModel(instance, "rq", max_paths=max_paths)
    plan = model.solve(0, instance.initial_inventory)
    return plan_to_policy(model, 0, instance.initial_inventory, plan)
