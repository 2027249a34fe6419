"""Non-stationary stochastic lot sizing: optimal and heuristic policies,
Monte-Carlo evaluation and re-planning."""

from .core import (CostParams, DemandSpec, Instance, RQPolicy, RSPolicy, SimReport, SsPolicy,
                   evaluate_trajectory, generate_test_bed)

__version__ = "0.1.0"

__all__ = ["CostParams", "DemandSpec", "Instance", "RQPolicy", "RSPolicy", "SimReport", "SsPolicy",
           "evaluate_trajectory", "generate_test_bed"]
