"""Power and access allocation for an assigned White-Fi network."""

from .access import access_objective, optimal_access, propagate, reference_index, solve_access
from .baseline import baseline, homogeneous_tau
from .init import InitResult, power_init
from .loop import OptimizeResult, optimize, unfair_access
from .power import solve_power
from .problem import AllocationError, Problem, SolverConfig, SolverTrace, TraceRow, build_problem, fairness_residual
from .waterfill import WaterfillResult, waterfill, waterfill_single_link

__all__ = [
    "AllocationError", "InitResult", "OptimizeResult", "Problem", "SolverConfig", "SolverTrace", "TraceRow",
    "WaterfillResult", "access_objective", "baseline", "build_problem", "fairness_residual", "homogeneous_tau",
    "optimal_access", "optimize", "power_init", "propagate", "reference_index", "solve_access", "solve_power",
    "unfair_access", "waterfill", "waterfill_single_link",
]
