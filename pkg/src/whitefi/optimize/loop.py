"""Alternating access/power optimization and an unfair diagnostic variant."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from ..mac import slot_stats
from ..scenario import Scenario
from .access import solve_access
from .init import power_init
from .power import solve_power
from .problem import SolverConfig, SolverTrace, TraceRow, build_problem, pair_throughput

log = logging.getLogger(__name__)


@dataclass
class OptimizeResult:
    powers: dict
    access: dict
    trace: SolverTrace
    converged: bool
    dropped: list = field(default_factory=list)
    init_infeasible: bool = False

    def __iter__(self):
        # allows ``powers, access, trace = optimize(...)``
        return iter((self.powers, self.access, self.trace))

    @property
    def throughput(self) -> float:
        return float(self.trace.rows[-1].throughput_bps) if self.trace.rows else 0.0


def _row(problem, it, powers, access, t0):
    res = problem.residuals(powers, access)
    return TraceRow(it, problem.throughput(powers, access), res["interference"], res["power"],
                    res["fairness"], time.perf_counter() - t0)


def optimize(scenario: Scenario, assignment, config: SolverConfig | None = None) -> OptimizeResult:
    """Start from the convex initialization, then alternate access and power steps.

    Stops once the throughput change drops below ``config.epsilon`` or after
    ``config.max_outer_iters`` iterations (then ``converged`` is False).
    """
    config = config or SolverConfig()
    t0 = time.perf_counter()
    problem = build_problem(scenario, assignment)
    init = power_init(scenario, assignment, config, problem)
    trace = SolverTrace()
    if not problem.pairs or init.infeasible:
        zeros = {k: np.zeros(t.n) for k, t in zip(problem.pairs, problem.tables)}
        trace.rows.append(_row(problem, 1, zeros, zeros, t0))
        return OptimizeResult(zeros, dict(zeros), trace, True, init.dropped, init.infeasible)
    powers, access = init.powers, None
    prev = 0.0
    converged = False
    for it in range(1, config.max_outer_iters + 1):
        fresh = solve_access(scenario, assignment, powers, config, problem)
        if access is not None:
            # the previous access is still time-fair for the current rates; keep whichever is better
            for k, key in enumerate(problem.pairs):
                t = problem.tables[k]
                if pair_throughput(t, access[key], powers[key], scenario) > pair_throughput(t, fresh[key], powers[key], scenario):
                    fresh[key] = access[key]
        access = fresh
        powers = solve_power(scenario, assignment, access, powers, config, problem)
        row = _row(problem, it, powers, access, t0)
        trace.rows.append(row)
        log.info("iter %d throughput %.6g bps", it, row.throughput_bps)
        if abs(row.throughput_bps - prev) < config.epsilon(row.throughput_bps) or row.throughput_bps == prev:
            converged = True
            break
        prev = row.throughput_bps
    if not converged:
        log.warning("no convergence within %d outer iterations", config.max_outer_iters)
    return OptimizeResult(powers, access, trace, converged, init.dropped, False)


def unfair_access(scenario: Scenario, assignment, powers: dict, sweeps: int = 30, grid: int = 101,
                  start: dict | None = None) -> dict:
    """Diagnostic: per-link coordinate maximization of throughput with no fairness.

    Each sweep sets every link's ``tau`` to the value that maximizes its
    pair's throughput with the other links held fixed.
    """
    problem = build_problem(scenario, assignment)
    out = {}
    ts = np.linspace(0.0, 1.0, grid)
    for k, key in enumerate(problem.pairs):
        t = problem.tables[k]
        p = powers[key]
        rates, ro = t.payload_rates(p), t.overhead_rate(p)
        tau = np.array(start[key], dtype=float) if start else np.full(t.n, 1.0 / t.n)

        def thr(v):
            return slot_stats(v, rates, ro, scenario.mac).throughput

        for _ in range(sweeps):
            before = tau.copy()
            for i in range(t.n):
                def neg(x, i=i):
                    v = tau.copy()
                    v[i] = x
                    return -thr(v)
                vals = np.array([neg(x) for x in ts])
                j = int(np.argmin(vals))
                lo, hi = ts[max(j - 1, 0)], ts[min(j + 1, grid - 1)]
                res = minimize_scalar(neg, bounds=(lo, hi), method="bounded", options={"xatol": 1e-9})
                tau[i] = res.x if res.fun < vals[j] else ts[j]
            if np.allclose(tau, before, atol=1e-10):
                break
        out[key] = tau
    return out
