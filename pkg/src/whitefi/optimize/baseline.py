"""Homogeneous allocator: one power and one access probability per pair."""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize_scalar

from ..mac import slot_stats
from ..params import MacParams
from ..scenario import Scenario
from .init import make_feasible
from .problem import Problem, SolverConfig, build_problem


def homogeneous_tau(rates, overhead_rate, mac: MacParams, tol: float = 1e-7, grid: int = 200) -> float:
    """Common ``tau`` that maximizes one pair's throughput (grid, then Brent)."""
    n = len(rates)
    if n == 1:
        return 1.0

    def neg(t):
        return -slot_stats(np.full(n, t), rates, overhead_rate, mac).throughput

    ts = np.linspace(1e-4, 1.0 - 1e-9, grid)
    vals = np.array([neg(t) for t in ts])
    k = int(np.argmin(vals))
    lo, hi = ts[max(k - 1, 0)], ts[min(k + 1, grid - 1)]
    res = minimize_scalar(neg, bounds=(lo, hi), method="bounded", options={"xatol": tol})
    return float(res.x) if res.fun <= vals[k] else float(ts[k])


def _pair_gain_sums(problem: Problem):
    """``G[l, p]``: total gain from pair ``p``'s nodes to receiver ``l``."""
    out = np.zeros((len(problem.rx_ids), len(problem.pairs)))
    for k in range(len(problem.pairs)):
        out[:, k] = problem.rx_matrix[:, problem.offsets[k]:problem.offsets[k + 1]].sum(axis=1)
    return out


def baseline_powers(problem: Problem, sweeps: int = 20) -> np.ndarray:
    """Common power per pair: equal split, then raise each pair into any slack left."""
    sizes = np.diff(problem.offsets)
    cells = [m for m, _ in problem.pairs]
    per_cell = {m: cells.count(m) for m in set(cells)}
    start = np.array([problem.budget / per_cell[m] for m in cells])
    flat = make_feasible(problem, np.repeat(start, sizes))
    level = flat[problem.offsets[:-1]].copy()
    G = _pair_gain_sums(problem)
    for _ in range(sweeps):
        before = level.copy()
        for k, m in enumerate(cells):
            others = sum(level[j] for j, c in enumerate(cells) if c == m and j != k)
            top = problem.budget - others
            if len(problem.rx_ids):
                load = G @ level - G[:, k] * level[k]
                hit = G[:, k] > 0
                if np.any(hit):
                    top = min(top, float(np.min((problem.rx_cap[hit] - load[hit]) / G[hit, k])))
            level[k] = max(level[k], min(top, problem.budget))
        if np.allclose(level, before, rtol=1e-12, atol=0):
            break
    flat = np.repeat(level, sizes)
    lam = problem.feasible_scale(flat)
    if lam < 1.0:
        flat = flat * lam
    return flat


def baseline(scenario: Scenario, assignment, config: SolverConfig | None = None, problem: Problem | None = None):
    """Homogeneous allocation ``(powers, access)`` for every live pair."""
    config = config or SolverConfig()
    problem = problem or build_problem(scenario, assignment)
    if not problem.pairs:
        return {}, {}
    powers = problem.split(baseline_powers(problem))
    access = {}
    for k, key in enumerate(problem.pairs):
        t = problem.tables[k]
        p = powers[key]
        tau = homogeneous_tau(t.payload_rates(p), t.overhead_rate(p), scenario.mac, config.access_tol)
        access[key] = np.full(t.n, tau)
    return powers, access
