"""Time-fair access probabilities for fixed powers.

With powers fixed, time fairness ties every node's ``tau`` to that of the
slowest node ``j``.  Writing ``x = (1 - tau_j) / tau_j`` and
``rho_k = R_k / R_j``, the average slot per successful bit is, up to terms
that do not depend on ``x``, proportional to

    F(x) = sigma * x + T_col * ((1 + x) * prod_{k != j} (1 + rho_k / x) - x),

which is convex in ``tau_j``.  Minimizing ``F`` maximizes cell throughput.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize_scalar

from ..params import MacParams
from ..scenario import Scenario
from .problem import AllocationError, Problem, SolverConfig, build_problem

TAU_MIN = 1e-6


def reference_index(rates, node_ids=None) -> int:
    """Slowest link; the lowest node id wins ties."""
    rates = np.asarray(rates, dtype=float)
    ids = np.arange(len(rates)) if node_ids is None else np.asarray(node_ids)
    return int(min(range(len(rates)), key=lambda i: (rates[i], ids[i])))


def collision_time(overhead_rate: float, mac: MacParams) -> float:
    ovh = mac.l_col_bits / overhead_rate if mac.l_col_bits else 0.0
    return ovh + mac.l_colsec_s


def access_objective(tau_ref, ratios, sigma, t_col):
    """``F`` above as a function of the reference node's ``tau``.

    ``ratios`` holds ``R_k / R_j`` for every node, including ``j`` itself.
    """
    tau = np.asarray(tau_ref, dtype=float)
    x = (1.0 - tau) / tau
    ratios = np.asarray(ratios, dtype=float)
    others = np.delete(ratios, int(np.argmin(np.abs(ratios - 1.0))))
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        prod = np.prod(1.0 + others[:, None] / np.atleast_1d(x)[None, :], axis=0)
        val = sigma * x + t_col * ((1.0 + x) * prod.reshape(np.shape(x)) - x)
    return np.where(x == 0, np.inf if len(others) else t_col, val)


def propagate(tau_ref: float, rates, ref: int):
    """Spread ``tau_ref`` to every node so ``(1 - tau) / tau * R`` is constant."""
    rates = np.asarray(rates, dtype=float)
    rj = rates[ref]
    tau = tau_ref * rates / ((1.0 - tau_ref) * rj + tau_ref * rates)
    tau[ref] = tau_ref
    return tau


def optimal_access(rates, overhead_rate, mac: MacParams, tol: float = 1e-7, node_ids=None):
    """Throughput-optimal time-fair ``tau`` for one (cell, channel) pair."""
    rates = np.asarray(rates, dtype=float)
    if len(rates) == 1:
        return np.ones(1)
    if np.any(rates <= 0) or overhead_rate <= 0:
        raise AllocationError("zero rate: the pair cannot be made time-fair")
    j = reference_index(rates, node_ids)
    ratios = rates / rates[j]
    t_col = collision_time(overhead_rate, mac)
    hi = 1.0 - 1e-12
    f = lambda t: float(access_objective(t, ratios, mac.sigma_s, t_col))
    res = minimize_scalar(f, bounds=(TAU_MIN, hi), method="bounded", options={"xatol": tol})
    best = min((res.x, TAU_MIN, hi), key=f)
    return propagate(float(best), rates, j)


def solve_access(scenario: Scenario, assignment, powers, config: SolverConfig | None = None,
                 problem: Problem | None = None) -> dict:
    """Optimal time-fair access probabilities for every live pair."""
    config = config or SolverConfig()
    problem = problem or build_problem(scenario, assignment)
    out = {}
    for k, key in enumerate(problem.pairs):
        t = problem.tables[k]
        p = np.asarray(powers[key], dtype=float)
        rates = t.payload_rates(p)
        dead = [nid for nid, r in zip(t.node_ids, rates) if not r > 0]
        if dead or (t.n > 1 and not t.overhead_rate(p) > 0):
            raise AllocationError(f"cell {key[0]} channel {key[1]}: zero rate on node(s) {dead or list(t.node_ids)}")
        out[key] = optimal_access(rates, t.overhead_rate(p), scenario.mac, config.access_tol, t.node_ids)
    return out
