"""Initial feasible powers from a convex round-robin surrogate.

Each node's round-robin turn costs ``L / sum_s R_is + O_bits / Rbar_m``
seconds, where ``Rbar_m`` is the summed overhead rate of its cell.  The sum
of those turn times is convex in the powers and is minimized subject to the
node budgets and the receiver caps.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

from ..scenario import Scenario
from .problem import Problem, SolverConfig, build_problem
from .waterfill import waterfill

log = logging.getLogger(__name__)

# keeps every link alive when O_bits = 0 (otherwise a channel may get no power)
_MIN_OVERHEAD_BITS = 1e-6
# floor on each power, as a fraction of the most that entry could use alone
_LIVE_FRACTION = 1e-9


@dataclass
class InitResult:
    powers: dict
    infeasible: bool = False          # every pair forced to zero power
    dropped: list = field(default_factory=list)
    solver: str = ""


def _single_link(problem: Problem):
    cells = {m for m, _ in problem.pairs}
    if len(cells) != 1 or len(problem.scenario.cells[cells.pop()].node_ids) != 1:
        return None
    floors = np.array([1.0 / t.a[0] for t in problem.tables])
    caps = np.full(len(floors), np.inf)
    for r in range(len(problem.rx_ids)):
        row = problem.rx_matrix[r]
        k = int(np.flatnonzero(row)[0])
        caps[k] = min(caps[k], problem.rx_cap[r] / row[k])
    res = waterfill(floors, caps, problem.budget)
    return problem.split(res.powers)


def _cvx_solve(problem: Problem, solver: str):
    sc = problem.scenario
    mac, budget = sc.mac, problem.budget
    o_bits = mac.o_bits if mac.o_bits > 0 else _MIN_OVERHEAD_BITS
    p = cp.Variable(problem.size, nonneg=True)              # powers / P_T
    cons = []
    # per-node budgets
    for nid in np.unique(problem.node_of):
        cons.append(cp.sum(p[np.flatnonzero(problem.node_of == nid)]) <= 1.0)
    # receiver caps, normalized by I_max
    if len(problem.rx_ids):
        cons.append((problem.rx_matrix * (budget / problem.rx_cap[:, None])) @ p <= 1.0)
    payload = {}                                            # node id -> list of rate exprs (bits/s/Hz)
    cells = {}
    for k, (m, s) in enumerate(problem.pairs):
        t = problem.tables[k]
        sl = slice(problem.offsets[k], problem.offsets[k + 1])
        ps = p[sl]
        rate = cp.log(1 + cp.multiply(t.a * budget, ps)) / np.log(2)
        for i, nid in enumerate(t.node_ids):
            payload.setdefault(nid, []).append(rate[i])
        w = cp.Variable()
        cons.append(w <= cp.log(1 + cp.multiply(t.b * budget, ps)) / np.log(2))
        cells.setdefault(m, []).append(w)
    obj = 0
    for nid, rates in payload.items():
        obj += mac.payload_bits * cp.inv_pos(cp.sum(cp.hstack(rates)))
    for m, ws in cells.items():
        obj += o_bits * len(sc.cells[m].node_ids) * cp.inv_pos(cp.sum(cp.hstack(ws)))
    prob = cp.Problem(cp.Minimize(obj / sc.radio.bandwidth_hz * 1e3), cons)
    prob.solve(solver=solver)
    if p.value is None or prob.status not in ("optimal", "optimal_inaccurate"):
        raise cp.SolverError(f"{solver}: {prob.status}")
    return np.asarray(p.value, dtype=float) * budget


def _equal_split(problem: Problem):
    counts = np.bincount(problem.node_of, minlength=len(problem.scenario.nodes)).astype(float)
    return problem.budget / counts[problem.node_of]


def entry_limits(problem: Problem):
    """Largest power each flat entry could use on its own (budget or tightest cap)."""
    lim = np.full(problem.size, problem.budget)
    if len(problem.rx_ids):
        with np.errstate(divide="ignore"):
            per = np.where(problem.rx_matrix > 0, problem.rx_cap[:, None] / problem.rx_matrix, np.inf)
        lim = np.minimum(lim, per.min(axis=0))
    return lim


def make_feasible(problem: Problem, flat, fill=True):
    """Clip, shrink each node and receiver into its limits, then scale up uniformly."""
    flat = np.asarray(flat, dtype=float)
    # a link left at zero power has zero rate and cannot be made time-fair
    flat = np.maximum(flat, _LIVE_FRACTION * entry_limits(problem))
    use = problem.node_usage(flat)
    over = use > problem.budget
    if np.any(over):
        factor = np.where(over, problem.budget / np.where(over, use, 1.0), 1.0)
        flat = flat * factor[problem.node_of]
    if len(problem.rx_ids):
        load = problem.rx_load(flat)
        hot = load > problem.rx_cap
        if np.any(hot):
            shrink = np.ones(problem.size)
            for r in np.flatnonzero(hot):
                touched = problem.rx_matrix[r] > 0
                shrink[touched] = np.minimum(shrink[touched], problem.rx_cap[r] / load[r])
            flat = flat * shrink
    lam = problem.feasible_scale(flat)
    if np.isfinite(lam) and (fill or lam < 1.0):
        flat = flat * lam
    # rounding can leave a residue of a few ulps
    for _ in range(3):
        lam = problem.feasible_scale(flat)
        if lam >= 1.0:
            break
        flat = flat * lam * (1.0 - 1e-15)
    return flat


def power_init(scenario: Scenario, assignment, config: SolverConfig | None = None, problem: Problem | None = None) -> InitResult:
    """Feasible starting powers for every live (cell, channel) pair.

    Returns zero powers and ``infeasible=True`` when every pair is forced to
    zero.  Pairs whose receivers tolerate no interference at all are
    listed in ``dropped`` and receive no entry.
    """
    config = config or SolverConfig()
    problem = problem or build_problem(scenario, assignment)
    if problem.dropped:
        log.warning("pairs dropped (zero interference cap): %s", problem.dropped)
    if not problem.pairs:
        return InitResult({}, infeasible=bool(problem.dropped), dropped=list(problem.dropped), solver="none")
    single = _single_link(problem)
    if single is not None:
        flat = problem.flatten(single)
        used = "waterfill"
    else:
        flat, used = None, ""
        for solver in (config.init_solver, "SCS"):
            try:
                flat = _cvx_solve(problem, solver)
                used = solver
                break
            except (cp.SolverError, ValueError) as exc:
                log.warning("power init with %s failed: %s", solver, exc)
        if flat is None:
            flat, used = _equal_split(problem), "equal-split"
    flat = make_feasible(problem, flat)
    infeasible = not np.any(flat > 0)
    if infeasible:
        log.warning("every pair is forced to zero power")
    return InitResult(problem.split(flat), infeasible, list(problem.dropped), used)
