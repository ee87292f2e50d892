"""Power refinement with access probabilities held fixed.

Time fairness fixes every rate ratio inside a pair, so a pair's rates are
``R_i = B * kappa_i * r`` for one scalar ``r`` (bits/s/Hz of the reference
node) and ``P_i = (2**(kappa_i * r) - 1) / a_i``.  Each pair's throughput
depends only on its own ``r`` and increases with it; budgets and caps are
convex in ``r``.  Projected gradient ascent with backtracking climbs
toward the boundary of that set.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from ..mac import slot_stats
from ..scenario import Scenario
from .problem import AllocationError, Problem, SolverConfig, build_problem

log = logging.getLogger(__name__)
LN2 = np.log(2.0)


@dataclass
class RateParam:
    """Fairness-preserving parametrization of all live pairs."""

    problem: Problem
    kappa: list          # per pair, kappa_i >= 1 relative to the slowest node
    taus: list
    r_max: np.ndarray
    floor_frac: float = 1e-6     # every link keeps at least this share of its r_max

    @property
    def r_min(self):
        return self.floor_frac * self.r_max

    def powers_flat(self, r):
        out = np.empty(self.problem.size)
        for k, t in enumerate(self.problem.tables):
            sl = slice(self.problem.offsets[k], self.problem.offsets[k + 1])
            out[sl] = np.expm1(self.kappa[k] * r[k] * LN2) / t.a
        return out

    def dpowers_flat(self, r):
        out = np.empty(self.problem.size)
        for k, t in enumerate(self.problem.tables):
            sl = slice(self.problem.offsets[k], self.problem.offsets[k + 1])
            out[sl] = self.kappa[k] * LN2 * np.exp(self.kappa[k] * r[k] * LN2) / t.a
        return out

    def pair_throughput(self, k, rk) -> float:
        t = self.problem.tables[k]
        if rk <= 0:
            return 0.0
        p = np.expm1(self.kappa[k] * rk * LN2) / t.a
        rates = t.bandwidth_hz * self.kappa[k] * rk
        return slot_stats(self.taus[k], rates, t.overhead_rate(p), self.problem.scenario.mac).throughput

    def objective(self, r) -> float:
        return float(sum(self.pair_throughput(k, rk) for k, rk in enumerate(r)))

    def gradient_fd(self, r, rel=1e-6):
        g = np.empty(len(r))
        for k, rk in enumerate(r):
            h = rel * max(abs(rk), 1e-3)
            lo = max(rk - h, 0.0)
            hi = rk + h
            g[k] = (self.pair_throughput(k, hi) - self.pair_throughput(k, lo)) / (hi - lo)
        return g

    def gradient_analytic(self, r):
        mac = self.problem.scenario.mac
        g = np.empty(len(r))
        for k, rk in enumerate(r):
            t = self.problem.tables[k]
            kap = self.kappa[k]
            p = np.expm1(kap * rk * LN2) / t.a
            dp = kap * LN2 * np.exp(kap * rk * LN2) / t.a
            rates = t.bandwidth_hz * kap * rk
            ro = t.overhead_rate(p)
            sm = slot_stats(self.taus[k], rates, ro, mac)
            q = t.b * p
            i = int(np.argmin(q))
            dro = t.bandwidth_hz / LN2 / (1.0 + q[i]) * t.b[i] * dp[i]
            dts = -mac.o_bits / ro ** 2 * dro - mac.payload_bits / rates ** 2 * (t.bandwidth_hz * kap)
            dtc = -mac.l_col_bits / ro ** 2 * dro
            dsig = float(np.dot(sm.p_succ_i, dts)) + sm.p_col * dtc
            g[k] = -sm.p_succ * mac.payload_bits / sm.sigma_avg ** 2 * dsig
        return g

    # -- constraints, normalized so that feasibility means value <= 1 ----------

    def constraint_values(self, r):
        pr = self.problem
        flat = self.powers_flat(r)
        node = pr.node_usage(flat)[np.unique(pr.node_of)] / pr.budget
        rx = pr.rx_load(flat) / pr.rx_cap if len(pr.rx_ids) else np.zeros(0)
        return np.concatenate([node, rx])

    def constraint_jacobian(self, r):
        pr = self.problem
        d = self.dpowers_flat(r)
        pair_of = np.repeat(np.arange(len(pr.pairs)), np.diff(pr.offsets))
        nodes = np.unique(pr.node_of)
        jn = np.zeros((len(nodes), len(pr.pairs)))
        row = np.searchsorted(nodes, pr.node_of)
        np.add.at(jn, (row, pair_of), d / pr.budget)
        if len(pr.rx_ids):
            contrib = pr.rx_matrix * d[None, :]
            jr = np.zeros((len(pr.rx_ids), len(pr.pairs)))
            for k in range(len(pr.pairs)):
                jr[:, k] = contrib[:, pr.offsets[k]:pr.offsets[k + 1]].sum(axis=1)
            jr /= pr.rx_cap[:, None]
            return np.vstack([jn, jr])
        return jn

    def is_feasible(self, r, tol=0.0) -> bool:
        return bool(np.all(self.constraint_values(r) <= 1.0 + tol)) and bool(np.all(r >= 0))

    def shrink_to_feasible(self, r, tol=0.0):
        """Largest ``theta * r`` (``theta`` in [0, 1]) within the limits."""
        if self.is_feasible(r, tol):
            return r
        lo, hi = 0.0, 1.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if self.is_feasible(mid * r, tol):
                lo = mid
            else:
                hi = mid
        return lo * r

    def project(self, z, tol=0.0):
        """Euclidean projection of ``z`` onto the feasible set in ``r``."""
        z = np.clip(z, self.r_min, self.r_max)
        if self.is_feasible(z, tol):
            return z
        x0 = self.shrink_to_feasible(z, tol)
        with warnings.catch_warnings():
            # SLSQP may probe slightly outside the bounds; the result is clipped below
            warnings.simplefilter("ignore", RuntimeWarning)
            res = minimize(
                lambda x: 0.5 * float(np.sum((x - z) ** 2)),
                x0,
                jac=lambda x: x - z,
                bounds=list(zip(self.r_min, self.r_max)),
                constraints=[{"type": "ineq", "fun": lambda x: 1.0 - self.constraint_values(x),
                              "jac": lambda x: -self.constraint_jacobian(x)}],
                method="SLSQP",
                options={"ftol": 1e-14, "maxiter": 200},
            )
        x = np.clip(res.x if np.all(np.isfinite(res.x)) else x0, self.r_min, self.r_max)
        return self.shrink_to_feasible(x, tol)


def rate_param(problem: Problem, access: dict, powers: dict) -> tuple[RateParam, np.ndarray]:
    """Parametrization for ``access`` plus the starting ``r`` implied by ``powers``.

    When ``powers`` is not exactly time-fair for ``access`` the start is the
    largest ``r`` whose powers stay below the incoming ones.
    """
    kappas, taus, r0, r_max = [], [], [], []
    budget = problem.budget
    for k, key in enumerate(problem.pairs):
        t = problem.tables[k]
        tau = np.asarray(access[key], dtype=float)
        if t.n > 1 and np.any((tau <= 0) | (tau >= 1)):
            raise AllocationError(f"pair {key}: access probabilities must lie strictly inside (0, 1)")
        if t.n == 1:
            kap = np.ones(1)
        else:
            y = (1.0 - tau) / tau
            kap = y.max() / y
        rates = t.payload_rates(powers[key]) / t.bandwidth_hz
        kappas.append(kap)
        taus.append(tau)
        r0.append(float(np.min(rates / kap)))
        r_max.append(float(np.min(np.log2(1.0 + t.a * budget) / kap)))
    return RateParam(problem, kappas, taus, np.array(r_max)), np.array(r0)


def solve_power(scenario: Scenario, assignment, access: dict, powers: dict, config: SolverConfig | None = None,
                problem: Problem | None = None) -> dict:
    """Raise throughput over powers while keeping ``access`` time-fair.

    ``powers`` is the incoming allocation; it must satisfy the budgets and
    caps.  The result never has lower throughput than the start.
    """
    config = config or SolverConfig()
    problem = problem or build_problem(scenario, assignment)
    if not problem.pairs:
        return {}
    res = problem.residuals(powers)
    if res["power"] > config.feas_tol or res["interference"] > config.feas_tol:
        raise AllocationError(f"incoming powers infeasible: {res}")
    param, r = rate_param(problem, access, powers)
    r = param.shrink_to_feasible(np.minimum(r, param.r_max))
    grad = param.gradient_fd if config.gradient == "fd" else param.gradient_analytic
    f = param.objective(r)
    f_in = problem.throughput(powers, access)
    step = 1.0
    for _ in range(config.power_max_iters):
        g = grad(r) if config.gradient == "analytic" else grad(r, config.fd_rel_step)
        scale = float(np.max(np.abs(g)))
        if not scale > 0:
            break
        d = g / scale
        improved = False
        while step >= config.min_step:
            z = param.project(r + step * d)
            fz = param.objective(z)
            if fz > f and fz >= f + config.armijo_c * float(np.dot(g, z - r)):
                improved = True
                break
            step *= config.backtrack
        if not improved:
            break
        gain = fz - f
        r, f = z, fz
        step = min(step * 2.0, 1e3)
        if gain <= config.power_rel_tol * f:
            break
    if f <= f_in and problem.residuals(powers, access)["fairness"] <= 1e-12:
        # no ascent step was accepted: hand back the incoming allocation untouched
        return {key: np.array(powers[key], dtype=float) for key in problem.pairs}
    return problem.split(param.powers_flat(r))
