"""Shared bookkeeping for the allocators: pairs, constraints, residuals."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, asdict

import numpy as np

from ..mac import slot_stats
from ..radio import LinkTable, link_table
from ..scenario import Scenario


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and step controls for the alternating optimizer.

    ``outer_epsilon`` is an absolute throughput change in bits/s; ``None``
    means ``outer_rel_epsilon`` times the current throughput.
    """

    outer_epsilon: float | None = None
    outer_rel_epsilon: float = 1e-3
    max_outer_iters: int = 50
    access_tol: float = 1e-7
    power_max_iters: int = 60
    power_rel_tol: float = 1e-9
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    min_step: float = 1e-10
    gradient: str = "fd"            # "fd" (central differences) or "analytic"
    fd_rel_step: float = 1e-6
    feas_tol: float = 1e-9          # relative slack allowed on budgets and caps
    init_solver: str = "CLARABEL"
    seed: int = 0

    def __post_init__(self):
        for name in ("outer_rel_epsilon", "access_tol", "power_rel_tol", "feas_tol", "fd_rel_step", "min_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.outer_epsilon is not None and not self.outer_epsilon > 0:
            raise ValueError("outer_epsilon must be positive")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be at least 1")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack must lie in (0, 1)")
        if self.gradient not in ("fd", "analytic"):
            raise ValueError("gradient must be 'fd' or 'analytic'")

    def epsilon(self, throughput: float) -> float:
        if self.outer_epsilon is not None:
            return self.outer_epsilon
        return self.outer_rel_epsilon * abs(throughput)

    def to_dict(self):
        return asdict(self)


class AllocationError(ValueError):
    """Raised for allocations the solvers cannot start from."""


@dataclass
class Problem:
    """Flattened view of every live (cell, channel) pair.

    Powers of all pairs are stacked into one vector; ``offsets[k]`` is where
    pair ``k`` starts.  ``node_rows`` maps that vector to per-node budget
    usage and ``rx_rows`` to per-receiver interference.
    """

    scenario: Scenario
    pairs: list
    tables: list
    offsets: np.ndarray
    node_of: np.ndarray          # node id for every flat entry
    rx_ids: np.ndarray           # receivers that see at least one live pair
    rx_matrix: np.ndarray        # (len(rx_ids), n_flat) gains
    rx_cap: np.ndarray
    dropped: list = field(default_factory=list)

    @property
    def size(self) -> int:
        return int(self.offsets[-1])

    @property
    def budget(self) -> float:
        return self.scenario.mac.power_budget_w

    def index(self, key) -> int:
        return self.pairs.index(key)

    def split(self, flat):
        return {key: np.asarray(flat[self.offsets[k]:self.offsets[k + 1]], dtype=float).copy()
                for k, key in enumerate(self.pairs)}

    def flatten(self, alloc) -> np.ndarray:
        out = np.zeros(self.size)
        for k, key in enumerate(self.pairs):
            v = alloc.get(key)
            if v is not None:
                out[self.offsets[k]:self.offsets[k + 1]] = v
        return out

    def node_usage(self, flat):
        """Total power per node id (only nodes in live pairs are nonzero)."""
        return np.bincount(self.node_of, weights=flat, minlength=len(self.scenario.nodes))

    def rx_load(self, flat):
        return self.rx_matrix @ flat

    def residuals(self, powers, access=None) -> dict:
        """Relative constraint violations (0 when satisfied)."""
        flat = self.flatten(powers)
        pw = max(0.0, float(np.max(self.node_usage(flat), initial=0.0)) / self.budget - 1.0)
        if len(self.rx_ids):
            with np.errstate(divide="ignore", invalid="ignore"):
                rel = np.where(self.rx_cap > 0, self.rx_load(flat) / self.rx_cap - 1.0,
                               np.where(self.rx_load(flat) > 0, np.inf, 0.0))
            ix = max(0.0, float(rel.max()))
        else:
            ix = 0.0
        fair = 0.0
        if access is not None:
            for k, key in enumerate(self.pairs):
                t = access.get(key)
                if t is None:
                    continue
                fair = max(fair, fairness_residual(t, self.tables[k].payload_rates(powers[key])))
        return {"interference": ix, "power": pw, "fairness": fair}

    def feasible_scale(self, flat) -> float:
        """Largest uniform factor keeping ``flat`` within budgets and caps."""
        lam = np.inf
        use = self.node_usage(flat)
        if use.max(initial=0.0) > 0:
            lam = self.budget / use.max()
        if len(self.rx_ids):
            load = self.rx_load(flat)
            pos = load > 0
            if np.any(pos):
                lam = min(lam, float(np.min(self.rx_cap[pos] / load[pos])))
        return float(lam)

    def throughput(self, powers, access) -> float:
        total = 0.0
        for k, key in enumerate(self.pairs):
            total += pair_throughput(self.tables[k], access[key], powers[key], self.scenario)
        return total


def pair_throughput(table: LinkTable, taus, powers, scenario: Scenario) -> float:
    return slot_stats(taus, table.payload_rates(powers), table.overhead_rate(powers), scenario.mac).throughput


def fairness_residual(taus, rates) -> float:
    """Spread of ``(1 - tau) / tau * R`` across a pair, relative to its max."""
    taus = np.asarray(taus, dtype=float)
    rates = np.asarray(rates, dtype=float)
    if len(taus) < 2:
        return 0.0
    if np.any(taus <= 0):
        return np.inf
    v = (1.0 - taus) / taus * rates
    top = float(v.max())
    if top == 0.0:
        return 0.0
    return float((v.max() - v.min()) / top)


def build_problem(scenario: Scenario, assignment) -> Problem:
    """Collect live pairs; pairs facing a zero interference cap are dropped."""
    pairs, tables, dropped = [], [], []
    for m in sorted(assignment.channels):
        if not scenario.cells[m].node_ids:
            continue
        for s in assignment.channels[m]:
            t = link_table(scenario, m, s)
            if len(t.rx_index) and any(scenario.tv_rxs[k].imax_watts <= 0 for k in t.rx_index):
                dropped.append((m, s))
                continue
            pairs.append((m, s))
            tables.append(t)
    sizes = [t.n for t in tables]
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    node_of = np.array([nid for t in tables for nid in t.node_ids], dtype=int)
    rx_set = sorted({int(k) for t in tables for k in t.rx_index})
    pos = {k: r for r, k in enumerate(rx_set)}
    mat = np.zeros((len(rx_set), int(offsets[-1])))
    for k, t in enumerate(tables):
        for row, rk in enumerate(t.rx_index):
            mat[pos[int(rk)], offsets[k]:offsets[k + 1]] = t.g[row]
    cap = np.array([scenario.tv_rxs[k].imax_watts for k in rx_set], dtype=float)
    return Problem(scenario, pairs, tables, offsets, node_of, np.array(rx_set, dtype=int), mat, cap, dropped)


@dataclass
class TraceRow:
    iter: int
    throughput_bps: float
    max_interference_residual: float
    max_power_residual: float
    max_fairness_residual: float
    seconds: float


@dataclass
class SolverTrace:
    rows: list = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    @property
    def throughputs(self):
        return np.array([r.throughput_bps for r in self.rows])

    def to_csv(self, header_lines=()) -> str:
        buf = io.StringIO()
        for line in header_lines:
            buf.write(f"# {line}\n")
        w = csv.writer(buf)
        cols = ["iter", "throughput_bps", "max_interference_residual", "max_power_residual",
                "max_fairness_residual", "seconds"]
        w.writerow(cols)
        for r in self.rows:
            w.writerow([r.iter] + [repr(float(getattr(r, c))) for c in cols[1:]])
        return buf.getvalue()
