"""DCF saturation throughput with per-node rates and access probabilities.

Allocations are plain dicts keyed by ``(cell_id, channel)``; each value is
an array over the cell's nodes in ``cell.node_ids`` order.  A pair missing
from the dict is treated as silent (zero power and zero access).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .params import MacParams
from .radio import link_table
from .scenario import Scenario


class SlotModelError(ValueError):
    """Raised when a slot would last forever (a zero rate that is actually used)."""


def success_probabilities(taus):
    """``(p_idle, p_succ_i)`` for independent per-node access probabilities."""
    tau = np.asarray(taus, dtype=float)
    n = len(tau)
    if np.any((tau < 0) | (tau > 1)):
        raise ValueError("access probabilities must lie in [0, 1]")
    mat = np.where(np.eye(n, dtype=bool), tau[None, :], 1.0 - tau[None, :])
    return float(np.prod(1.0 - tau)), np.prod(mat, axis=1)


@dataclass(frozen=True)
class SlotModel:
    p_idle: float
    p_succ_i: np.ndarray
    t_succ_i: np.ndarray
    t_col: float
    sigma_avg: float
    payload_bits: float
    rates: np.ndarray
    overhead_rate: float

    @property
    def p_succ(self) -> float:
        return float(self.p_succ_i.sum())

    @property
    def p_col(self) -> float:
        return max(0.0, 1.0 - self.p_idle - self.p_succ)

    @property
    def throughput(self) -> float:
        return self.p_succ * self.payload_bits / self.sigma_avg

    @property
    def link_throughputs(self):
        return self.p_succ_i * self.payload_bits / self.sigma_avg

    @property
    def time_shares(self):
        """Fraction of airtime each link spends sending payload successfully."""
        with np.errstate(divide="ignore", invalid="ignore"):
            share = self.p_succ_i * self.payload_bits / self.rates
        return np.where(self.p_succ_i > 0, share, 0.0) / self.sigma_avg


def _slot_len(prob, length):
    # 0 * inf counts as 0: an unused infinite slot is harmless
    if prob == 0:
        return 0.0
    if not np.isfinite(length):
        raise SlotModelError("a slot with positive probability has infinite length (zero rate)")
    return prob * length


def slot_stats(taus, rates, overhead_rate, mac: MacParams) -> SlotModel:
    """Slot probabilities and lengths for one (cell, channel) pair."""
    rates = np.asarray(rates, dtype=float)
    p_idle, p_i = success_probabilities(taus)
    with np.errstate(divide="ignore"):
        inv_ro = 1.0 / overhead_rate if overhead_rate > 0 else np.inf
        inv_r = np.where(rates > 0, 1.0 / np.where(rates > 0, rates, 1.0), np.inf)
    t_col = (mac.l_col_bits * inv_ro if mac.l_col_bits else 0.0) + mac.l_colsec_s
    ovh = mac.o_bits * inv_ro if mac.o_bits else 0.0
    t_succ = mac.o_sec_s + ovh + mac.payload_bits * inv_r
    p_col = max(0.0, 1.0 - p_idle - float(p_i.sum()))
    sigma_avg = p_idle * mac.sigma_s + sum(_slot_len(p, t) for p, t in zip(p_i, t_succ)) + _slot_len(p_col, t_col)
    if sigma_avg <= 0:
        raise SlotModelError("average slot length must be positive")
    return SlotModel(p_idle, p_i, t_succ, t_col, sigma_avg, mac.payload_bits, rates, float(overhead_rate))


def _pair_arrays(value, key, n):
    if isinstance(value, dict):
        arr = value.get(key)
        if arr is None:
            return np.zeros(n)
    else:
        arr = value
    arr = np.asarray(arr, dtype=float)
    if arr.shape != (n,):
        raise ValueError(f"pair {key}: expected {n} entries, got shape {arr.shape}")
    return arr


def slot_model(cell, channel, access, powers, scenario: Scenario) -> SlotModel:
    """Slot model of ``cell`` on ``channel`` for the given allocation.

    ``access`` and ``powers`` may be per-node arrays or whole allocation
    dicts keyed by ``(cell_id, channel)``.
    """
    cid = getattr(cell, "id", cell)
    table = link_table(scenario, cid, channel)
    tau = _pair_arrays(access, (cid, channel), table.n)
    p = _pair_arrays(powers, (cid, channel), table.n)
    return slot_stats(tau, table.payload_rates(p), table.overhead_rate(p), scenario.mac)


def throughput(cell, channel, access, powers, scenario: Scenario) -> float:
    """Saturation throughput (bits/s) of ``cell`` on ``channel``."""
    return slot_model(cell, channel, access, powers, scenario).throughput


def jain_index(x) -> float:
    """Jain's fairness index; an all-zero vector counts as perfectly fair."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("Jain index of an empty vector")
    sq = float(np.sum(x * x))
    if sq == 0.0:
        return 1.0
    return float(np.sum(x) ** 2 / (x.size * sq))


@dataclass
class ThroughputReport:
    pair_throughput: dict                    # (cell, channel) -> bits/s
    pair_time_fairness: dict
    pair_throughput_fairness: dict
    cell_throughput: np.ndarray              # indexed by cell id
    cell_time_fairness: np.ndarray           # mean over the cell's channels, nan if none
    cell_throughput_fairness: np.ndarray
    receiver_interference: dict              # receiver id -> W
    receiver_imax: dict
    total: float
    meta: dict = field(default_factory=dict)

    def to_dict(self):
        def nan_none(v):
            return None if not np.isfinite(v) else float(v)

        return {
            "total_throughput_bps": float(self.total),
            "cells": [
                {
                    "cell_id": m,
                    "throughput_bps": float(self.cell_throughput[m]),
                    "time_fairness": nan_none(self.cell_time_fairness[m]),
                    "throughput_fairness": nan_none(self.cell_throughput_fairness[m]),
                }
                for m in range(len(self.cell_throughput))
            ],
            "pairs": [
                {
                    "cell_id": m,
                    "channel": s,
                    "throughput_bps": float(t),
                    "time_fairness": float(self.pair_time_fairness[(m, s)]),
                    "throughput_fairness": float(self.pair_throughput_fairness[(m, s)]),
                }
                for (m, s), t in sorted(self.pair_throughput.items())
            ],
            "receivers": [
                {
                    "receiver_id": rid,
                    "max_aggregate_interference_w": float(v),
                    "imax_w": float(self.receiver_imax[rid]),
                }
                for rid, v in self.receiver_interference.items()
            ],
            "meta": self.meta,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def to_csv(self) -> str:
        """One row per (cell, channel)."""
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["cell_id", "channel", "throughput_bps", "time_fairness", "throughput_fairness"])
        for (m, s), t in sorted(self.pair_throughput.items()):
            w.writerow([m, s, repr(float(t)), repr(self.pair_time_fairness[(m, s)]),
                        repr(self.pair_throughput_fairness[(m, s)])])
        return buf.getvalue()


def receiver_interference(scenario: Scenario, assignment, powers) -> np.ndarray:
    """Worst-case aggregate interference at every TV receiver (scenario order)."""
    out = np.zeros(len(scenario.tv_rxs))
    for cid, chans in assignment.channels.items():
        for s in chans:
            p = powers.get((cid, s))
            if p is None:
                continue
            table = link_table(scenario, cid, s)
            if len(table.rx_index):
                out[table.rx_index] += table.g @ np.asarray(p, dtype=float)
    return out


def network_report(scenario: Scenario, assignment, access, powers) -> ThroughputReport:
    """Aggregate throughput, fairness and TV interference over the network."""
    for key in set(access) | set(powers):
        m, s = key
        if s not in assignment.channels.get(m, ()):
            raise ValueError(f"allocation for {key} but channel {s} is not assigned to cell {m}")
    m_count = len(scenario.cells)
    pair_t, pair_tf, pair_xf = {}, {}, {}
    cell_t = np.zeros(m_count)
    tf_acc = [[] for _ in range(m_count)]
    xf_acc = [[] for _ in range(m_count)]
    for m in range(m_count):
        for s in assignment.channels.get(m, ()):
            if not scenario.cells[m].node_ids:
                continue
            sm = slot_model(m, s, access, powers, scenario)
            pair_t[(m, s)] = sm.throughput
            pair_tf[(m, s)] = jain_index(sm.time_shares)
            pair_xf[(m, s)] = jain_index(sm.link_throughputs)
            cell_t[m] += sm.throughput
            tf_acc[m].append(pair_tf[(m, s)])
            xf_acc[m].append(pair_xf[(m, s)])
    interf = receiver_interference(scenario, assignment, powers)
    return ThroughputReport(
        pair_throughput=pair_t,
        pair_time_fairness=pair_tf,
        pair_throughput_fairness=pair_xf,
        cell_throughput=cell_t,
        cell_time_fairness=np.array([np.mean(v) if v else np.nan for v in tf_acc]),
        cell_throughput_fairness=np.array([np.mean(v) if v else np.nan for v in xf_acc]),
        receiver_interference={rx.id: float(v) for rx, v in zip(scenario.tv_rxs, interf)},
        receiver_imax={rx.id: rx.imax_watts for rx in scenario.tv_rxs},
        total=float(cell_t.sum()),
    )


def network_throughput(scenario: Scenario, assignment, access, powers) -> float:
    total = 0.0
    for m, chans in assignment.channels.items():
        for s in chans:
            total += throughput(m, s, access, powers, scenario)
    return total
