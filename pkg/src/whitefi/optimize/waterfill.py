"""Closed-form power split of one link over parallel capped channels.

Maximizes ``sum_s ln(1 + P_s / n_s)`` subject to ``sum_s P_s <= budget``
and ``0 <= P_s <= cap_s``, where ``n_s`` is noise-plus-TV over link gain
and ``cap_s = I_max / g`` is the interference ceiling on channel ``s``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..radio import link_table
from ..scenario import Scenario


@dataclass(frozen=True)
class WaterfillResult:
    powers: np.ndarray
    level: float            # water level W (inf when the budget is slack)
    mu_budget: float        # multiplier of the budget constraint, 1/W
    mu_caps: np.ndarray     # multipliers of the per-channel caps (per unit g*P/I_max)

    def slackness(self, caps) -> np.ndarray:
        """``mu_s * (P_s / cap_s - 1)``; zero at a KKT point."""
        caps = np.asarray(caps, dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            rel = np.where(np.isfinite(caps), self.powers / caps - 1.0, -1.0)
        return self.mu_caps * rel


def _fill(level, floor, caps):
    return np.clip(level - floor, 0.0, caps)


def waterfill(floor, caps, budget) -> WaterfillResult:
    """Capped water-filling by an exact breakpoint search.

    Parameters
    ----------
    floor : array_like
        ``n_s``, noise-plus-interference divided by the link gain (W).
    caps : array_like
        Per-channel power ceilings (W); ``inf`` for uncapped channels.
    budget : float
        Total power available to the link (W).
    """
    n = np.asarray(floor, dtype=float)
    caps = np.asarray(caps, dtype=float)
    if n.shape != caps.shape or n.ndim != 1 or len(n) == 0:
        raise ValueError("floor and caps must be equal-length 1-D arrays")
    if np.any(n <= 0) or np.any(caps < 0) or budget < 0:
        raise ValueError("floors must be positive, caps and budget non-negative")
    if np.all(caps == 0):
        raise ValueError("every channel is capped at zero power")
    if caps.sum() <= budget:
        p = caps.copy()
        mu = 1.0 / (n + p) * caps  # per-unit-of-(P/cap) scaling, mu0 = 0
        return WaterfillResult(p, np.inf, 0.0, mu)
    # total(W) is piecewise linear and nondecreasing; locate the segment holding the budget
    bps = np.unique(np.concatenate([n, (n + caps)[np.isfinite(caps)]]))
    totals = np.array([_fill(w, n, caps).sum() for w in bps])
    k = int(np.searchsorted(totals, budget, side="left"))
    if k == 0:
        level = bps[0]
    else:
        lo, hi = bps[k - 1], bps[k] if k < len(bps) else np.inf
        active = (n <= lo) & (n + caps > lo)          # channels filling on this segment
        slope = int(active.sum())
        level = lo + (budget - totals[k - 1]) / slope
        if k < len(bps):
            level = min(level, hi)
    p = _fill(level, n, caps)
    mu0 = 1.0 / level
    capped = np.isfinite(caps) & (level - n > caps)
    # stationarity 1/(n+P) = mu0 + nu_s g_s, expressed per unit of P/cap
    mu = np.where(capped, np.maximum(1.0 / (n + p) - mu0, 0.0) * np.where(capped, caps, 0.0), 0.0)
    return WaterfillResult(p, float(level), float(mu0), mu)


def single_link_terms(scenario: Scenario, node_id: int, channels):
    """Floors ``n_s`` and caps ``I_max / g`` for one node over ``channels``."""
    node = scenario.nodes[node_id]
    floors, caps = [], []
    for s in channels:
        t = link_table(scenario, node.cell_id, s)
        i = t.node_ids.index(node_id)
        floors.append(1.0 / t.a[i])
        if len(t.rx_index):
            imax = np.array([scenario.tv_rxs[k].imax_watts for k in t.rx_index])
            caps.append(float(np.min(imax / t.g[:, i])))
        else:
            caps.append(np.inf)
    return np.array(floors), np.array(caps)


def waterfill_single_link(scenario: Scenario, node_id: int, channels, caps=None, budget=None) -> WaterfillResult:
    """Optimal split of ``node_id``'s budget across ``channels``.

    ``caps`` overrides the receiver-derived ceilings when given.
    """
    floors, derived = single_link_terms(scenario, node_id, channels)
    caps = derived if caps is None else np.asarray(caps, dtype=float)
    budget = scenario.mac.power_budget_w if budget is None else budget
    return waterfill(floors, caps, budget)
