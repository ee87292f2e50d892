"""Link gains, SINR, Shannon rates, overhead rate and channel quality.

The scalar functions mirror the model one link at a time.  For the
optimizers, :func:`link_table` condenses a (cell, channel) pair into a few
arrays so every rate is one vectorized expression of the node powers:

* ``a[i]`` -- payload SINR per Watt for node ``i`` to its destination,
* ``b[i]`` -- worst SINR per Watt from ``i`` to any other cell member,
* ``g[l, i]`` -- gain from node ``i`` to TV receiver ``l`` on the channel.

so that ``R_i = B log2(1 + a_i P_i)`` and ``R_o = B log2(1 + min_i b_i P_i)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .params import RadioParams
from .scenario import Scenario, ScenarioError, WhiteFiCell


def gains(d_km, radio: RadioParams):
    """Vectorized path-loss gain for distances in km (clamped below ``d0``)."""
    d = np.asarray(d_km, dtype=float)
    if np.any(d <= 0):
        raise ScenarioError("coincident points have no defined link gain")
    ratio = radio.pathloss_ref_km / np.maximum(d, radio.pathloss_ref_km)
    return radio.pathloss_ref_gain * ratio ** radio.pathloss_exponent


def gain(a, b, radio: RadioParams) -> float:
    """Linear power gain between two points."""
    d = float(np.hypot(a[0] - b[0], a[1] - b[1]))
    return float(gains(d, radio))


def _pairwise_dist(p, q):
    p = np.asarray(p, dtype=float).reshape(-1, 2)
    q = np.asarray(q, dtype=float).reshape(-1, 2)
    return np.hypot(p[:, None, 0] - q[None, :, 0], p[:, None, 1] - q[None, :, 1])


def tv_interference(points, channel, scenario: Scenario):
    """Received TV power (W) at each point from co-channel transmitters."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    txs = scenario.txs_on(channel)
    if not txs:
        return np.zeros(len(pts))
    locs = np.array([tx.location for tx in txs])
    pw = np.array([tx.power_watts for tx in txs])
    return gains(_pairwise_dist(pts, locs), scenario.radio) @ pw


def noise_plus_tv(points, channel, scenario: Scenario):
    """``B N0 + sum_k q_k P_k`` at each point."""
    return scenario.radio.noise_w + tv_interference(points, channel, scenario)


def sinr(tx, rx, channel, power_w, scenario: Scenario) -> float:
    """SINR at ``rx`` for ``tx`` sending with ``power_w`` on ``channel``.

    ``tx`` is a node; ``rx`` a node or a location.
    """
    if power_w < 0:
        raise ValueError("power must be non-negative")
    rx_loc = getattr(rx, "location", rx)
    h = gain(tx.location, rx_loc, scenario.radio)
    return float(h * power_w / noise_plus_tv([rx_loc], channel, scenario)[0])


def shannon_rate(snr, bandwidth_hz):
    return bandwidth_hz * np.log1p(np.asarray(snr, dtype=float)) / np.log(2.0)


def payload_rate(tx, rx, channel, power_w, scenario: Scenario) -> float:
    """Shannon payload rate in bits/s."""
    return float(shannon_rate(sinr(tx, rx, channel, power_w, scenario), scenario.radio.bandwidth_hz))


def overhead_rate(cell: WhiteFiCell, channel, powers, scenario: Scenario) -> float:
    """Common control-frame rate decodable by every node of ``cell``.

    ``powers`` lists each member's power on ``channel`` in ``cell.node_ids``
    order.  A lone node falls back to its own payload rate.
    """
    nodes = scenario.cell_nodes(cell.id)
    powers = np.asarray(powers, dtype=float)
    if len(nodes) == 1:
        n = nodes[0]
        return payload_rate(n, scenario.dest_point(n), channel, powers[0], scenario)
    worst = np.inf
    for i, ni in enumerate(nodes):
        s = min(sinr(ni, nj, channel, powers[i], scenario) for j, nj in enumerate(nodes) if j != i)
        worst = min(worst, s)
    return float(shannon_rate(worst, scenario.radio.bandwidth_hz))


def channel_quality(cell: WhiteFiCell, channel, scenario: Scenario) -> float:
    """Smallest cap-limited SINR any member can reach on ``channel``.

    For each node and each co-channel TV receiver the largest power the
    node could use alone (``I_max / g``) is turned into an SINR.  Returns
    ``inf`` when no receiver listens on the channel.
    """
    rxs = scenario.rxs_on(channel)
    nodes = scenario.cell_nodes(cell.id)
    if not rxs:
        return float("inf")
    if not nodes:
        return float("inf")
    locs = np.array([n.location for n in nodes])
    rx_locs = np.array([rx.location for rx in rxs])
    imax = np.array([rx.imax_watts for rx in rxs])
    g = gains(_pairwise_dist(locs, rx_locs), scenario.radio)          # (n, L)
    denom = noise_plus_tv(locs, channel, scenario)                      # (n,)
    return float(np.min((imax[None, :] / g) / denom[:, None]))


@dataclass(frozen=True)
class LinkTable:
    """Per-Watt SINR coefficients for one (cell, channel) pair."""

    cell_id: int
    channel: int
    node_ids: tuple
    a: np.ndarray            # payload SINR per W, shape (n,)
    b: np.ndarray            # worst control SINR per W, shape (n,)
    rx_index: np.ndarray     # indices into scenario.tv_rxs on this channel
    g: np.ndarray            # gain to receivers, shape (L, n)
    bandwidth_hz: float

    @property
    def n(self) -> int:
        return len(self.node_ids)

    def payload_rates(self, powers):
        return shannon_rate(self.a * np.asarray(powers, dtype=float), self.bandwidth_hz)

    def overhead_rate(self, powers):
        return float(shannon_rate(np.min(self.b * np.asarray(powers, dtype=float)), self.bandwidth_hz))

    def powers_for_rates(self, rates):
        """Invert the payload Shannon rate: power needed for each target rate."""
        return np.expm1(np.asarray(rates, dtype=float) / self.bandwidth_hz * np.log(2.0)) / self.a


def link_table(scenario: Scenario, cell_id: int, channel: int) -> LinkTable:
    """Condensed link coefficients for ``cell_id`` on ``channel`` (cached per scenario)."""
    return _link_table_cached(scenario, int(cell_id), int(channel))


@lru_cache(maxsize=4096)
def _link_table_cached(scenario: Scenario, cell_id: int, channel: int) -> LinkTable:
    radio = scenario.radio
    nodes = scenario.cell_nodes(cell_id)
    if not nodes:
        raise ScenarioError(f"cell {cell_id} has no nodes")
    locs = np.array([n.location for n in nodes])
    dests = np.array([scenario.dest_point(n) for n in nodes])
    h = gains(np.hypot(*(locs - dests).T), radio)
    a = h / noise_plus_tv(dests, channel, scenario)
    if len(nodes) == 1:
        b = a.copy()
    else:
        hij = gains(_pairwise_dist(locs, locs) + np.eye(len(nodes)), radio)
        per_w = hij / noise_plus_tv(locs, channel, scenario)[None, :]
        np.fill_diagonal(per_w, np.inf)
        b = per_w.min(axis=1)
    rx_index = np.array([k for k, rx in enumerate(scenario.tv_rxs) if rx.channel == channel], dtype=int)
    if len(rx_index):
        rx_locs = np.array([scenario.tv_rxs[k].location for k in rx_index])
        g = gains(_pairwise_dist(rx_locs, locs), radio)
    else:
        g = np.zeros((0, len(nodes)))
    for arr in (a, b, g):
        arr.setflags(write=False)
    return LinkTable(cell_id, channel, tuple(n.id for n in nodes), a, b, rx_index, g, radio.bandwidth_hz)
