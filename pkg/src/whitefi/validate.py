"""Independent oracles: slot-level Monte Carlo, exhaustive enumeration, grid searches.

Nothing here calls the optimizers.  :func:`check_allocation` recomputes
gains, SINRs and interference straight from the scenario's coordinates so
it does not share code paths with :mod:`whitefi.radio`.
"""

from __future__ import annotations

import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .mac import slot_stats
from .params import MacParams
from .radio import link_table
from .scenario import Scenario


# -- Monte Carlo -----------------------------------------------------------------

@dataclass
class SimResult:
    slots_simulated: int
    idle_slots: int
    collision_slots: int
    success_counts: np.ndarray
    sim_time_s: float
    throughput_bps: float
    ci_half_width_bps: float
    batches: int
    seed: int

    def covers(self, value: float) -> bool:
        return abs(value - self.throughput_bps) <= self.ci_half_width_bps

    def to_dict(self):
        d = asdict(self)
        d["success_counts"] = [int(c) for c in self.success_counts]
        return d

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def node_stream(seed: int, node_id: int) -> np.random.Generator:
    """Per-node generator; adding nodes leaves other nodes' draws unchanged."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(node_id)])))


def simulate_slots(taus, rates, overhead_rate, mac: MacParams, n_slots: int, seed: int,
                   node_ids=None, batches: int = 100, level: float = 0.95) -> SimResult:
    """Simulate ``n_slots`` independent DCF slots.

    Every node transmits in a slot with probability ``tau_i``.  Idle slots
    last ``sigma``; a lone transmitter's slot lasts its success time; two or
    more transmitters collide for ``T_col``.
    """
    taus = np.asarray(taus, dtype=float)
    rates = np.asarray(rates, dtype=float)
    n = len(taus)
    ids = range(n) if node_ids is None else node_ids
    if n_slots < batches:
        raise ValueError("need at least one slot per batch")
    tx = np.empty((n, n_slots), dtype=bool)
    for i, nid in enumerate(ids):
        tx[i] = node_stream(seed, nid).random(n_slots) < taus[i]
    count = tx.sum(axis=0)
    success = count == 1
    winner = np.argmax(tx, axis=0)
    with np.errstate(divide="ignore"):
        inv_ro = 1.0 / overhead_rate if overhead_rate > 0 else np.inf
        t_succ = mac.o_sec_s + (mac.o_bits * inv_ro if mac.o_bits else 0.0) + mac.payload_bits / rates
    t_col = (mac.l_col_bits * inv_ro if mac.l_col_bits else 0.0) + mac.l_colsec_s
    length = np.full(n_slots, mac.sigma_s)
    if np.any(success):
        length[success] = t_succ[winner[success]]
    if np.any(count > 1):
        length[count > 1] = t_col
    bits = np.where(success, float(mac.payload_bits), 0.0)
    total_time = float(length.sum())
    thr = float(bits.sum() / total_time)
    per_batch = np.array([b.sum() / l.sum() for b, l in zip(np.array_split(bits, batches),
                                                            np.array_split(length, batches))])
    q = stats.t.ppf(0.5 + level / 2.0, batches - 1)
    half = float(q * per_batch.std(ddof=1) / np.sqrt(batches))
    succ_counts = np.bincount(winner[success], minlength=n)
    return SimResult(n_slots, int((count == 0).sum()), int((count > 1).sum()), succ_counts, total_time,
                     thr, half, batches, int(seed))


def simulate_dcf(cell, channel, access, powers, scenario: Scenario, n_slots: int = 1_000_000,
                 seed: int = 0) -> SimResult:
    """Monte Carlo throughput of ``cell`` on ``channel`` for a given allocation."""
    if n_slots < 10_000:
        raise ValueError("n_slots must be at least 1e4")
    cid = getattr(cell, "id", cell)
    t = link_table(scenario, cid, channel)
    key = (cid, channel)
    tau = np.asarray(access[key] if isinstance(access, dict) else access, dtype=float)
    p = np.asarray(powers[key] if isinstance(powers, dict) else powers, dtype=float)
    return simulate_slots(tau, t.payload_rates(p), t.overhead_rate(p), scenario.mac, n_slots, seed, t.node_ids)


# -- exact oracles -----------------------------------------------------------------

def enumerate_slots(taus):
    """Exact ``(p_idle, p_succ_i, p_collision)`` by summing all transmit patterns."""
    taus = [float(t) for t in taus]
    n = len(taus)
    if n > 20:
        raise ValueError("enumeration is limited to 20 nodes")
    p_idle, p_col = 0.0, 0.0
    p_succ = np.zeros(n)
    for pattern in itertools.product((0, 1), repeat=n):
        pr = 1.0
        for on, t in zip(pattern, taus):
            pr *= t if on else 1.0 - t
        k = sum(pattern)
        if k == 0:
            p_idle += pr
        elif k == 1:
            p_succ[pattern.index(1)] += pr
        else:
            p_col += pr
    return p_idle, p_succ, p_col


def grid_oracle_access(rates, mac_params: MacParams, step: float = 1e-4, overhead_rate: float | None = None):
    """Best time-fair access vector on a uniform grid of the slowest node's ``tau``.

    Evaluates the true slot-model throughput at every grid point, so it does
    not rely on the reduced one-dimensional objective.  ``overhead_rate``
    defaults to the smallest payload rate.
    """
    if step > 1e-4:
        raise ValueError("grid step must be at most 1e-4")
    rates = np.asarray(rates, dtype=float)
    n = len(rates)
    if n == 1:
        return np.ones(1)
    ro = float(rates.min()) if overhead_rate is None else float(overhead_rate)
    j = int(np.argmin(rates))
    grid = np.arange(1, int(round(1.0 / step)) + 1) * step
    grid = grid[grid < 1.0]
    x = (1.0 - grid) / grid                                    # (G,)
    y = x[:, None] * rates[j] / rates[None, :]                 # (G, n)  fairness: y_i R_i = y_j R_j
    tau = 1.0 / (1.0 + y)
    p_idle = np.prod(1.0 - tau, axis=1)
    p_i = p_idle[:, None] * tau / (1.0 - tau)
    t_succ = mac_params.o_sec_s + mac_params.o_bits / ro + mac_params.payload_bits / rates
    t_col = mac_params.l_col_bits / ro + mac_params.l_colsec_s
    p_s = p_i.sum(axis=1)
    sig = p_idle * mac_params.sigma_s + p_i @ t_succ + (1.0 - p_idle - p_s) * t_col
    thr = p_s * mac_params.payload_bits / sig
    return tau[int(np.argmax(thr))]


def grid_oracle_waterfill(floor, caps, budget, step: float = 1e-3):
    """Best split of ``budget`` on a simplex grid (2 or 3 channels).

    Returns ``(powers, objective)`` for ``sum ln(1 + P / floor)``.  When the
    caps cannot absorb the budget the caps themselves are optimal.
    """
    floor = np.asarray(floor, dtype=float)
    caps = np.asarray(caps, dtype=float)
    obj = lambda p: np.sum(np.log1p(p / floor), axis=-1)
    if caps.sum() <= budget:
        return caps.copy(), float(obj(caps))
    k = int(round(1.0 / step))
    if len(floor) == 2:
        a = np.arange(k + 1) * step
        pts = np.stack([a, 1.0 - a], axis=1)
    elif len(floor) == 3:
        i, j = np.meshgrid(np.arange(k + 1), np.arange(k + 1), indexing="ij")
        keep = i + j <= k
        i, j = i[keep], j[keep]
        pts = np.stack([i, j, k - i - j], axis=1) * step
    else:
        raise ValueError("grid oracle supports 2 or 3 channels")
    p = pts * budget
    ok = np.all(p <= caps[None, :] * (1 + 1e-12), axis=1)
    vals = np.where(ok, obj(p), -np.inf)
    best = int(np.argmax(vals))
    return p[best], float(vals[best])


# -- independent feasibility checker ------------------------------------------------

@dataclass
class CheckReport:
    interference: float
    power: float
    fairness: float
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def _gain(p, q, radio):
    d = np.hypot(p[..., 0] - q[..., 0], p[..., 1] - q[..., 1])
    d = np.maximum(d, radio.pathloss_ref_km)
    return radio.pathloss_ref_gain * (radio.pathloss_ref_km / d) ** radio.pathloss_exponent


def check_allocation(scenario: Scenario, assignment, powers, access=None, tol: float = 1e-6,
                     check_fairness: bool = True) -> CheckReport:
    """Recompute budgets, caps and time fairness from raw coordinates."""
    radio = scenario.radio
    violations = []
    usage = np.zeros(len(scenario.nodes))
    load = np.zeros(len(scenario.tv_rxs))
    worst_fair = 0.0
    for (m, s), p in powers.items():
        if s not in assignment.channels.get(m, ()):
            violations.append(("unassigned", m, s))
            continue
        ids = scenario.cells[m].node_ids
        p = np.asarray(p, dtype=float)
        if p.shape != (len(ids),) or np.any(p < 0):
            violations.append(("shape-or-sign", m, s))
            continue
        usage[list(ids)] += p
        locs = np.array([scenario.nodes[i].location for i in ids])
        for l, rx in enumerate(scenario.tv_rxs):
            if rx.channel == s:
                load[l] += float(np.sum(_gain(locs, np.array(rx.location)[None, :], radio) * p))
        if access is None or not check_fairness:
            continue
        tau = np.asarray(access.get((m, s), np.zeros(len(ids))), dtype=float)
        if len(ids) < 2:
            continue
        txs = [tx for tx in scenario.tv_txs if tx.channel == s]
        rates = []
        for i, nid in enumerate(ids):
            node = scenario.nodes[nid]
            dst = np.array(scenario.nodes[node.dest_id].location if node.dest_id is not None else node.dest_location)
            tv = sum(tx.power_watts * float(_gain(np.array(tx.location), dst, radio)) for tx in txs)
            snr = float(_gain(np.array(node.location), dst, radio)) * p[i] / (radio.bandwidth_hz * radio.noise_density_w_per_hz + tv)
            rates.append(radio.bandwidth_hz * np.log1p(snr) / np.log(2.0))
        rates = np.array(rates)
        if np.any(tau <= 0) or np.any(tau >= 1):
            worst_fair = np.inf
        else:
            v = (1.0 - tau) / tau * rates
            worst_fair = max(worst_fair, float((v.max() - v.min()) / v.max()))
    pw = float(max(0.0, usage.max(initial=0.0) / scenario.mac.power_budget_w - 1.0))
    ix = 0.0
    for l, rx in enumerate(scenario.tv_rxs):
        if load[l] > 0:
            rel = np.inf if rx.imax_watts <= 0 else load[l] / rx.imax_watts - 1.0
            ix = max(ix, rel)
    if pw > tol:
        violations.append(("power", pw))
    if ix > tol:
        violations.append(("interference", ix))
    if worst_fair > tol:
        violations.append(("fairness", worst_fair))
    return CheckReport(ix, pw, worst_fair, violations)


# -- suite -----------------------------------------------------------------------------

@dataclass
class SuiteLine:
    name: str
    passed: bool
    detail: str


def run_suite(scenario: Scenario, assignment, powers, access, n_slots: int = 1_000_000, seed: int = 0,
              threads: int = 1, fair: bool = True) -> list:
    """Feasibility check plus a Monte Carlo and enumeration check per pair."""
    lines = []
    chk = check_allocation(scenario, assignment, powers, access, check_fairness=fair)
    lines.append(SuiteLine("budgets and interference caps", chk.interference <= 1e-6 and chk.power <= 1e-6,
                           f"interference residual {chk.interference:.3g}, power residual {chk.power:.3g}"))
    if fair:
        lines.append(SuiteLine("time fairness", chk.fairness <= 1e-6, f"max relative spread {chk.fairness:.3g}"))
    keys = [k for k in sorted(powers) if k in access]

    def one(key):
        m, s = key
        t = link_table(scenario, m, s)
        tau, p = np.asarray(access[key], float), np.asarray(powers[key], float)
        sm = slot_stats(tau, t.payload_rates(p), t.overhead_rate(p), scenario.mac)
        sim = simulate_dcf(m, s, access, powers, scenario, n_slots, seed)
        return key, sm, sim

    with ThreadPoolExecutor(max_workers=max(1, threads)) as ex:
        results = list(ex.map(one, keys))
    # two-sided tail mass beyond 4 standard normal deviations
    alpha = 2.0 * stats.norm.sf(4.0)
    covered, worst_z, worst_p = 0, 0.0, 1.0
    for key, sm, sim in results:
        se = sim.ci_half_width_bps / stats.t.ppf(0.975, sim.batches - 1)
        if se > 0:
            worst_z = max(worst_z, abs(sm.throughput - sim.throughput_bps) / se)
        elif sm.throughput != sim.throughput_bps and not np.isclose(sm.throughput, sim.throughput_bps, rtol=1e-9):
            worst_z = np.inf
        covered += sim.covers(sm.throughput) or np.isclose(sm.throughput, sim.throughput_bps, rtol=1e-9)
        n = sim.slots_simulated
        for p_exact, count in ((sm.p_idle, sim.idle_slots), (sm.p_col, sim.collision_slots)):
            # exact binomial test: rare slot types make the normal approximation useless
            p_exact = min(max(p_exact, 0.0), 1.0)
            if 0.0 < p_exact < 1.0:
                pval = stats.binomtest(int(count), n, p_exact).pvalue
            else:
                pval = 1.0 if count == round(p_exact * n) else 0.0
            worst_p = min(worst_p, pval)
    if results:
        lines.append(SuiteLine("analytic throughput vs Monte Carlo (4 standard errors)", worst_z <= 4.0,
                               f"worst |z| {worst_z:.3g}; 95% CI covered {covered}/{len(results)} pairs"))
        lines.append(SuiteLine("slot-type frequencies vs exact probabilities (binomial test, 4-sigma level)",
                               worst_p >= alpha, f"smallest p-value {worst_p:.3g} (threshold {alpha:.3g})"))
    return lines
