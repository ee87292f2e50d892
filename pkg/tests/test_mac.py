import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from whitefi.assign import Assignment, assign_channels
from whitefi.mac import (SlotModelError, jain_index, network_report, network_throughput, receiver_interference,
                         slot_model, slot_stats, success_probabilities, throughput)
from whitefi.params import MacParams
from whitefi.radio import link_table
from whitefi.scenario import TvTransmitter, generate
from whitefi.validate import enumerate_slots, simulate_slots

MAC = MacParams()
taus_st = st.lists(st.floats(0.0, 1.0), min_size=1, max_size=8)


def test_two_symmetric_nodes():
    p_idle, p_i = success_probabilities([0.5, 0.5])
    assert p_idle == pytest.approx(0.25)
    assert np.allclose(p_i, 0.25)
    sm = slot_stats([0.5, 0.5], [1e6, 1e6], 1e6, MAC)
    assert sm.p_col == pytest.approx(0.25)


def test_tau_one_means_never_idle():
    p_idle, _ = success_probabilities([0.3, 1.0, 0.2])
    assert p_idle == 0.0


def test_single_node_closed_form():
    mac = MacParams(o_sec_s=0.0, o_bits=0.0)
    sm = slot_stats([1.0], [8.184e6], 8.184e6, mac)
    assert sm.sigma_avg == pytest.approx(1e-3)
    assert sm.throughput == pytest.approx(8.184e6)


def test_single_node_example_probabilities():
    p_idle, p_i = success_probabilities([0.3])
    assert p_idle == pytest.approx(0.7) and p_i[0] == pytest.approx(0.3)


def test_all_silent_is_zero_throughput():
    sm = slot_stats([0.0, 0.0, 0.0], [1e6, 2e6, 3e6], 1e6, MAC)
    assert sm.throughput == 0.0
    assert sm.p_idle == 1.0


def test_rejects_bad_tau():
    with pytest.raises(ValueError):
        success_probabilities([0.5, 1.2])


def test_zero_rate_only_fails_when_used():
    # a dead link that never transmits is harmless
    assert slot_stats([0.0, 0.5], [0.0, 1e6], 1e6, MAC).throughput > 0
    with pytest.raises(SlotModelError):
        slot_stats([0.2, 0.5], [0.0, 1e6], 1e6, MAC)


def test_four_nodes_match_enumeration():
    tau = np.random.default_rng(1).random(4)
    p_idle, p_i, p_col = enumerate_slots(tau)
    sm = slot_stats(tau, np.ones(4) * 1e6, 1e6, MAC)
    assert sm.p_idle == pytest.approx(p_idle, abs=1e-14)
    assert np.allclose(sm.p_succ_i, p_i, atol=1e-14)
    assert sm.p_col == pytest.approx(p_col, abs=1e-14)


@settings(max_examples=200)
@given(taus_st)
def test_probabilities_partition_unity(taus):
    sm = slot_stats(taus, np.full(len(taus), 5e6), 5e6, MAC)
    assert sm.p_col >= 0
    assert sm.p_idle + sm.p_succ + sm.p_col == pytest.approx(1.0, abs=1e-12)
    assert sm.sigma_avg > 0


@settings(max_examples=100)
@given(st.lists(st.tuples(st.floats(0.01, 0.99), st.floats(1e5, 5e7)), min_size=2, max_size=6), st.randoms())
def test_throughput_invariant_to_relabeling(items, rnd):
    tau, rates = map(np.array, zip(*items))
    perm = list(range(len(items)))
    rnd.shuffle(perm)
    a = slot_stats(tau, rates, 1e6, MAC).throughput
    b = slot_stats(tau[perm], rates[perm], 1e6, MAC).throughput
    assert a == pytest.approx(b, rel=1e-12)


def test_three_node_matches_monte_carlo():
    tau, rates = np.array([0.05, 0.1, 0.2]), np.array([4e6, 9e6, 20e6])
    sm = slot_stats(tau, rates, 3e6, MAC)
    sim = simulate_slots(tau, rates, 3e6, MAC, 400_000, seed=3)
    assert abs(sim.throughput_bps - sm.throughput) <= 2 * sim.ci_half_width_bps


# -- Jain index ----------------------------------------------------------------------

def test_jain_values():
    assert jain_index([2, 2, 2]) == pytest.approx(1.0)
    assert jain_index([1, 2, 3]) == pytest.approx(36 / 42)
    assert jain_index([0, 0, 5, 0]) == pytest.approx(0.25)
    assert jain_index([0, 0]) == 1.0
    with pytest.raises(ValueError):
        jain_index([])


@settings(max_examples=200)
@given(st.lists(st.floats(0, 1e9), min_size=1, max_size=20))
def test_jain_range(x):
    j = jain_index(x)
    assert 1 / len(x) - 1e-12 <= j <= 1 + 1e-12


# -- network level ----------------------------------------------------------------

def small_network():
    tx = TvTransmitter("t", (25, 5), 21, 10.0, 10.0, 21.1)
    sc = generate(3, (2, 5.0), 3, [tx], channels=(21, 22))
    asg = assign_channels(sc)
    powers = {k: np.full(3, 0.05 / max(1, len(asg.of(k[0])))) * 1e-3 for k in asg.pairs()}
    access = {k: np.full(3, 0.1) for k in asg.pairs()}
    return sc, asg, powers, access


def test_network_throughput_sums_pairs():
    sc, asg, powers, access = small_network()
    total = sum(throughput(m, s, access, powers, sc) for m, s in asg.pairs())
    assert network_throughput(sc, asg, access, powers) == pytest.approx(total)
    rep = network_report(sc, asg, access, powers)
    assert rep.total == pytest.approx(total)
    assert rep.cell_throughput.sum() == pytest.approx(total)
    for key, v in rep.pair_time_fairness.items():
        assert 1 / 3 - 1e-12 <= v <= 1 + 1e-12


def test_report_serializations():
    sc, asg, powers, access = small_network()
    rep = network_report(sc, asg, access, powers)
    d = json.loads(rep.to_json())
    assert d["total_throughput_bps"] == pytest.approx(rep.total)
    assert len(d["pairs"]) == len(asg.pairs())
    assert rep.to_csv().splitlines()[0].startswith("cell_id,channel")


def test_report_rejects_unassigned_allocation():
    sc, asg, powers, access = small_network()
    m = 0
    bogus = next(s for s in sc.channels if s not in asg.of(m))
    powers = dict(powers)
    powers[(m, bogus)] = np.zeros(3)
    with pytest.raises(ValueError):
        network_report(sc, asg, access, powers)


def test_receiver_interference_matches_sum():
    sc, asg, powers, access = small_network()
    load = receiver_interference(sc, asg, powers)
    expect = np.zeros(len(sc.tv_rxs))
    for (m, s), p in powers.items():
        t = link_table(sc, m, s)
        if len(t.rx_index):
            expect[t.rx_index] += t.g @ p
    assert np.allclose(load, expect)


def test_slot_model_accepts_arrays_and_dicts():
    sc, asg, powers, access = small_network()
    m, s = asg.pairs()[0]
    a = slot_model(m, s, access, powers, sc).throughput
    b = slot_model(sc.cells[m], s, access[(m, s)], powers[(m, s)], sc).throughput
    assert a == b
    with pytest.raises(ValueError):
        slot_model(m, s, np.zeros(2), powers, sc)


def test_empty_assignment_is_zero():
    sc = generate(0, (2, 5.0), 2)
    asg = Assignment({m: () for m in range(4)})
    assert network_throughput(sc, asg, {}, {}) == 0.0
