import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from whitefi.io import dumps_scenario
from whitefi.scenario import (AvailabilityRule, GeoPoint, ScenarioError, TvReceiver, TvTransmitter, WhiteFiCell,
                              WhiteFiNode, adjacency, assemble, availability, generate, place_afflicted_receiver,
                              point_rect_distance, with_rule)
from whitefi.params import DEFAULT_CHANNELS, RadioParams


def tx_at(x, y, channel=21, service=10.0, protection=21.1):
    return TvTransmitter("t", (x, y), channel, 10.0, service, protection)


def test_generate_small_grid_without_tv():
    sc = generate(1, (2, 5.0), 1)
    assert len(sc.cells) == 4
    assert all(c.available == frozenset(DEFAULT_CHANNELS) for c in sc.cells)
    assert not sc.tv_rxs


def test_generate_deterministic():
    assert dumps_scenario(generate(3, (3, 5.0), 4)) == dumps_scenario(generate(3, (3, 5.0), 4))
    assert dumps_scenario(generate(3, (3, 5.0), 4)) != dumps_scenario(generate(4, (3, 5.0), 4))


def test_full_size_grid():
    sc = generate(0, (14, 5.0), 25)
    assert len(sc.cells) == 196
    assert len(sc.nodes) == 4900
    assert {len(c.node_ids) for c in sc.cells} == {25}


def test_generated_nodes_are_consistent():
    sc = generate(5, (3, 5.0), 6)
    for n in sc.nodes:
        assert sc.cells[n.cell_id].contains(n.location)
        assert n.dest_id != n.id
        assert sc.nodes[n.dest_id].cell_id == n.cell_id


def test_lone_node_gets_destination_point():
    sc = generate(2, (1, 5.0), 1)
    n = sc.nodes[0]
    assert n.dest_id is None
    assert sc.cells[0].contains(n.dest_location)


@pytest.mark.parametrize("kw", [dict(grid=(0, 5.0)), dict(grid=(2, -1.0)), dict(nodes_per_cell=0)])
def test_generate_rejects_bad_input(kw):
    args = dict(seed=0, grid=(2, 5.0), nodes_per_cell=1)
    args.update(kw)
    with pytest.raises(ScenarioError):
        generate(**args)


def test_transmitter_channel_outside_set_rejected():
    with pytest.raises(ScenarioError):
        generate(0, (1, 5.0), 1, [tx_at(50, 0, channel=60)])


@pytest.mark.parametrize("kw", [dict(power_watts=0.0), dict(service_radius_km=0.0), dict(protection_radius_km=5.0)])
def test_transmitter_invariants(kw):
    args = dict(id="t", location=(0, 0), channel=21, power_watts=1.0, service_radius_km=10.0,
                protection_radius_km=20.0)
    args.update(kw)
    with pytest.raises(ScenarioError):
        TvTransmitter(**args)


def test_node_invariants():
    with pytest.raises(ScenarioError):
        WhiteFiNode(0, 0, (1, 1), dest_id=0)
    with pytest.raises(ScenarioError):
        WhiteFiNode(0, 0, (1, 1))
    with pytest.raises(ScenarioError):
        TvReceiver("r", (0, 0), 21, -1.0)


def test_rule_parsing():
    assert AvailabilityRule.parse("ExactFcc") is AvailabilityRule.EXACT_FCC
    assert AvailabilityRule.parse("RELAXED") is AvailabilityRule.RELAXED
    with pytest.raises(ScenarioError):
        AvailabilityRule.parse("loose")


# -- availability ---------------------------------------------------------------

CELL = WhiteFiCell(0, (0.0, 0.0), 5.0)


def test_far_cell_available_under_both_rules():
    tx = tx_at(60.0, 2.5)
    for rule in ("exact", "relaxed"):
        assert 21 in availability(CELL, [tx], rule)


def test_cell_in_protection_band():
    # nearest cell edge 15 km away: outside service (10), inside protection (21.1)
    tx = tx_at(20.0, 2.5)
    assert 21 in availability(CELL, [tx], "relaxed")
    assert 21 not in availability(CELL, [tx], "exact")


def test_cell_straddling_service_contour():
    tx = tx_at(12.0, 2.5)
    for rule in ("exact", "relaxed"):
        assert 21 not in availability(CELL, [tx], rule)


def test_other_channels_untouched():
    av = availability(CELL, [tx_at(12.0, 2.5)], "exact")
    assert av == frozenset(DEFAULT_CHANNELS) - {21}


def test_polygon_contour():
    square = [(8, -5), (20, -5), (20, 10), (8, 10)]
    tx = TvTransmitter("p", (14, 2), 21, 1.0, 5.0, 10.0, service_polygon=square, protection_polygon=square)
    assert 21 in availability(CELL, [tx], "relaxed")
    inside = [(4, -5), (20, -5), (20, 10), (4, 10)]
    tx2 = TvTransmitter("p", (14, 2), 21, 1.0, 5.0, 10.0, service_polygon=inside, protection_polygon=inside)
    assert 21 not in availability(CELL, [tx2], "relaxed")


@settings(max_examples=50, deadline=None)
@given(st.floats(-60, 60), st.floats(-60, 60), st.floats(1, 30), st.floats(0, 20))
def test_exact_is_subset_of_relaxed(x, y, service, buffer):
    tx = TvTransmitter("t", (x, y), 21, 1.0, service, service + buffer)
    assert availability(CELL, [tx], "exact") <= availability(CELL, [tx], "relaxed")


# -- afflicted receiver ----------------------------------------------------------

def test_receiver_radial_projection():
    tx = tx_at(0.0, 0.0)
    cell = WhiteFiCell(0, (12.0, -2.5), 5.0)
    rx = place_afflicted_receiver(tx, cell)
    # nearest vertices (12, +-2.5) both project to distance |hypot(12,2.5) - 10|; lower index wins
    v = np.array([12.0, -2.5])
    expect = v * 10.0 / np.hypot(*v)
    assert np.allclose(rx.location, expect)


def test_receiver_on_axis_for_vertex_on_axis():
    tx = tx_at(0.0, 0.0)
    cell = WhiteFiCell(0, (12.0, 0.0), 5.0)
    rx = place_afflicted_receiver(tx, cell)
    assert np.allclose(rx.location, (10.0, 0.0))


@settings(max_examples=25, deadline=None)
@given(st.floats(-40, 40), st.floats(-40, 40), st.floats(2, 15))
def test_receiver_matches_dense_contour_search(cx, cy, r):
    tx = TvTransmitter("t", (0.0, 0.0), 21, 1.0, r, r + 5)
    cell = WhiteFiCell(0, (cx, cy), 5.0)
    if np.allclose(cell.center, (0, 0)) or any(np.hypot(*v) < 1e-6 for v in cell.vertices):
        return
    rx = place_afflicted_receiver(tx, cell)
    phi = np.linspace(0, 2 * np.pi, 100_000, endpoint=False)
    pts = np.stack([r * np.cos(phi), r * np.sin(phi)], 1)
    verts = np.array(cell.vertices)
    d = np.hypot(pts[:, None, 0] - verts[None, :, 0], pts[:, None, 1] - verts[None, :, 1])
    best = d.min()
    got = min(np.hypot(rx.location[0] - v[0], rx.location[1] - v[1]) for v in verts)
    assert abs(np.hypot(*rx.location) - r) < 1e-9
    assert got <= best + 1e-9
    assert got >= best - 2 * np.pi * r / 100_000


# -- adjacency ---------------------------------------------------------------------

def test_adjacency_cases():
    radio = RadioParams()
    a = WhiteFiCell(0, (0, 0), 5.0)
    b = WhiteFiCell(1, (5, 0), 5.0)
    c = WhiteFiCell(2, (13, 0), 5.0)      # 3 km from b
    adj = adjacency([a, b, c], radio)
    assert adj[0, 1] and adj[1, 0]
    assert not adj[1, 2]
    assert adjacency([a], radio).shape == (1, 1) and not adjacency([a], radio).any()


def test_grid_adjacency_includes_corners():
    sc = generate(0, (3, 5.0), 1)
    assert sc.degree(4) == 8
    assert sc.degree(0) == 3
    assert sc.degree(1) == 5
    assert np.array_equal(sc.adjacency, sc.adjacency.T)


def test_point_rect_distance():
    assert point_rect_distance((2, 2), (0, 0, 5, 5)) == 0.0
    assert point_rect_distance((8, 9), (0, 0, 5, 5)) == pytest.approx(5.0)


# -- assembly and rule switching ---------------------------------------------------

def test_receivers_only_for_available_cells():
    tx = tx_at(22.0, 7.5, service=12.0, protection=23.1)
    sc = generate(0, (3, 5.0), 2, [tx], "relaxed")
    for rx in sc.tv_rxs:
        assert 21 in sc.cells[rx.cell_id].available
        assert abs(np.hypot(rx.location[0] - 22.0, rx.location[1] - 7.5) - 12.0) < 1e-9


def test_with_rule_keeps_receivers_and_shrinks_availability():
    tx = tx_at(22.0, 7.5, service=8.0, protection=19.1)
    relaxed = generate(0, (3, 5.0), 2, [tx], "relaxed")
    exact = with_rule(relaxed, "exact")
    assert exact.availability_rule is AvailabilityRule.EXACT_FCC
    assert exact.tv_rxs == relaxed.tv_rxs
    for a, b in zip(exact.cells, relaxed.cells):
        assert a.available <= b.available
    fresh = with_rule(relaxed, "exact", keep_receivers=False)
    assert len(fresh.tv_rxs) <= len(relaxed.tv_rxs)


def test_assemble_rejects_foreign_destination():
    cells = [WhiteFiCell(0, (0, 0), 5.0), WhiteFiCell(1, (5, 0), 5.0)]
    nodes = [WhiteFiNode(0, 0, (1, 1), 1), WhiteFiNode(1, 1, (6, 1), 0)]
    with pytest.raises(ScenarioError):
        assemble(cells, nodes, [], "relaxed")


def test_assemble_rejects_node_outside_cell():
    cells = [WhiteFiCell(0, (0, 0), 5.0)]
    nodes = [WhiteFiNode(0, 0, (6, 1), None, GeoPoint(1, 1))]
    with pytest.raises(ScenarioError):
        assemble(cells, nodes, [], "relaxed")
