import pytest

from whitefi.assign import Assignment, assign_channels, quality_table, verify_assignment
from whitefi.scenario import GeoPoint, TvTransmitter, WhiteFiCell, WhiteFiNode, assemble, generate, \
    synthetic_tv_network


def row_of_cells(xs, channels=(21,), txs=()):
    cells = [WhiteFiCell(k, (x, 0.0), 5.0) for k, x in enumerate(xs)]
    nodes = [WhiteFiNode(k, k, (x + 2.0, 2.0), None, GeoPoint(x + 3.0, 3.0)) for k, x in enumerate(xs)]
    return assemble(cells, nodes, list(txs), "relaxed", channels=channels)


def test_two_adjacent_cells_one_channel():
    sc = row_of_cells([0.0, 5.0])
    asg = assign_channels(sc)
    got = [asg.of(0), asg.of(1)]
    assert sorted(got) == [(), (21,)]
    assert verify_assignment(sc, asg) == []


def test_isolated_cell_takes_both_by_quality():
    # receiver on 21 is much closer than the one on 22, so gamma_22 > gamma_21
    txs = [TvTransmitter("a", (-14.0, 2.5), 21, 1.0, 10.0, 12.0),
           TvTransmitter("b", (-60.0, 2.5), 22, 1.0, 10.0, 12.0)]
    sc = row_of_cells([0.0], channels=(21, 22), txs=txs)
    g = quality_table(sc)
    assert g[(0, 22)] > g[(0, 21)]
    assert assign_channels(sc).of(0) == (22, 21)


def test_three_cell_path_graph():
    # a - b - c: a and c (degree 1) go first in round one; b (degree 2) is left empty
    sc = row_of_cells([0.0, 5.0, 10.0])
    assert [sc.degree(m) for m in range(3)] == [1, 2, 1]
    asg = assign_channels(sc)
    assert asg.channels == {0: (21,), 1: (), 2: (21,)}


def test_ties_go_to_lower_channel():
    sc = row_of_cells([0.0], channels=(23, 21, 22))
    assert assign_channels(sc).of(0) == (21, 22, 23)


def test_verify_reports_conflicts_and_unavailable():
    sc = row_of_cells([0.0, 5.0], channels=(21, 22))
    bad = Assignment({0: (21,), 1: (21, 22)})
    assert verify_assignment(sc, bad) == [(0, 1, 21)]
    tx = TvTransmitter("t", (-8.0, 2.5), 21, 1.0, 10.0, 12.0)
    sc2 = row_of_cells([0.0, 30.0], channels=(21, 22), txs=[tx])
    assert 21 not in sc2.cells[0].available
    assert verify_assignment(sc2, Assignment({0: (21,), 1: ()})) == [("unavailable", 0, 21)]


def test_assignment_round_trip():
    asg = Assignment({0: (22, 21), 1: ()})
    assert Assignment.from_dict(asg.to_dict()) == asg
    assert asg.pairs() == [(0, 22), (0, 21)]
    assert not asg.is_empty
    assert Assignment({0: ()}).is_empty


def test_permutation_of_distinct_degrees():
    # the same geometry listed in another order gives the same channels per location
    xs = [0.0, 5.0, 10.0, 20.0]
    a = assign_channels(row_of_cells(xs, channels=(21, 22)))
    order = [3, 1, 0, 2]
    b = assign_channels(row_of_cells([xs[k] for k in order], channels=(21, 22)))
    for new, old in enumerate(order):
        assert set(b.of(new)) == set(a.of(old))


@pytest.mark.parametrize("seed", range(10))
def test_random_scenarios_have_no_violations(seed):
    txs = synthetic_tv_network(seed, 4, 20.0, channels=(21, 22, 23))
    sc = generate(seed, (4, 5.0), 2, txs, channels=(21, 22, 23))
    asg = assign_channels(sc)
    assert verify_assignment(sc, asg) == []
    for m, chans in asg.channels.items():
        assert set(chans) <= sc.cells[m].available
        assert len(set(chans)) == len(chans)
