"""Seeded scenario family shared by the convergence and comparison tests."""

import numpy as np

from whitefi.scenario import TvTransmitter, generate, with_rule

CHANNELS = (21, 22, 23, 24)


def towers(seed):
    """Two or three towers whose contours sit a few km outside a 15 km grid."""
    rng = np.random.default_rng([seed, 99])
    out = []
    for k in range(int(rng.integers(2, 4))):
        ang = rng.uniform(0, 2 * np.pi)
        dist = rng.uniform(22.0, 35.0)
        radius = rng.uniform(6.0, 14.0)
        out.append(TvTransmitter(f"tx{k}", (7.5 + dist * np.cos(ang), 7.5 + dist * np.sin(ang)),
                                 int(rng.choice(CHANNELS)), float(rng.uniform(1.0, 50.0)), radius, radius + 11.1))
    return out


def family(seed, rule="relaxed"):
    """3x3 grid of 5 km cells, 5 nodes per cell, 2-3 TV transmitters."""
    return generate(seed, (3, 5.0), 5, towers(seed), rule, channels=CHANNELS)


def both_rules(seed):
    sc = family(seed, "relaxed")
    return sc, with_rule(sc, "exact")


def single_cell(points, channels=(21,), txs=(), side=5.0, corner=(0.0, 0.0)):
    """One cell whose nodes send round-robin to the next node (a lone node sends to the cell centre)."""
    from whitefi.scenario import GeoPoint, WhiteFiCell, WhiteFiNode, assemble

    cells = [WhiteFiCell(0, corner, side)]
    n = len(points)
    if n == 1:
        centre = (corner[0] + side / 2, corner[1] + side / 2)
        nodes = [WhiteFiNode(0, 0, points[0], None, GeoPoint(*centre))]
    else:
        nodes = [WhiteFiNode(k, 0, points[k], (k + 1) % n) for k in range(n)]
    return assemble(cells, nodes, list(txs), "relaxed", channels=channels)


def replace_receivers(sc, rxs):
    import dataclasses

    return dataclasses.replace(sc, tv_rxs=tuple(rxs))
