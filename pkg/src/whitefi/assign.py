"""Degree-ordered, quality-greedy channel assignment."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .radio import channel_quality
from .scenario import Scenario


@dataclass(frozen=True)
class Assignment:
    """Channels assigned to each cell, in the order they were picked."""

    channels: dict  # cell_id -> tuple of channels

    def of(self, cell_id) -> tuple:
        return self.channels.get(cell_id, ())

    def pairs(self):
        """All ``(cell_id, channel)`` pairs, cells ascending then pick order."""
        return [(m, s) for m in sorted(self.channels) for s in self.channels[m]]

    @property
    def is_empty(self) -> bool:
        return not any(self.channels.values())

    def to_dict(self):
        return {str(m): list(map(int, c)) for m, c in sorted(self.channels.items())}

    @classmethod
    def from_dict(cls, d):
        return cls({int(m): tuple(int(s) for s in c) for m, c in d.items()})

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def quality_table(scenario: Scenario) -> dict:
    """``gamma[(cell, channel)]`` for every available channel of every cell."""
    return {
        (c.id, s): channel_quality(c, s, scenario)
        for c in scenario.cells
        for s in sorted(c.available)
    }


def _best_channel(avail, gamma, cell_id):
    # max quality, lowest channel on ties; inf ranks above any finite value
    return min(avail, key=lambda s: (-gamma[(cell_id, s)], s))


def assign_channels(scenario: Scenario) -> Assignment:
    """Greedy list colouring of the cell graph.

    Cells are visited in ascending degree (ties by id).  Each round every
    cell with channels left takes its best one, which is then withdrawn
    from its neighbours.  Rounds repeat until no cell has channels left.
    """
    cells = scenario.cells
    adj = np.asarray(scenario.adjacency, dtype=bool)
    gamma = quality_table(scenario)
    avail = {c.id: set(c.available) for c in cells}
    order = sorted((c.id for c in cells), key=lambda m: (int(adj[m].sum()), m))
    chosen = {c.id: [] for c in cells}
    while any(avail.values()):
        for m in order:
            if not avail[m]:
                continue
            s = _best_channel(avail[m], gamma, m)
            avail[m].discard(s)
            chosen[m].append(s)
            for k in np.flatnonzero(adj[m]):
                avail[int(k)].discard(s)
    return Assignment({m: tuple(v) for m, v in chosen.items()})


def verify_assignment(scenario: Scenario, assignment: Assignment) -> list:
    """Orthogonality and availability violations.

    Returns ``(m1, m2, s)`` tuples for adjacent cells sharing ``s`` and
    ``("unavailable", m, s)`` tuples for channels outside ``A_m``.
    """
    out = []
    adj = np.asarray(scenario.adjacency, dtype=bool)
    n = len(scenario.cells)
    for m, chans in sorted(assignment.channels.items()):
        if not 0 <= m < n:
            out.append(("unknown-cell", m, None))
            continue
        for s in chans:
            if s not in scenario.cells[m].available:
                out.append(("unavailable", m, s))
    for m1 in range(n):
        for m2 in range(m1 + 1, n):
            if adj[m1, m2]:
                for s in sorted(set(assignment.of(m1)) & set(assignment.of(m2))):
                    out.append((m1, m2, s))
    return out
