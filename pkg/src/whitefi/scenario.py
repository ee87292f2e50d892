"""World model: TV network, tessellated White-Fi cells, nodes and adjacency.

A :class:`Scenario` is immutable once built.  :func:`generate` produces a
synthetic square grid; :func:`assemble` builds one from explicit cells,
nodes and transmitters (used by the importer and by hand-made test cases).
"""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .params import (
    DEFAULT_CHANNELS,
    DEFAULT_IMAX_W,
    DEFAULT_PROTECTION_BUFFER_KM,
    MacParams,
    RadioParams,
)


class ScenarioError(ValueError):
    """Raised for malformed or inconsistent world models."""


class GeoPoint(NamedTuple):
    """Planar location in kilometres."""

    x: float
    y: float


class AvailabilityRule(str, enum.Enum):
    """Which contour a cell must lie outside of for a channel to be usable."""

    EXACT_FCC = "exact"
    RELAXED = "relaxed"

    @classmethod
    def parse(cls, value) -> "AvailabilityRule":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "").replace("-", "")
        if key in ("exact", "exactfcc", "fcc"):
            return cls.EXACT_FCC
        if key == "relaxed":
            return cls.RELAXED
        raise ScenarioError(f"unknown availability rule {value!r}")


def _as_polygon(points):
    if points is None:
        return None
    pts = tuple(GeoPoint(float(p[0]), float(p[1])) for p in points)
    if len(pts) < 3:
        raise ScenarioError("a polygonal contour needs at least 3 vertices")
    return pts


@dataclass(frozen=True)
class TvTransmitter:
    """A broadcast tower with circular (or optional polygonal) contours."""

    id: str
    location: GeoPoint
    channel: int
    power_watts: float
    service_radius_km: float
    protection_radius_km: float
    service_polygon: tuple | None = None
    protection_polygon: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "location", GeoPoint(*map(float, self.location)))
        object.__setattr__(self, "channel", int(self.channel))
        object.__setattr__(self, "service_polygon", _as_polygon(self.service_polygon))
        object.__setattr__(self, "protection_polygon", _as_polygon(self.protection_polygon))
        if not self.power_watts > 0:
            raise ScenarioError(f"transmitter {self.id}: power_watts must be > 0")
        if not self.service_radius_km > 0:
            raise ScenarioError(f"transmitter {self.id}: service_radius_km must be > 0")
        if self.protection_radius_km < self.service_radius_km:
            raise ScenarioError(f"transmitter {self.id}: protection radius smaller than service radius")


@dataclass(frozen=True)
class TvReceiver:
    id: str
    location: GeoPoint
    channel: int
    imax_watts: float
    tx_id: str | None = None
    cell_id: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "location", GeoPoint(*map(float, self.location)))
        # zero is allowed: it marks a receiver no secondary may reach
        if not self.imax_watts >= 0:
            raise ScenarioError(f"receiver {self.id}: imax_watts must be >= 0")


@dataclass(frozen=True)
class WhiteFiNode:
    """A White-Fi station.

    ``dest_id`` names the in-cell node that receives this node's payload.
    A node alone in its cell has no peer; it then carries ``dest_location``
    instead, a receive-only point inside the cell.
    """

    id: int
    cell_id: int
    location: GeoPoint
    dest_id: int | None = None
    dest_location: GeoPoint | None = None

    def __post_init__(self):
        object.__setattr__(self, "location", GeoPoint(*map(float, self.location)))
        if self.dest_location is not None:
            object.__setattr__(self, "dest_location", GeoPoint(*map(float, self.dest_location)))
        if self.dest_id is not None and self.dest_id == self.id:
            raise ScenarioError(f"node {self.id} cannot be its own destination")
        if self.dest_id is None and self.dest_location is None:
            raise ScenarioError(f"node {self.id} needs a destination node or point")


@dataclass(frozen=True)
class WhiteFiCell:
    """Axis-aligned square cell; ``available`` is the channel set A_m."""

    id: int
    corner: GeoPoint
    side_km: float
    node_ids: tuple = ()
    available: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "corner", GeoPoint(*map(float, self.corner)))
        object.__setattr__(self, "node_ids", tuple(int(i) for i in self.node_ids))
        object.__setattr__(self, "available", frozenset(int(c) for c in self.available))
        if not self.side_km > 0:
            raise ScenarioError(f"cell {self.id}: side_km must be > 0")

    @property
    def bounds(self):
        """``(xmin, ymin, xmax, ymax)``."""
        x, y = self.corner
        return (x, y, x + self.side_km, y + self.side_km)

    @property
    def center(self) -> GeoPoint:
        x, y = self.corner
        h = self.side_km / 2.0
        return GeoPoint(x + h, y + h)

    @property
    def vertices(self):
        """Corners in the fixed order lower-left, lower-right, upper-right, upper-left."""
        x0, y0, x1, y1 = self.bounds
        return (GeoPoint(x0, y0), GeoPoint(x1, y0), GeoPoint(x1, y1), GeoPoint(x0, y1))

    def contains(self, p, tol: float = 1e-9) -> bool:
        x0, y0, x1, y1 = self.bounds
        return x0 - tol <= p[0] <= x1 + tol and y0 - tol <= p[1] <= y1 + tol


@dataclass(frozen=True, eq=False)
class Scenario:
    cells: tuple
    nodes: tuple
    tv_txs: tuple
    tv_rxs: tuple
    adjacency: np.ndarray
    radio: RadioParams = field(default_factory=RadioParams)
    mac: MacParams = field(default_factory=MacParams)
    availability_rule: AvailabilityRule = AvailabilityRule.RELAXED
    channels: tuple = DEFAULT_CHANNELS
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(self.cells))
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "tv_txs", tuple(self.tv_txs))
        object.__setattr__(self, "tv_rxs", tuple(self.tv_rxs))
        object.__setattr__(self, "channels", tuple(int(c) for c in self.channels))
        object.__setattr__(self, "availability_rule", AvailabilityRule.parse(self.availability_rule))
        adj = np.array(self.adjacency, dtype=bool).reshape(len(self.cells), len(self.cells))
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)
        self._validate()

    def _validate(self):
        cell_ids = [c.id for c in self.cells]
        if cell_ids != list(range(len(self.cells))):
            raise ScenarioError("cell ids must be 0..M-1 in order")
        if [n.id for n in self.nodes] != list(range(len(self.nodes))):
            raise ScenarioError("node ids must be 0..N-1 in order")
        adj = self.adjacency
        if not np.array_equal(adj, adj.T) or np.any(np.diag(adj)):
            raise ScenarioError("adjacency must be symmetric with a zero diagonal")
        membership = {}
        for cell in self.cells:
            for nid in cell.node_ids:
                if nid in membership:
                    raise ScenarioError(f"node {nid} belongs to more than one cell")
                membership[nid] = cell.id
        chan_set = set(self.channels)
        for node in self.nodes:
            if membership.get(node.id) != node.cell_id:
                raise ScenarioError(f"node {node.id} is not listed by cell {node.cell_id}")
            cell = self.cells[node.cell_id]
            if not cell.contains(node.location):
                raise ScenarioError(f"node {node.id} lies outside its cell")
            if node.dest_id is not None:
                if not 0 <= node.dest_id < len(self.nodes) or self.nodes[node.dest_id].cell_id != node.cell_id:
                    raise ScenarioError(f"node {node.id}: destination must be in the same cell")
            elif len(cell.node_ids) > 1:
                raise ScenarioError(f"node {node.id}: cells with peers need a destination node")
        for cell in self.cells:
            if not cell.available <= chan_set:
                raise ScenarioError(f"cell {cell.id}: available channels outside the channel set")
        tx_channels = {tx.channel for tx in self.tv_txs}
        for tx in self.tv_txs:
            if tx.channel not in chan_set:
                raise ScenarioError(f"transmitter {tx.id}: channel {tx.channel} outside the channel set")
        for rx in self.tv_rxs:
            if rx.channel not in tx_channels:
                raise ScenarioError(f"receiver {rx.id}: no transmitter broadcasts channel {rx.channel}")

    # -- convenience lookups -------------------------------------------------

    def cell_nodes(self, cell_id):
        return [self.nodes[i] for i in self.cells[cell_id].node_ids]

    def dest_point(self, node: WhiteFiNode) -> GeoPoint:
        if node.dest_id is not None:
            return self.nodes[node.dest_id].location
        return node.dest_location

    def txs_on(self, channel):
        return [tx for tx in self.tv_txs if tx.channel == channel]

    def rxs_on(self, channel):
        return [rx for rx in self.tv_rxs if rx.channel == channel]

    def degree(self, cell_id) -> int:
        return int(self.adjacency[cell_id].sum())


# -- geometry helpers ---------------------------------------------------------

def point_rect_distance(p, bounds) -> float:
    """Euclidean distance from a point to an axis-aligned rectangle (0 inside)."""
    x0, y0, x1, y1 = bounds
    dx = max(x0 - p[0], 0.0, p[0] - x1)
    dy = max(y0 - p[1], 0.0, p[1] - y1)
    return float(np.hypot(dx, dy))


def rect_rect_distance(a, b) -> float:
    """Minimum distance between two axis-aligned rectangles."""
    gx = max(0.0, a[0] - b[2], b[0] - a[2])
    gy = max(0.0, a[1] - b[3], b[1] - a[3])
    return float(np.hypot(gx, gy))


def _box(bounds):
    from shapely.geometry import box

    return box(*bounds)


def _outside_contour(cell: WhiteFiCell, tx: TvTransmitter, protection: bool) -> bool:
    polygon = tx.protection_polygon if protection else tx.service_polygon
    if polygon is not None:
        from shapely.geometry import Polygon

        poly = Polygon(polygon)
        cell_box = _box(cell.bounds)
        return (not cell_box.intersects(poly)) or cell_box.touches(poly)
    radius = tx.protection_radius_km if protection else tx.service_radius_km
    return point_rect_distance(tx.location, cell.bounds) >= radius


def availability(cell: WhiteFiCell, tv_txs: Sequence[TvTransmitter], rule, channels=DEFAULT_CHANNELS) -> frozenset:
    """Channels usable everywhere in ``cell`` under ``rule``.

    A channel survives only if the whole cell lies outside the relevant
    contour (protection for exact FCC, service for relaxed) of every
    transmitter broadcasting on it.
    """
    rule = AvailabilityRule.parse(rule)
    protection = rule is AvailabilityRule.EXACT_FCC
    out = set(channels)
    for tx in tv_txs:
        if tx.channel in out and not _outside_contour(cell, tx, protection):
            out.discard(tx.channel)
    return frozenset(out)


def place_afflicted_receiver(tv_tx: TvTransmitter, cell: WhiteFiCell, imax_watts: float = DEFAULT_IMAX_W,
                             rx_id: str | None = None) -> TvReceiver:
    """Most afflicted TV receiver location for ``cell`` on the service contour.

    Each cell vertex is projected onto the contour; the projection closest
    to its own vertex wins (ties go to the lower vertex index).
    """
    c = np.asarray(tv_tx.location, dtype=float)
    if np.allclose(np.asarray(cell.center), c):
        raise ScenarioError(f"cell {cell.id} is centred on transmitter {tv_tx.id}")
    best = None
    if tv_tx.service_polygon is not None:
        from shapely.geometry import Point, Polygon
        from shapely.ops import nearest_points

        ring = Polygon(tv_tx.service_polygon).exterior
        for v in cell.vertices:
            q = nearest_points(ring, Point(v))[0]
            d = float(np.hypot(q.x - v[0], q.y - v[1]))
            if best is None or d < best[0]:
                best = (d, (q.x, q.y))
    else:
        r = tv_tx.service_radius_km
        for v in cell.vertices:
            offset = np.asarray(v, dtype=float) - c
            norm = float(np.hypot(*offset))
            if norm == 0.0:
                raise ScenarioError(f"cell {cell.id} has a vertex on transmitter {tv_tx.id}")
            d = abs(norm - r)
            if best is None or d < best[0]:
                best = (d, tuple(c + offset * (r / norm)))
    rid = rx_id if rx_id is not None else f"rx-{tv_tx.id}-c{cell.id}"
    return TvReceiver(rid, GeoPoint(*best[1]), tv_tx.channel, imax_watts, tx_id=tv_tx.id, cell_id=cell.id)


def adjacency(cells: Sequence[WhiteFiCell], radio: RadioParams) -> np.ndarray:
    """Boolean adjacency: cells whose boundaries come within ``d`` of each other."""
    m = len(cells)
    if m == 0:
        raise ScenarioError("need at least one cell")
    out = np.zeros((m, m), dtype=bool)
    for a in range(m):
        for b in range(a + 1, m):
            if rect_rect_distance(cells[a].bounds, cells[b].bounds) <= radio.adjacency_distance_km:
                out[a, b] = out[b, a] = True
    return out


# -- construction ------------------------------------------------------------

def _coerce_tx(entry, index, buffer_km) -> TvTransmitter:
    if isinstance(entry, TvTransmitter):
        return entry
    entry = dict(entry)
    service = float(entry["service_radius_km"])
    loc = entry.get("location") or (entry["x_km"], entry["y_km"])
    return TvTransmitter(
        id=str(entry.get("id", f"tx{index}")),
        location=GeoPoint(float(loc[0]), float(loc[1])),
        channel=int(entry["channel"]),
        power_watts=float(entry["power_watts"]),
        service_radius_km=service,
        protection_radius_km=float(entry.get("protection_radius_km") or service + buffer_km),
        service_polygon=entry.get("service_polygon"),
        protection_polygon=entry.get("protection_polygon"),
    )


def assemble(cells: Sequence[WhiteFiCell], nodes: Sequence[WhiteFiNode], tv_txs, rule, *,
             radio: RadioParams | None = None, mac: MacParams | None = None,
             channels=DEFAULT_CHANNELS, imax_w: float = DEFAULT_IMAX_W, seed=None,
             protection_buffer_km: float = DEFAULT_PROTECTION_BUFFER_KM) -> Scenario:
    """Compute availability, adjacency and afflicted receivers, then freeze.

    ``cells`` only need geometry; their ``node_ids`` and ``available`` are
    recomputed from ``nodes`` and the TV network.
    """
    radio = radio or RadioParams()
    mac = mac or MacParams()
    rule = AvailabilityRule.parse(rule)
    channels = tuple(int(c) for c in channels)
    txs = [_coerce_tx(t, k, protection_buffer_km) for k, t in enumerate(tv_txs)]
    for tx in txs:
        if tx.channel not in channels:
            raise ScenarioError(f"transmitter {tx.id}: channel {tx.channel} outside the regulatory set")
    if not cells:
        raise ScenarioError("empty grid")
    members = {c.id: [] for c in cells}
    for n in nodes:
        members[n.cell_id].append(n.id)
    built = []
    for c in cells:
        geo = WhiteFiCell(c.id, c.corner, c.side_km)
        built.append(WhiteFiCell(c.id, c.corner, c.side_km, tuple(members[c.id]),
                                 availability(geo, txs, rule, channels)))
    rxs = []
    for tx in txs:
        for cell in built:
            if tx.channel in cell.available:
                rxs.append(place_afflicted_receiver(tx, cell, imax_w))
    return Scenario(tuple(built), tuple(nodes), tuple(txs), tuple(rxs), adjacency(built, radio),
                    radio=radio, mac=mac, availability_rule=rule, channels=channels, seed=seed)


def generate(seed: int, grid=(14, 5.0), nodes_per_cell: int = 25, tv_spec=(), rule="relaxed", *,
             radio: RadioParams | None = None, mac: MacParams | None = None,
             channels=DEFAULT_CHANNELS, imax_w: float = DEFAULT_IMAX_W,
             protection_buffer_km: float = DEFAULT_PROTECTION_BUFFER_KM, origin=(0.0, 0.0)) -> Scenario:
    """Synthetic square-grid scenario.

    Parameters
    ----------
    seed : int
        Sole source of randomness (node positions and destinations).
    grid : (int, float)
        ``(cells_per_side, cell_side_km)``; cells are numbered row-major
        from the lower-left corner at ``origin``.
    nodes_per_cell : int
        Nodes placed uniformly and independently in each cell.
    tv_spec : sequence
        :class:`TvTransmitter` objects or dicts with the importer's fields.
    rule : str or AvailabilityRule
        ``"exact"`` or ``"relaxed"``.
    """
    per_side, side = int(grid[0]), float(grid[1])
    if per_side < 1:
        raise ScenarioError("empty grid")
    if not side > 0:
        raise ScenarioError("cell_side_km must be positive")
    if nodes_per_cell < 1:
        raise ScenarioError("nodes_per_cell must be at least 1")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    cells, nodes = [], []
    ox, oy = origin
    for row in range(per_side):
        for col in range(per_side):
            cid = row * per_side + col
            corner = GeoPoint(ox + col * side, oy + row * side)
            cells.append(WhiteFiCell(cid, corner, side))
            pts = corner + rng.random((nodes_per_cell, 2)) * side
            base = len(nodes)
            if nodes_per_cell == 1:
                sink = corner + rng.random(2) * side
                nodes.append(WhiteFiNode(base, cid, GeoPoint(*pts[0]), None, GeoPoint(*sink)))
                continue
            for k in range(nodes_per_cell):
                # uniform over the other nodes of the cell
                j = int(rng.integers(nodes_per_cell - 1))
                j = j + 1 if j >= k else j
                nodes.append(WhiteFiNode(base + k, cid, GeoPoint(*pts[k]), base + j))
    return assemble(cells, nodes, tv_spec, rule, radio=radio, mac=mac, channels=channels,
                    imax_w=imax_w, seed=int(seed), protection_buffer_km=protection_buffer_km)


def synthetic_tv_network(seed: int, n_tx: int, extent_km: float, channels=DEFAULT_CHANNELS, *,
                         service_radius_km=(15.0, 40.0), power_watts=(1.0, 50.0),
                         protection_buffer_km: float = DEFAULT_PROTECTION_BUFFER_KM, margin_km: float = 30.0):
    """Random transmitters scattered around a square network area.

    Towers land in ``[-margin, extent + margin]^2``; radii and powers are
    drawn uniformly from the given ranges.  Returns a list of transmitters.
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x7F]))
    channels = list(channels)
    out = []
    for k in range(n_tx):
        x, y = rng.uniform(-margin_km, extent_km + margin_km, size=2)
        r = rng.uniform(*service_radius_km)
        out.append(TvTransmitter(
            id=f"tx{k}",
            location=GeoPoint(x, y),
            channel=int(channels[rng.integers(len(channels))]),
            power_watts=float(rng.uniform(*power_watts)),
            service_radius_km=float(r),
            protection_radius_km=float(r + protection_buffer_km),
        ))
    return out


def with_rule(scenario: Scenario, rule, imax_w: float | None = None, keep_receivers: bool = True) -> Scenario:
    """Rebuild ``scenario`` (same nodes and towers) under another availability rule.

    TV receivers belong to the broadcast network, not to the secondary's
    rule, so by default the receiver set is carried over unchanged.  With
    ``keep_receivers=False`` receivers are re-placed for the new
    availability sets.
    """
    if imax_w is None:
        imax_w = scenario.tv_rxs[0].imax_watts if scenario.tv_rxs else DEFAULT_IMAX_W
    geo = [WhiteFiCell(c.id, c.corner, c.side_km) for c in scenario.cells]
    fresh = assemble(geo, scenario.nodes, scenario.tv_txs, rule, radio=scenario.radio, mac=scenario.mac,
                     channels=scenario.channels, imax_w=imax_w, seed=scenario.seed)
    if not keep_receivers:
        return fresh
    return dataclasses.replace(fresh, tv_rxs=scenario.tv_rxs)
