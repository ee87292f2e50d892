"""JSON and CSV formats for scenarios, TV networks and allocations.

Field names carry their units.  See SCHEMA.md for the layout.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .assign import Assignment
from .params import MacParams, RadioParams
from .scenario import (GeoPoint, Scenario, ScenarioError, TvReceiver, TvTransmitter, WhiteFiCell,
                       WhiteFiNode)

SCHEMA_VERSION = 1
TV_COLUMNS = ("id", "x_km", "y_km", "channel", "power_watts", "service_radius_km", "protection_radius_km")


# -- scenario ------------------------------------------------------------------

def scenario_to_dict(sc: Scenario) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "seed": sc.seed,
        "availability_rule": sc.availability_rule.value,
        "channels": list(sc.channels),
        "radio": sc.radio.to_dict(),
        "mac": sc.mac.to_dict(),
        "cells": [
            {"id": c.id, "corner_x_km": c.corner[0], "corner_y_km": c.corner[1], "side_km": c.side_km,
             "node_ids": list(c.node_ids), "available_channels": sorted(c.available)}
            for c in sc.cells
        ],
        "nodes": [
            {"id": n.id, "cell_id": n.cell_id, "x_km": n.location[0], "y_km": n.location[1],
             "dest_id": n.dest_id,
             "dest_x_km": None if n.dest_location is None else n.dest_location[0],
             "dest_y_km": None if n.dest_location is None else n.dest_location[1]}
            for n in sc.nodes
        ],
        "tv_transmitters": [
            {"id": t.id, "x_km": t.location[0], "y_km": t.location[1], "channel": t.channel,
             "power_watts": t.power_watts, "service_radius_km": t.service_radius_km,
             "protection_radius_km": t.protection_radius_km,
             "service_polygon_km": None if t.service_polygon is None else [list(p) for p in t.service_polygon],
             "protection_polygon_km": None if t.protection_polygon is None else [list(p) for p in t.protection_polygon]}
            for t in sc.tv_txs
        ],
        "tv_receivers": [
            {"id": r.id, "x_km": r.location[0], "y_km": r.location[1], "channel": r.channel,
             "imax_watts": r.imax_watts, "tx_id": r.tx_id, "cell_id": r.cell_id}
            for r in sc.tv_rxs
        ],
        "adjacency": np.asarray(sc.adjacency, dtype=int).tolist(),
    }


def scenario_from_dict(d: dict) -> Scenario:
    if d.get("schema_version") != SCHEMA_VERSION:
        raise ScenarioError(f"unsupported scenario schema version {d.get('schema_version')!r}")
    cells = [WhiteFiCell(c["id"], GeoPoint(c["corner_x_km"], c["corner_y_km"]), c["side_km"],
                         tuple(c["node_ids"]), frozenset(c["available_channels"])) for c in d["cells"]]
    nodes = [WhiteFiNode(n["id"], n["cell_id"], GeoPoint(n["x_km"], n["y_km"]), n.get("dest_id"),
                         None if n.get("dest_x_km") is None else GeoPoint(n["dest_x_km"], n["dest_y_km"]))
             for n in d["nodes"]]
    txs = [TvTransmitter(t["id"], GeoPoint(t["x_km"], t["y_km"]), t["channel"], t["power_watts"],
                         t["service_radius_km"], t["protection_radius_km"],
                         t.get("service_polygon_km"), t.get("protection_polygon_km")) for t in d["tv_transmitters"]]
    rxs = [TvReceiver(r["id"], GeoPoint(r["x_km"], r["y_km"]), r["channel"], r["imax_watts"], r.get("tx_id"),
                      r.get("cell_id")) for r in d["tv_receivers"]]
    return Scenario(cells, nodes, txs, rxs, np.array(d["adjacency"], dtype=bool),
                    radio=RadioParams(**d["radio"]), mac=MacParams(**d["mac"]),
                    availability_rule=d["availability_rule"], channels=tuple(d["channels"]), seed=d.get("seed"))


def dumps_scenario(sc: Scenario, extra: dict | None = None) -> str:
    d = scenario_to_dict(sc)
    if extra:
        d["config"] = extra
    return json.dumps(d, indent=1, sort_keys=True)


def save_scenario(sc: Scenario, path, extra: dict | None = None):
    Path(path).write_text(dumps_scenario(sc, extra))


def load_scenario(path) -> Scenario:
    return scenario_from_dict(json.loads(Path(path).read_text()))


# -- TV network CSV ----------------------------------------------------------------

def read_tv_csv(path) -> list:
    """Transmitters from a CSV with columns ``id, x_km, y_km, channel, power_watts,
    service_radius_km, protection_radius_km`` (``#`` lines are comments)."""
    try:
        lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    except OSError as exc:
        raise ScenarioError(f"cannot read TV file {path}: {exc}") from exc
    if not lines:
        return []
    header = next(csv.reader(lines[:1]))
    rows = list(csv.DictReader(lines))
    missing = [c for c in TV_COLUMNS if c not in header]
    if missing:
        raise ScenarioError(f"TV file {path} lacks columns {missing}")
    out = []
    for k, r in enumerate(rows, start=2):
        try:
            out.append(TvTransmitter(r["id"], GeoPoint(float(r["x_km"]), float(r["y_km"])), int(r["channel"]),
                                     float(r["power_watts"]), float(r["service_radius_km"]),
                                     float(r["protection_radius_km"])))
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"TV file {path}, line {k}: {exc}") from exc
    return out


def write_tv_csv(txs, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TV_COLUMNS)
        for t in txs:
            w.writerow([t.id, t.location[0], t.location[1], t.channel, t.power_watts, t.service_radius_km,
                        t.protection_radius_km])


# -- allocations -----------------------------------------------------------------------

def allocation_to_dict(assignment: Assignment, powers: dict, access: dict, method: str, extra: dict | None = None):
    pairs = []
    for (m, s) in sorted(set(powers) | set(access)):
        pairs.append({
            "cell_id": int(m), "channel": int(s),
            "power_watts": [float(v) for v in powers.get((m, s), [])],
            "access_probability": [float(v) for v in access.get((m, s), [])],
        })
    d = {"schema_version": SCHEMA_VERSION, "method": method, "assignment": assignment.to_dict(), "pairs": pairs}
    if extra:
        d["config"] = extra
    return d


def allocation_from_dict(d: dict):
    """``(assignment, powers, access, method)``."""
    if d.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported allocation schema version {d.get('schema_version')!r}")
    asg = Assignment.from_dict(d["assignment"])
    powers, access = {}, {}
    for p in d["pairs"]:
        key = (int(p["cell_id"]), int(p["channel"]))
        powers[key] = np.array(p["power_watts"], dtype=float)
        access[key] = np.array(p["access_probability"], dtype=float)
    return asg, powers, access, d.get("method", "proposed")


def save_allocation(path, *args, **kw):
    Path(path).write_text(json.dumps(allocation_to_dict(*args, **kw), indent=1))


def load_allocation(path):
    return allocation_from_dict(json.loads(Path(path).read_text()))
