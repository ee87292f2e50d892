"""Command-line entry point: ``whitefi generate | optimize | validate | fcc-distance``.

Settings resolve as command-line flag, then the ``--config`` JSON file
(top-level keys or a section named after the subcommand), then the
built-in default.  Every output embeds the resolved settings.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .assign import assign_channels, verify_assignment
from .fcc import BandRegion, distance_table, separation_distance
from .io import dumps_scenario, load_allocation, load_scenario, read_tv_csv, save_allocation
from .mac import network_report
from .optimize import SolverConfig, baseline, build_problem, optimize
from .params import DEFAULT_CHANNELS, DEFAULT_IMAX_W, DEFAULT_PROTECTION_BUFFER_KM
from .scenario import ScenarioError, TvTransmitter, generate, synthetic_tv_network
from .validate import check_allocation, run_suite

log = logging.getLogger("whitefi")

DEFAULTS = {
    "generate": {"seed": 0, "grid": 14, "cell_km": 5.0, "nodes_per_cell": 25, "tv_file": None, "rule": "relaxed",
                 "out": None, "channels": None, "imax_w": DEFAULT_IMAX_W,
                 "protection_buffer_km": DEFAULT_PROTECTION_BUFFER_KM, "synthetic_tv": 0},
    "optimize": {"scenario": None, "method": "proposed", "epsilon_bps": None, "max_iters": 50, "out_alloc": None,
                 "out_trace": None, "out_report": None, "out_report_csv": None, "tolerance": 1e-6},
    "validate": {"scenario": None, "alloc": None, "slots": 1_000_000, "seed": 0},
    "fcc-distance": {"tv_file": None, "density_list": "0,0.1,0.5,1,2,5", "trials": 20, "out": None, "seed": 0,
                     "depth_km": 20.0, "arc_km": 20.0, "tol_km": 0.01, "imax_w": DEFAULT_IMAX_W},
}
EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INFEASIBLE = 0, 1, 2, 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="whitefi", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"whitefi {__version__}")
    p.add_argument("--config", help="JSON file with default settings")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: available cores)")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="build a synthetic scenario")
    g.add_argument("--seed", type=int)
    g.add_argument("--grid", type=int, help="cells per side")
    g.add_argument("--cell-km", type=float, dest="cell_km")
    g.add_argument("--nodes-per-cell", type=int, dest="nodes_per_cell")
    g.add_argument("--tv-file", dest="tv_file", help="TV transmitter CSV")
    g.add_argument("--synthetic-tv", type=int, dest="synthetic_tv", help="number of random towers to add")
    g.add_argument("--rule", choices=["exact", "relaxed"])
    g.add_argument("--channels", help="comma-separated channel list")
    g.add_argument("--imax-w", type=float, dest="imax_w")
    g.add_argument("--protection-buffer-km", type=float, dest="protection_buffer_km")
    g.add_argument("--out", help="scenario JSON path (default: stdout)")

    o = sub.add_parser("optimize", help="assign channels and allocate powers and access probabilities")
    o.add_argument("--scenario")
    o.add_argument("--method", choices=["proposed", "baseline"])
    o.add_argument("--epsilon-bps", "--epsilon", type=float, dest="epsilon_bps")
    o.add_argument("--max-iters", type=int, dest="max_iters")
    o.add_argument("--out-alloc", dest="out_alloc")
    o.add_argument("--out-trace", dest="out_trace")
    o.add_argument("--out-report", dest="out_report")
    o.add_argument("--out-report-csv", dest="out_report_csv")
    o.add_argument("--tolerance", type=float, help="relative residual accepted for exit code 0")

    v = sub.add_parser("validate", help="Monte Carlo and oracle checks of an allocation")
    v.add_argument("--scenario")
    v.add_argument("--alloc")
    v.add_argument("--slots", type=int)
    v.add_argument("--seed", type=int)

    f = sub.add_parser("fcc-distance", help="separation distance versus node density")
    f.add_argument("--tv-file", dest="tv_file", help="CSV; the first transmitter is analysed")
    f.add_argument("--density-list", dest="density_list", help="nodes per km^2, comma-separated")
    f.add_argument("--trials", type=int)
    f.add_argument("--seed", type=int)
    f.add_argument("--depth-km", type=float, dest="depth_km")
    f.add_argument("--arc-km", type=float, dest="arc_km")
    f.add_argument("--tol-km", type=float, dest="tol_km")
    f.add_argument("--imax-w", type=float, dest="imax_w")
    f.add_argument("--out", help="CSV path (default: stdout)")
    return p


def resolve(args, file_cfg: dict) -> dict:
    """Merge flag > config file > default for the chosen subcommand."""
    section = file_cfg.get(args.command, {})
    out = {}
    for key, default in DEFAULTS[args.command].items():
        flag = getattr(args, key, None)
        if flag is not None:
            out[key] = flag
        elif key in section:
            out[key] = section[key]
        elif key in file_cfg and not isinstance(file_cfg[key], dict):
            out[key] = file_cfg[key]
        else:
            out[key] = default
    out["threads"] = args.threads or file_cfg.get("threads") or os.cpu_count() or 1
    return out


def _write(path, text):
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_generate(cfg):
    txs = read_tv_csv(cfg["tv_file"]) if cfg["tv_file"] else []
    channels = DEFAULT_CHANNELS if not cfg["channels"] else tuple(int(c) for c in str(cfg["channels"]).split(","))
    extent = cfg["grid"] * cfg["cell_km"]
    if cfg["synthetic_tv"]:
        txs += synthetic_tv_network(cfg["seed"], cfg["synthetic_tv"], extent, channels,
                                    protection_buffer_km=cfg["protection_buffer_km"])
    sc = generate(cfg["seed"], (cfg["grid"], cfg["cell_km"]), cfg["nodes_per_cell"], txs, cfg["rule"],
                  channels=channels, imax_w=cfg["imax_w"], protection_buffer_km=cfg["protection_buffer_km"])
    # the output path is left out so equal settings give byte-identical files
    _write(cfg["out"], dumps_scenario(sc, {k: v for k, v in cfg.items() if k not in ("out", "threads")}))
    log.info("scenario: %d cells, %d nodes, %d TV receivers", len(sc.cells), len(sc.nodes), len(sc.tv_rxs))
    return EXIT_OK


def cmd_optimize(cfg):
    if not cfg["scenario"]:
        raise ScenarioError("--scenario is required")
    sc = load_scenario(cfg["scenario"])
    asg = assign_channels(sc)
    bad = verify_assignment(sc, asg)
    if bad:
        print(f"channel assignment violations: {bad}", file=sys.stderr)
        return EXIT_FAIL
    config = SolverConfig(outer_epsilon=cfg["epsilon_bps"], max_outer_iters=cfg["max_iters"],
                          seed=sc.seed or 0)
    problem = build_problem(sc, asg)
    trace = None
    if cfg["method"] == "proposed":
        res = optimize(sc, asg, config)
        powers, access, trace = res.powers, res.access, res.trace
        dropped, infeasible = res.dropped, res.init_infeasible
    else:
        powers, access = baseline(sc, asg, config, problem)
        dropped, infeasible = problem.dropped, False
    meta = dict(cfg, scenario_seed=sc.seed, solver=config.to_dict())
    report = network_report(sc, asg, access, powers)
    report.meta = {"config": meta, "method": cfg["method"], "dropped_pairs": [list(k) for k in dropped]}
    if cfg["out_alloc"]:
        save_allocation(cfg["out_alloc"], asg, powers, access, cfg["method"], meta)
    if cfg["out_trace"] and trace is not None:
        Path(cfg["out_trace"]).write_text(trace.to_csv([f"config: {json.dumps(meta, sort_keys=True)}"]))
    if cfg["out_report_csv"]:
        Path(cfg["out_report_csv"]).write_text(f"# config: {json.dumps(meta, sort_keys=True)}\n" + report.to_csv())
    _write(cfg["out_report"], report.to_json(indent=1) + ("" if cfg["out_report"] else "\n"))
    chk = check_allocation(sc, asg, powers, access, tol=cfg["tolerance"], check_fairness=cfg["method"] == "proposed")
    print(f"total throughput {report.total / 1e6:.4f} Mbps ({cfg['method']}); residuals: interference "
          f"{chk.interference:.2e}, power {chk.power:.2e}, fairness {chk.fairness:.2e}", file=sys.stderr)
    if dropped or infeasible:
        print(f"infeasible: pairs {dropped} face a zero interference cap and were dropped", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK if chk.passed else EXIT_FAIL


def cmd_validate(cfg):
    if not cfg["scenario"] or not cfg["alloc"]:
        raise ScenarioError("--scenario and --alloc are required")
    sc = load_scenario(cfg["scenario"])
    asg, powers, access, method = load_allocation(cfg["alloc"])
    lines = run_suite(sc, asg, powers, access, cfg["slots"], cfg["seed"], cfg["threads"], fair=method == "proposed")
    width = max(len(l.name) for l in lines)
    print(f"# config: {json.dumps(cfg, sort_keys=True)}")
    for l in lines:
        print(f"{'PASS' if l.passed else 'FAIL'}  {l.name:<{width}}  {l.detail}")
    return EXIT_OK if all(l.passed for l in lines) else EXIT_FAIL


def cmd_fcc(cfg):
    if cfg["tv_file"]:
        txs = read_tv_csv(cfg["tv_file"])
        if not txs:
            raise ScenarioError("TV file lists no transmitters")
        tx = txs[0]
    else:
        tx = TvTransmitter("default", (0.0, 0.0), 21, 1e5, 50.0, 50.0 + DEFAULT_PROTECTION_BUFFER_KM)
    dens = [float(x) for x in str(cfg["density_list"]).split(",") if x.strip()]
    region = BandRegion(cfg["depth_km"], cfg["arc_km"])
    results = [separation_distance(tx, d, region, seed=cfg["seed"], n_trials=cfg["trials"], imax_w=cfg["imax_w"],
                                   tol_km=cfg["tol_km"]) for d in dens]
    _write(cfg["out"], distance_table(results, [f"config: {json.dumps(cfg, sort_keys=True)}",
                                                f"transmitter: {tx.id}"]))
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "optimize": cmd_optimize, "validate": cmd_validate, "fcc-distance": cmd_fcc}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    try:
        file_cfg = json.loads(Path(args.config).read_text()) if args.config else {}
        cfg = resolve(args, file_cfg)
        return COMMANDS[args.command](cfg)
    except (ScenarioError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
