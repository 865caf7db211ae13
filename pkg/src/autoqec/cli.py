"""Command-line entry point: ``autoqec <subcommand>``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .lindblad import IntegrationError, integrate
from .scenarios import (
    SCHEMA_VERSION,
    ConfigError,
    _json_default,
    _search_summary,
    diagnostics,
    load_config,
    prepare,
    preset,
    preset_names,
    run,
    write_outputs,
    RunReport,
)

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_INTEGRATOR = 3
EXIT_USAGE = 1


def _common(p: argparse.ArgumentParser, scenario_source: bool = True) -> None:
    if scenario_source:
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--preset", help="preset scenario name")
        src.add_argument("--config", help="JSON scenario file")
    p.add_argument("--out", default="out", help="output directory (default: ./out)")
    p.add_argument("--dt", type=float, help="fixed RK4 step (default: automatic)")
    p.add_argument("--dw", type=float, help="finite-difference step for d/dw")
    p.add_argument("--t-max", type=float, help="simulation horizon T")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (no effect on the physics)")
    p.add_argument("--workers", type=int, default=1, help="concurrent integrations")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="autoqec", description="AutoQEC-assisted quantum metrology simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    _common(sub.add_parser("search-code", help="search for a metrology code and print diagnostics"))

    sim = sub.add_parser("simulate", help="integrate the master equation for one (c, R) and write the trajectory")
    _common(sim)
    sim.add_argument("--order", type=int, help="AutoQEC order c (default: first in scenario)")
    sim.add_argument("--R", type=float, help="engineered rate ratio (default: first in scenario)")
    sim.add_argument("--states", action="store_true", help="include density-matrix entries in the CSV")

    _common(sub.add_parser("qfi-curve", help="QFI curves for every (c, R) of the scenario"))
    _common(sub.add_parser("scaling", help="R-doubling scaling experiment"))

    pre = sub.add_parser("preset", help="list or run preset scenarios")
    pre_sub = pre.add_subparsers(dest="preset_command", required=True)
    pre_sub.add_parser("list", help="list preset names")
    pr = pre_sub.add_parser("run", help="run a preset end to end")
    pr.add_argument("name")
    _common(pr, scenario_source=False)
    return parser


def _scenario(args):
    name = getattr(args, "name", None) or getattr(args, "preset", None)
    sc = preset(name) if name else load_config(args.config)
    overrides = {}
    if args.t_max is not None:
        overrides["T"] = args.t_max
        if sc.scaling:
            overrides["scaling"] = {**sc.scaling, "T": args.t_max}
    if args.dt is not None:
        overrides["dt"] = args.dt
    if args.dw is not None:
        overrides["dw"] = args.dw
    return replace(sc, **overrides) if overrides else sc


def _cmd_search(args) -> int:
    sc = _scenario(args)
    p = prepare(sc)
    diag, bases = diagnostics(p)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "scenario": sc.name,
        "search": _search_summary(p),
        "diagnostics": diag,
        "bases": bases,
    }
    print(json.dumps(payload, indent=2, default=_json_default))
    folder = Path(args.out) / sc.name
    folder.mkdir(parents=True, exist_ok=True)
    (folder / "search.json").write_text(json.dumps(payload, indent=2, sort_keys=True, default=_json_default))
    return EXIT_INFEASIBLE if p.searched is None else EXIT_OK


def _cmd_simulate(args) -> int:
    sc = _scenario(args)
    p = prepare(sc)
    if p.code is None:
        print(f"{sc.name}: code search infeasible", file=sys.stderr)
        return EXIT_INFEASIBLE
    c = args.order or sc.orders[0]
    R = args.R if args.R is not None else sc.R_values[0]
    scheme = p.scheme(c, R)
    traj = integrate(p.probe(), p.h, scheme, p.model, p.sim_config(R=R))
    folder = Path(args.out) / sc.name
    folder.mkdir(parents=True, exist_ok=True)
    path = folder / f"trajectory_c{c}_R{R:g}.csv"
    traj.to_csv(path, include_states=args.states)
    print(f"wrote {path} ({len(traj.times)} samples, dt={traj.dt:.3g}, max trace error {traj.trace_err.max():.2e})")
    return EXIT_OK


def _finish(report: RunReport, args) -> int:
    folder = Path(args.out) / report.scenario["name"]
    write_outputs(report, folder)
    print(f"wrote {folder} (wall time {report.wall_time:.1f} s)")
    for label, curve in report.curves.items():
        ratio = curve["qfi"][-1] / curve["qfi_ideal"][-1] if curve["qfi_ideal"][-1] else float("nan")
        print(f"  {label}: F(T)/F_id(T) = {ratio:.4f}")
    if report.scaling:
        print(f"  scaling: eps = {np.round(report.scaling['eps'], 6).tolist()}, fitted c = {report.scaling['fitted_c']}")
    return EXIT_INFEASIBLE if report.search_failed else EXIT_OK


def _cmd_curves(args) -> int:
    report = run(_scenario(args), dw=args.dw, scaling=False, workers=args.workers)
    return _finish(report, args)


def _cmd_scaling(args) -> int:
    sc = _scenario(args)
    if not sc.scaling:
        print(f"{sc.name}: scenario has no scaling block", file=sys.stderr)
        return EXIT_USAGE
    report = run(sc, dw=args.dw, simulate=False, workers=args.workers)
    return _finish(report, args)


def _cmd_preset(args) -> int:
    if args.preset_command == "list":
        for name in preset_names():
            print(name)
        return EXIT_OK
    report = run(_scenario(args), dw=args.dw, workers=args.workers)
    return _finish(report, args)


COMMANDS = {
    "search-code": _cmd_search,
    "simulate": _cmd_simulate,
    "qfi-curve": _cmd_curves,
    "scaling": _cmd_scaling,
    "preset": _cmd_preset,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except IntegrationError as exc:
        print(f"integrator abort: {exc}", file=sys.stderr)
        return EXIT_INTEGRATOR
    except (ConfigError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
