"""Command-line front end: ``ckytool <command> [--config PATH] [flags]``.

Exit codes: 0 every item passed, 1 some item failed, 2 configuration error,
3 geometry error (degenerate surface, boundary off the support, chart domain).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from . import config as cfgmod
from . import suites
from .charts import ChartDomainError, UnsupportedSpacetimeError
from .surfaces import BoundaryOffSupportError, DegenerateSurfaceError, build_mesh, dump_mesh_csv

COMMANDS = ("check-cky", "check-div", "verify", "flow", "hk", "mesh-dump")
GEOMETRY_ERRORS = (DegenerateSurfaceError, BoundaryOffSupportError, ChartDomainError, UnsupportedSpacetimeError)

# Output location and parallelism do not affect results; keep them out of
# the echo so reports compare byte for byte across runs.
ECHO_EXCLUDED = ("out", "workers")

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_GEOMETRY = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ckytool", description="Verify CKY 2-forms and their integral identities.")
    p.add_argument("--version", action="version", version=f"ckytool {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="YAML run configuration")
        s.add_argument("--spacetime", help="minkowski, ds or ads (overrides the config)")
        s.add_argument("--order", type=int, help="quadrature order")
        s.add_argument("--seed", type=int, help="random seed")
        s.add_argument("--points", type=int, help="sample points for pointwise checks")
        s.add_argument("--out", help="output directory")
        s.add_argument("--workers", type=int, help="concurrent suite items")
        s.add_argument("--timings", action="store_true", help="record wall-clock seconds per item")
        s.add_argument("--quiet", action="store_true", help="suppress per-item lines")
    return p


def resolve_config(args) -> cfgmod.RunConfig:
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = cfgmod.yaml.safe_load(fh) or {}
        except OSError as exc:
            raise cfgmod.ConfigError(f"cannot read config: {exc}") from None
        except cfgmod.yaml.YAMLError as exc:
            raise cfgmod.ConfigError(f"config is not valid YAML: {exc}") from None
        if not isinstance(data, dict):
            raise cfgmod.ConfigError("config must be a mapping")
    for key in ("spacetime", "order", "seed", "points", "out", "workers"):
        v = getattr(args, key)
        if v is not None:
            data[key] = v
    return cfgmod.from_mapping(data)


def _items_for(command: str, cfg: cfgmod.RunConfig, out_dir: str):
    st = cfg.spacetime_id
    if command == "check-cky":
        only = None if cfg.form["name"] == "composite" else cfg.form["name"]
        return suites.run_items(suites.cky_thunks(st, cfg.points, cfg.seed, cfg.form["l"], only), cfg.workers), None
    if command == "check-div":
        return suites.run_items(suites.div_thunks(cfg.points, cfg.seed), cfg.workers), None
    if cfg.form["name"] != "composite":
        raise cfgmod.ConfigError(f"{command} uses the composite form; form.name must be 'composite'")
    job = cfg.job()
    if command == "verify":
        return suites.run_items(suites.verify_thunks(job, cfg.suites), cfg.workers), None
    if command == "hk":
        if not job.is_slice():
            raise cfgmod.ConfigError("hk needs a surface in the t = 0 slice")
        return suites.run_items([lambda: suites.hk_items(job), lambda: suites.slice_items(job)], cfg.workers), None
    if command == "flow":
        outcome = suites.flow_items(job)
        outcome.trace.write_csv(os.path.join(out_dir, "flow_trace.csv"))
        return outcome.items, outcome.trace
    if command == "mesh-dump":
        dump_mesh_csv(build_mesh(job.surface, cfg.order), os.path.join(out_dir, "mesh.csv"))
        return ([suites.free_boundary_item(job)] if job.surface.has_boundary else []), None
    raise cfgmod.ConfigError(f"unknown command {command!r}")


def make_report(command: str, cfg: cfgmod.RunConfig, items, timings: bool, trace=None) -> dict:
    report = {
        "version": __version__,
        "command": command,
        "config": {k: v for k, v in cfg.as_dict().items() if k not in ECHO_EXCLUDED},
        "items": [it.as_dict(timings) for it in items],
    }
    if trace is not None:
        report["flow"] = {"status": trace.status, "message": trace.message, "steps": len(trace.records) - 1 if trace.records else 0}
    return report


def write_report(report: dict, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=2, allow_nan=False)
        fh.write("\n")


def run(command: str, cfg: cfgmod.RunConfig, timings: bool = False, quiet: bool = False) -> int:
    out_dir = cfg.out
    os.makedirs(out_dir, exist_ok=True)
    items, trace = _items_for(command, cfg, out_dir)
    report = make_report(command, cfg, items, timings, trace)
    path = os.path.join(out_dir, f"report-{command}.json")
    write_report(report, path)
    if not quiet:
        for it in items:
            flag = "PASS" if it.passed else "FAIL"
            xf = " (expected fail)" if it.expected_fail else ""
            print(f"{flag} {it.name}: residual {it.residual:.3e} tol {it.tol:.1e}{xf}")
    n_fail = sum(not it.passed for it in items)
    print(f"{len(items) - n_fail}/{len(items)} passed; report {path}")
    if trace is not None and trace.status == "geometry_error":
        print(f"flow stopped: {trace.message}", file=sys.stderr)
        return EXIT_GEOMETRY
    return EXIT_PASS if n_fail == 0 else EXIT_FAIL


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        return run(args.command, cfg, args.timings, args.quiet)
    except cfgmod.ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GEOMETRY_ERRORS as exc:
        print(f"geometry error: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY


if __name__ == "__main__":
    sys.exit(main())
