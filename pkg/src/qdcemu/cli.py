"""Command-line entry point: ``qdcemu run | export-qasm | catalog fibers``.

Exit codes: 0 on success, 2 on a configuration error, 1 on any other failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .collision import load_fiber_catalog, normalize_fiber_name
from .errors import ConfigValidationError
from .qasm import export_qasm
from .runner import ExperimentConfig, build_point, export_csv, export_json, run, with_readout, write_csv

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qdcemu", description="Emulate fiber-linked QPUs with collision-model noise.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a sweep described by a JSON config")
    r.add_argument("--config", required=True)
    r.add_argument("--out", help="CSV path (overrides output.csv; stdout when neither is set)")
    mode = r.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true", help="exact density-matrix metrics")
    mode.add_argument("--shots", type=int, help="sampled metrics with N shots per point")
    r.add_argument("--seed", type=int)
    r.add_argument("--workers", type=int)

    e = sub.add_parser("export-qasm", help="write one sweep point's circuit as OpenQASM 3")
    e.add_argument("--config", required=True)
    e.add_argument("--point", required=True, help="FIBER,STEPS, e.g. G652D,3")
    e.add_argument("--out", required=True)

    c = sub.add_parser("catalog", help="show built-in tables")
    c.add_argument("what", choices=["fibers"])
    c.add_argument("--catalog", help="JSON {name: alpha} extending the built-in table")
    return p


def _override(cfg: ExperimentConfig, args) -> ExperimentConfig:
    changes = {}
    if args.exact:
        changes["shots"] = None
    if args.shots is not None:
        if args.shots < 1:
            raise ConfigValidationError("shots", "must be an integer >= 1")
        changes["shots"] = args.shots
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigValidationError("seed", "must be an integer >= 0")
        changes["seed"] = args.seed
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigValidationError("workers", "must be an integer >= 1")
        changes["workers"] = args.workers
    if args.out:
        changes["output_csv"] = args.out
    return dataclasses.replace(cfg, **changes)


def _cmd_run(args) -> int:
    cfg = _override(ExperimentConfig.load(args.config), args)
    records = run(cfg)
    if cfg.output_csv:
        export_csv(records, cfg.output_csv)
    else:
        write_csv(records, sys.stdout)
    if cfg.output_json:
        export_json(records, cfg.output_json, cfg)
    return EXIT_OK


def _parse_point(text: str, cfg: ExperimentConfig) -> tuple[str, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigValidationError("point", "expected FIBER,STEPS")
    fiber = normalize_fiber_name(parts[0].strip())
    if fiber not in cfg.catalog():
        raise ConfigValidationError("point", f"unknown fiber type {parts[0]!r}")
    try:
        steps = int(parts[1])
    except ValueError:
        raise ConfigValidationError("point", f"steps must be an integer, got {parts[1]!r}") from None
    if steps < 0:
        raise ConfigValidationError("point", "steps must be >= 0")
    return fiber, steps


def _cmd_export(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    fiber, steps = _parse_point(args.point, cfg)
    circ, _ = with_readout(build_point(cfg, fiber, steps))
    export_qasm(circ, args.out)
    return EXIT_OK


def _cmd_catalog(args) -> int:
    try:
        table = load_fiber_catalog(args.catalog)
    except Exception as exc:
        raise ConfigValidationError("catalog", str(exc)) from exc
    print("fiber\talpha_per_km")
    for name in sorted(table):
        print(f"{name}\t{table[name].alpha:g}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    handler = {"run": _cmd_run, "export-qasm": _cmd_export, "catalog": _cmd_catalog}[args.command]
    try:
        return handler(args)
    except ConfigValidationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # runtime failure: report and exit non-zero
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
