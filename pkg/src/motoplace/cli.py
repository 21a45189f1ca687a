"""Command line interface: ``motoplace <verb> -c project.toml``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from motoplace.builder import extract_placement
from motoplace.config import ConfigError, load_config
from motoplace.export import write_model
from motoplace.pipeline import (
    ARTIFACTS,
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_OK,
    EXIT_SOLVE,
    EXIT_VERIFY,
    StageError,
    _write,
    build_model,
    compute_region,
    hint_from_placement,
    load_placement,
    load_region,
    render,
    resolve_ideal,
    run_pipeline,
    SUCCESS_STATUSES,
    solve_model,
    verify_placement,
)
from motoplace.solver import SolveResult

log = logging.getLogger("motoplace")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", required=True, type=Path, help="project TOML file")
    common.add_argument("-o", "--output-dir", type=Path, help="artifact directory (overrides the config)")
    common.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    common.add_argument("--threads", type=int, help="solver thread count")
    common.add_argument("--time-limit", type=float, help="solver wall-clock limit in seconds")
    common.add_argument("--node-limit", type=int, help="solver node limit")
    common.add_argument("--gap-tol", type=float, help="relative gap at which the solver stops")
    common.add_argument(
        "--n-com", action="append", default=[], metavar="NAME=K", help="override a subsystem's cluster count"
    )

    p = argparse.ArgumentParser(prog="motoplace", description="Component placement for electric motorcycles.")
    verbs = p.add_subparsers(dest="verb", required=True)
    verbs.add_parser("region", parents=[common], help="compute the inactive-limit region and ideal CoG")
    b = verbs.add_parser("build", parents=[common], help="build and export the placement model")
    b.add_argument("--format", choices=["lp", "mps", "both"], default="both")
    s = verbs.add_parser("solve", parents=[common], help="build and solve; writes result and placement JSON")
    s.add_argument("--warm-start", type=Path, help="placement JSON used as the initial incumbent")
    v = verbs.add_parser("verify", parents=[common], help="check a placement without the model")
    v.add_argument("--placement", type=Path, help="placement JSON (default: <output-dir>/placement.json)")
    v.add_argument("--result", type=Path, help="result JSON whose objective is cross-checked")
    r = verbs.add_parser("render", parents=[common], help="draw a placement as SVG")
    r.add_argument("--placement", type=Path, help="placement JSON (default: <output-dir>/placement.json)")
    r.add_argument("--region", type=Path, help="region CSV to shade")
    verbs.add_parser("run", parents=[common], help="region, build, solve, verify and render")
    return p


def _config(args):
    cfg = load_config(args.config)
    lim = cfg.limits
    lim = replace(
        lim,
        threads=args.threads if args.threads is not None else lim.threads,
        time_limit=args.time_limit if args.time_limit is not None else lim.time_limit,
        node_limit=args.node_limit if args.node_limit is not None else lim.node_limit,
        gap_tol=args.gap_tol if args.gap_tol is not None else lim.gap_tol,
    )
    cfg = replace(cfg, limits=lim)
    for item in args.n_com:
        name, _, k = item.partition("=")
        if name not in cfg.n_com or not k.isdigit():
            raise ConfigError(f"--n-com {item!r}: expected NAME=K for a subsystem in {sorted(cfg.n_com)}")
        spec = cfg.topology[name]
        if not 1 <= int(k) <= spec.n_sub:
            raise ConfigError(f"--n-com {item!r}: must satisfy 1 <= K <= n_sub = {spec.n_sub}")
        cfg = cfg.with_n_com(name, int(k))
    if args.output_dir is not None:
        cfg = replace(cfg, output_dir=args.output_dir)
    return cfg


def _ideal(cfg):
    region = compute_region(cfg)
    return resolve_ideal(cfg, region), region


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), stream=sys.stderr, format="%(message)s")
    try:
        cfg = _config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = cfg.output_dir
    try:
        if args.verb == "run":
            res = run_pipeline(cfg, out)
            for key, path in res.artifacts.items():
                log.info("wrote %s: %s", key, path)
            if res.report is not None:
                print(res.report.summary())
            if res.exit_code != EXIT_OK:
                print(f"error: {res.message}", file=sys.stderr)
            return res.exit_code
        ideal, region = _ideal(cfg)
        if args.verb == "region":
            if region is not None:
                _write(out / ARTIFACTS["region"], region.to_csv())
            print(json.dumps({"format_version": 1, "ideal_cog": list(ideal)}))
            return EXIT_OK
        if args.verb == "build":
            model = build_model(cfg, ideal)
            keys = ["lp", "mps"] if args.format == "both" else [args.format]
            for key in keys:
                path = out / ARTIFACTS[key]
                try:
                    path.parent.mkdir(parents=True, exist_ok=True)
                    write_model(model, path)
                except OSError as exc:
                    raise StageError("io", EXIT_IO, f"cannot write {path}: {exc.strerror}") from exc
            print(json.dumps(model.counts(), sort_keys=True))
            return EXIT_OK
        if args.verb == "solve":
            model = build_model(cfg, ideal)
            hint = hint_from_placement(model, load_placement(args.warm_start)) if args.warm_start else None
            result = solve_model(model, cfg.limits, hint)
            _write(out / ARTIFACTS["result"], result.to_json())
            placement = extract_placement(model, result.x, result.objective)
            _write(out / ARTIFACTS["placement"], json.dumps(placement.to_dict(), indent=2))
            print(f"{result.status}  objective {result.objective:.10g}  bound {result.bound:.10g}")
            return EXIT_OK if result.status in SUCCESS_STATUSES else EXIT_SOLVE
        if args.verb == "verify":
            placement = load_placement(args.placement or out / ARTIFACTS["placement"])
            reported = None
            if args.result is not None:
                try:
                    reported = SolveResult.from_dict(json.loads(args.result.read_text())).objective
                except (OSError, ValueError, KeyError) as exc:
                    raise StageError("verify", EXIT_VERIFY, f"cannot read result {args.result}: {exc}") from exc
            report = verify_placement(cfg, placement, ideal, reported)
            _write(out / ARTIFACTS["verification"], report.to_json())
            print(report.summary())
            return EXIT_OK if report.passed else EXIT_VERIFY
        if args.verb == "render":
            placement = load_placement(args.placement or out / ARTIFACTS["placement"])
            shade = load_region(args.region, cfg.vehicle.wheelbase) if args.region else region
            _write(out / ARTIFACTS["svg"], render(cfg, placement, ideal, shade))
            return EXIT_OK
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
