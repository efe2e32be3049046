"""Command line entry point: run one scenario, batch over configs, or
serve a live session for a human driver.

    adversim run <config> --out <dir> [--set k=v ...]
    adversim batch <glob> --out <dir> --repeats N --seed S
    adversim serve <config> --port P

Log level comes from ADVERSIM_LOG_LEVEL (error, warn, info, debug).
"""

from __future__ import annotations

import argparse
import glob as globmod
import json
import logging
import os
import sys
from pathlib import Path

from .config import apply_overrides, load_scenario_file, parse_scenario
from .core import runlog_to_csv, runlog_to_jsonl
from .engine import ConfigError, ScenarioEngine
from .summary import summarize_runlog

log = logging.getLogger("adversim")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_BIND = 4


def _setup_logging():
    level = os.environ.get("ADVERSIM_LOG_LEVEL", "warn").lower()
    mapping = {"error": logging.ERROR, "warn": logging.WARNING,
               "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=mapping.get(level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _write_outputs(out_dir: Path, name: str, runlog, capture_diameter: float) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / f"{name}.jsonl").write_text(runlog_to_jsonl(runlog), encoding="utf-8")
    (out_dir / f"{name}.csv").write_text(runlog_to_csv(runlog), encoding="utf-8")
    summary = summarize_runlog(runlog, capture_diameter)
    (out_dir / f"{name}.summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return summary


def cmd_run(config_path: str, out_dir: str, overrides=()) -> int:
    try:
        doc = load_scenario_file(config_path)
        doc = apply_overrides(doc, overrides)
        config = parse_scenario(doc)
    except (ConfigError, ValueError) as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        log.error("%s", exc)
        return EXIT_IO
    try:
        runlog = ScenarioEngine(config).run()
        summary = _write_outputs(Path(out_dir), config.name, runlog,
                                 config.capture_diameter)
    except OSError as exc:
        log.error("i/o error: %s", exc)
        return EXIT_IO
    log.info("run %s terminated: %s", config.name, summary["termination"])
    return EXIT_OK


def cmd_batch(config_glob: str, out_dir: str, repeats: int, seed_base: int) -> int:
    paths = sorted(globmod.glob(config_glob))
    if not paths:
        log.error("no configs match %r", config_glob)
        return EXIT_CONFIG
    out = Path(out_dir)
    results, failures = [], []
    for path in paths:
        for rep in range(repeats):
            seed = seed_base + rep
            try:
                doc = load_scenario_file(path)
                doc = apply_overrides(doc, [f"sim.seed={seed}"])
                config = parse_scenario(doc)
                name = f"{config.name}_seed{seed}"
                runlog = ScenarioEngine(config).run()
                summary = _write_outputs(out, name, runlog, config.capture_diameter)
                summary["name"] = name
                summary["config"] = str(path)
                results.append(summary)
            except (ConfigError, ValueError, OSError) as exc:
                log.error("batch item %s seed %d failed: %s", path, seed, exc)
                failures.append({"config": str(path), "seed": seed, "error": str(exc)})
    collisions = [r for r in results if r["collision_time"] is not None]
    min_dists = [r["min_distance"] for r in results if r["min_distance"] is not None]
    engagements = [min((t for t in r["first_worst_case"].values() if t is not None),
                       default=None) for r in results]
    engagements = [e for e in engagements if e is not None]
    aggregate = {
        "runs": len(results),
        "failures": failures,
        "collision_rate": (len(collisions) / len(results)) if results else None,
        "mean_min_distance": (sum(min_dists) / len(min_dists)) if min_dists else None,
        "mean_time_to_first_worst_case": (sum(engagements) / len(engagements))
                                         if engagements else None,
        "items": results,
    }
    out.mkdir(parents=True, exist_ok=True)
    (out / "batch_summary.json").write_text(
        json.dumps(aggregate, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return EXIT_OK if not failures else EXIT_IO


def cmd_serve(config_path: str, port: int, out_dir: str = ".") -> int:
    try:
        doc = load_scenario_file(config_path)
        config = parse_scenario(doc)
    except (ConfigError, ValueError) as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        log.error("%s", exc)
        return EXIT_IO
    from .bridge import serve_session
    try:
        serve_session(config, port=port, out_dir=Path(out_dir))
    except OSError as exc:
        log.error("cannot bind port %d: %s", port, exc)
        return EXIT_BIND
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="adversim")
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario to termination")
    p_run.add_argument("config")
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="K=V", help="override config values, dotted paths")

    p_batch = sub.add_parser("batch", help="run every matching config N times")
    p_batch.add_argument("config_glob")
    p_batch.add_argument("--out", required=True)
    p_batch.add_argument("--repeats", type=int, default=1)
    p_batch.add_argument("--seed", type=int, default=0)

    p_serve = sub.add_parser("serve", help="live session with human SV control")
    p_serve.add_argument("config")
    p_serve.add_argument("--port", type=int, default=8700)
    p_serve.add_argument("--out", default=".")
    return ap


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config, args.out, args.overrides)
    if args.command == "batch":
        return cmd_batch(args.config_glob, args.out, args.repeats, args.seed)
    if args.command == "serve":
        return cmd_serve(args.config, args.port, args.out)
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
