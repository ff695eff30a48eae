"""``qet <command> --config <path> [--seed N] [--out <path>] [--format json|csv]
[--override-hypotheses] [--workers N] [--no-timing]``

Exit codes: 0 all verdicts pass, 1 runtime error, 2 verdict failure,
3 hypothesis violation without override, 4 config error.
"""
from __future__ import annotations

import argparse
import json
import sys

from ..errors import ConfigError, HypothesisViolated, QETError
from .config import load_config
from .report import emit, write_atomic
from .runner import COMMANDS, run

EXIT_OK, EXIT_ERROR, EXIT_VERDICT, EXIT_HYPOTHESIS, EXIT_CONFIG = 0, 1, 2, 3, 4


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qet", description="Quantum ergodic theorem verification experiments.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="JSON experiment configuration")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", help="output path (default: config 'output' or stdout)")
    p.add_argument("--format", choices=("json", "csv"), help="report format (default json)")
    p.add_argument("--override-hypotheses", action="store_true",
                   help="run even when a dimension hypothesis fails")
    p.add_argument("--workers", type=int, help="worker threads for Monte Carlo (results do not depend on it)")
    p.add_argument("--no-timing", action="store_true", help="omit wall_clock_seconds from JSON output")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if cfg["command"] != args.command:
            raise ConfigError([("command", f"config is for {cfg['command']!r}, invoked as {args.command!r}")])
        if args.workers is not None and args.workers < 1:
            raise ConfigError([("--workers", "must be >= 1")])
        override = args.override_hypotheses or bool(cfg.get("override_hypotheses", False))
        report = run(cfg, args.seed, override=override, workers=args.workers)
    except ConfigError as exc:
        print(json.dumps({"error": "config", "fields": exc.errors}), file=sys.stderr)
        return EXIT_CONFIG
    except HypothesisViolated as exc:
        print(json.dumps({"error": "hypothesis", "message": str(exc), "details": exc.details},
                         default=str), file=sys.stderr)
        return EXIT_HYPOTHESIS
    except QETError as exc:
        stage = getattr(exc, "stage", args.command)
        print(f"qet: {type(exc).__name__} in stage {stage}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    fmt = args.format or cfg.get("format", "json")
    data = emit(report, fmt, timing=not args.no_timing)
    out = args.out or cfg.get("output")
    try:
        if out:
            write_atomic(out, data)
        else:
            sys.stdout.buffer.write(data)
            sys.stdout.flush()
    except OSError as exc:
        print(f"qet: cannot write report: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK if report.verdict == "pass" else EXIT_VERDICT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
