"""Command line entry point.

Exit codes: 0 success, 1 configuration error, 2 a size cap was exceeded,
3 I/O error. ``GMSSC_LOG_LEVEL`` sets the log verbosity (default WARNING).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .errors import DeskScaleError, GMSSCError
from .harness import (
    ConfigError,
    desk_scale_failures,
    emit_csv,
    generate_anchored,
    load_config,
    read_csv,
    run_experiment,
    summarize,
    table_to_csv,
    PRESETS,
    preset,
)
from .model import serialize_instance

EXIT_OK, EXIT_CONFIG, EXIT_DESK_SCALE, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("gmssc")


def _anchors(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"anchors must be comma-separated integers, got {text!r}") from None


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors; argparse's default code 2 is taken
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gmssc", description="Online min-sum set cover experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and write per-round costs as CSV")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="JSON experiment config")
    src.add_argument("--preset", choices=sorted(PRESETS), help="built-in experiment config")
    run.add_argument("--out", help="CSV path (overrides the config's output; default stdout)")
    run.add_argument("--summary", help="also write the per-algorithm summary here")

    gen = sub.add_parser("generate", help="write an anchored instance as JSON")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--anchors", type=_anchors, required=True, help="comma-separated, e.g. 1,2")
    gen.add_argument("--extra", type=int, required=True)
    gen.add_argument("--T", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", help="output path (default stdout)")

    summ = sub.add_parser("summarize", help="final time-average cost per algorithm from a results CSV")
    summ.add_argument("--in", dest="inp", required=True)
    return p


def _write(text: str, path) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _cmd_run(args) -> int:
    cfg = load_config(args.config) if args.config else preset(args.preset)
    out = args.out or cfg.output
    table = run_experiment(cfg)
    if out is None:
        sys.stdout.write(table_to_csv(table))
    else:
        emit_csv(table, out)
    if args.summary:
        _write(summarize(table), args.summary)
    for e in table.errors:
        log.error("%s seed %d round %d: %s", e.algorithm, e.seed, e.t, e.message)
    if desk_scale_failures(table):
        return EXIT_DESK_SCALE
    return EXIT_OK


def _cmd_generate(args) -> int:
    inst = generate_anchored(args.n, args.anchors, args.extra, args.T, args.seed)
    data = serialize_instance(inst)
    if args.out is None:
        sys.stdout.buffer.write(data)
    else:
        Path(args.out).write_bytes(data)
    return EXIT_OK


def _cmd_summarize(args) -> int:
    try:
        table = read_csv(args.inp)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    sys.stdout.write(summarize(table))
    return EXIT_OK


def main(argv=None) -> int:
    level = os.environ.get("GMSSC_LOG_LEVEL", "WARNING").upper()
    if not isinstance(logging.getLevelName(level), int):
        level = "WARNING"
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "generate": _cmd_generate, "summarize": _cmd_summarize}[args.command]
    try:
        return handler(args)
    except DeskScaleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DESK_SCALE
    except OSError as exc:
        print(f"error: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    except (GMSSCError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
