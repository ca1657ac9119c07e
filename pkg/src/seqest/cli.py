"""``seqest`` command line: run an experiment sweep and write its CSV."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ConfigError, NumericalFailure, OutputFileError
from .experiments import ExperimentKind, emit_csv, emit_metadata, parse_config, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqest",
        description="Ordered vs unordered sequential estimation experiments.",
        epilog="Any config key may be passed as --key=value; flags override --config.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment sweep")
    run.add_argument("--experiment", required=True,
                     help="|".join(k.value for k in ExperimentKind))
    diag = sub.add_parser("diagnostics", help="closed-form vs quadrature table for the upper bound")
    for p in (run, diag):
        p.add_argument("--config", type=Path, help="key=value config file")
        p.add_argument("--out", required=True, help="output CSV path")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args, extra = parser.parse_known_args(argv)
    experiment = (args.experiment if args.command == "run"
                  else ExperimentKind.DIAGNOSTICS.value)
    try:
        text = args.config.read_text(encoding="utf-8") if args.config else ""
        flags = list(_normalise(extra)) + [f"--experiment={experiment}", f"--out={args.out}"]
        config = parse_config(text, flags)
    except ConfigError as exc:
        print(f"seqest: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"seqest: cannot read config {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        table = run_experiment(config)
        emit_csv(table, config.out)
        meta = emit_metadata(table, config.out)
    except NumericalFailure as exc:
        print(f"seqest: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OutputFileError as exc:
        print(f"seqest: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"wrote {len(table.rows)} rows to {config.out} (metadata: {meta})")
    return EXIT_OK


def _normalise(extra: list[str]):
    # accept both --key=value and --key value
    it = iter(extra)
    for token in it:
        if not token.startswith("--"):
            raise ConfigError(None, f"unexpected argument {token!r}")
        if "=" in token:
            yield token
        else:
            value = next(it, None)
            if value is None:
                raise ConfigError(token[2:], "missing value")
            yield f"{token}={value}"


if __name__ == "__main__":
    sys.exit(main())
