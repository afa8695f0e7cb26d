"""
Main Command Router
===================

This file controls the command flow of the geometry engine.

Key responsibilities:
- Parse the command line into a validated RunConfig
- Route the config to the matching command module
- Write the deterministic JSON report or the long-form CSV table
- Map failures to exit codes (2 config, 3 domain, 4 chart, 5 invariant)

No geometry is implemented here. Only argument handling and output.
"""

import argparse
import logging
import sys
import time

from pydantic import ValidationError

from commands.algebra_command import algebra_command
from commands.conjugate_command import conjugate_command
from commands.curvature_command import curvature_command
from commands.killing_command import killing_command
from commands.normal_command import normal_command
from commands.run_config import RunConfig
from errors import ConfigError, GeometryError
from utils.constants import EXIT_INVARIANT, EXIT_OK
from utils.helpers import (
    build_report,
    configure_logging,
    dumps_report,
    parse_float_list,
    parse_name_list,
    report_passed,
    rows_to_csv,
    save_text,
)

logger = logging.getLogger(__name__)

COMMANDS = {
    "curvature": curvature_command,
    "normal": normal_command,
    "conjugate": conjugate_command,
    "killing": killing_command,
    "algebra": algebra_command,
}


# ------------------------------------------------------------
# Argument Parser
# ------------------------------------------------------------
def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="seed for sampled directions and points")
    parser.add_argument("--tol", type=float, default=None, help="override the command's invariant tolerance")
    parser.add_argument("--out", default=None, help="write the report here instead of stdout")
    parser.add_argument("--format", choices=["json", "csv"], default="json")
    parser.add_argument("--timing", action="store_true", help="include wall_time in the report")


def _add_metric(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--preset", help="NAME:k=v,... e.g. sphere:n=2,R=1")
    source.add_argument("--metric", help="metric config file")
    parser.add_argument("--steps", type=int, default=None, help="RK4 steps per ray")


VALUE_OPTIONS = ("--point", "--origin", "--z", "--vector", "--signature")


def join_dash_values(argv: list[str]) -> list[str]:
    """
    Rewrite '--opt -1,0.7' as '--opt=-1,0.7' for the comma-list options.

    argparse reads any token starting with '-' as a flag unless it is a
    plain negative number, which coordinate lists and signatures like
    '-,+,+,+' are not.
    """
    out: list[str] = []
    i = 0
    while i < len(argv):
        token = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if (
            token in VALUE_OPTIONS
            and nxt is not None
            and nxt.startswith("-")
            and not nxt.startswith("--")
            and not nxt[1:2].isalpha()
        ):
            out.append(f"{token}={nxt}")
            i += 2
            continue
        out.append(token)
        i += 1
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geom", description="Pseudo-Riemannian geometry engine.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    sub = parser.add_subparsers(dest="command", required=True)

    curvature = sub.add_parser("curvature", help="curvature bundle and Einstein verdicts")
    _add_metric(curvature)
    curvature.add_argument("--point", action="append", default=[], help="comma-separated coordinates")
    curvature.add_argument("--fd-check", action="store_true", help="cross-check with finite differences")

    normal = sub.add_parser("normal", help="normal-coordinate expansion and conformal factor")
    _add_metric(normal)
    normal.add_argument("--origin", default=None)
    normal.add_argument("--z", action="append", default=[], help="frame components of z")

    conjugate = sub.add_parser("conjugate", help="conjugate points and normal-chart radius")
    _add_metric(conjugate)
    conjugate.add_argument("--origin", default=None)
    conjugate.add_argument("--dirs", type=int, default=8)
    conjugate.add_argument("--s-max", type=float, default=None)

    killing = sub.add_parser("killing", help="classify projected constant vectors")
    killing.add_argument("--n", type=int, default=2)
    killing.add_argument("--K", type=float, default=1.0)
    killing.add_argument("--vector", action="append", default=[], help="ambient components")
    killing.add_argument("--samples", type=int, default=8)

    algebra = sub.add_parser("algebra", help="generator algebra and Casimir spectra")
    algebra.add_argument("--signature", default=None, help="e.g. +,+,+ or -,+,+,+")
    algebra.add_argument("--reps", default="vector", help="vector,vector:real,trivial,spin:<j>")

    for p in (curvature, normal, conjugate, killing, algebra):
        _add_common(p)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """
    Turn parsed arguments into a RunConfig.

    Raises
    ------
    ConfigError
        Unparseable values or a config the model rejects.
    """
    fields = {"command": args.command, "seed": args.seed, "tol": args.tol, "out": args.out,
              "format": args.format, "timing": args.timing}
    if args.command in ("curvature", "normal", "conjugate"):
        fields.update(preset=args.preset, metric=args.metric)
        if args.steps is not None:
            fields["steps"] = args.steps
    if args.command == "curvature":
        fields.update(points=[parse_float_list(p) for p in args.point], fd_check=args.fd_check)
    if args.command in ("normal", "conjugate") and args.origin is not None:
        fields["origin"] = parse_float_list(args.origin)
    if args.command == "normal":
        fields["z"] = [parse_float_list(z) for z in args.z]
    if args.command == "conjugate":
        fields["dirs"] = args.dirs
        if args.s_max is not None:
            fields["s_max"] = args.s_max
    if args.command == "killing":
        fields.update(n=args.n, K=args.K, samples=args.samples, vectors=[parse_float_list(v) for v in args.vector])
    if args.command == "algebra":
        fields.update(signature=args.signature, reps=parse_name_list(args.reps))
    try:
        return RunConfig(**fields)
    except ValidationError as exc:
        messages = "; ".join(f"{'.'.join(map(str, e['loc'])) or 'config'}: {e['msg']}" for e in exc.errors())
        raise ConfigError(messages) from None


# ------------------------------------------------------------
# Runner
# ------------------------------------------------------------
def run(config: RunConfig) -> tuple[str, bool]:
    """Execute one command; returns the rendered output and whether every invariant passed."""
    start = time.perf_counter()
    output = COMMANDS[config.command](config)
    wall = time.perf_counter() - start if config.timing else None
    report = build_report(config.echo(), output.results, output.invariants, wall)
    if config.format == "csv":
        text = rows_to_csv(output.table, output.columns)
    else:
        text = dumps_report(report)
    return text, report_passed(report)


def main(argv=None) -> int:
    """Application entry point."""
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(join_dash_values(argv))
    configure_logging(args.verbose)
    try:
        config = config_from_args(args)
        text, passed = run(config)
        if config.out:
            save_text(config.out, text)
        else:
            sys.stdout.write(text)
    except GeometryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code

    if not passed:
        logger.error("one or more invariant checks failed")
        return EXIT_INVARIANT
    return EXIT_OK


# ------------------------------------------------------------
# Entry Point
# ------------------------------------------------------------
if __name__ == "__main__":
    sys.exit(main())
