"""Command line: `pencilrange run | figure | check`"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import acceptance, figures, matkernel
from .errors import ConfigError, PencilRangeError
from .region import Box
from .runner import run_file
from .utils.metrics import setup_metrics

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INVALID = 2
EXIT_NUMERICAL = 3


def _box(values: Optional[list[float]]) -> Optional[Box]:
    if values is None:
        return None
    try:
        return Box.from_list(values)
    except ValueError as exc:
        raise ConfigError(str(exc), field="box") from exc


def _resolution(values: Optional[list[int]]) -> Optional[tuple[int, int]]:
    if values is None:
        return None
    if min(values) < 1:
        raise ConfigError(f"resolution must be positive, got {values}", field="resolution")
    return values[0], values[1]


def build_parser() -> argparse.ArgumentParser:
    """Parser with the shared override flags on every subcommand"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed")
    common.add_argument(
        "--threads", type=int, default=None, help="worker threads (PENCILRANGE_THREADS otherwise)"
    )
    common.add_argument(
        "--box",
        type=float,
        nargs=4,
        metavar=("RE_MIN", "RE_MAX", "IM_MIN", "IM_MAX"),
        default=None,
        help="region of the complex plane",
    )
    common.add_argument(
        "--res", type=int, nargs=2, metavar=("NX", "NY"), default=None, help="raster resolution"
    )
    common.add_argument(
        "--backend",
        choices=matkernel.BACKENDS,
        default=None,
        help="linear algebra backend (PENCILRANGE_BACKEND otherwise)",
    )
    common.add_argument("--verbose", action="store_true", help="record DEBUG events, echo them to stderr")

    parser = argparse.ArgumentParser(
        prog="pencilrange",
        description="Numerical ranges, spectral pollution and multiplier enclosures of operator pencils",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    run = commands.add_parser("run", parents=[common], help="run an experiment document")
    run.add_argument("config", type=Path, help="JSON experiment document")
    figure = commands.add_parser("figure", parents=[common], help="render a figure preset")
    figure.add_argument("preset", choices=sorted(figures.FIGURES))
    figure.add_argument("--out", type=Path, default=Path("figures"), help="output directory")
    check = commands.add_parser("check", parents=[common], help="run the acceptance criteria")
    check.add_argument("--quick", action="store_true", help="scaled-down sizes")
    return parser


def _level(args: argparse.Namespace) -> int:
    return logging.DEBUG if args.verbose else logging.INFO


def _run(args: argparse.Namespace) -> int:
    outcome = run_file(
        args.config,
        level=_level(args),
        progress=args.verbose,
        seed=args.seed,
        threads=args.threads,
        box=_box(args.box),
        resolution=_resolution(args.res),
        backend=args.backend,
    )
    for path in outcome.artifacts:
        print(path)
    return EXIT_NUMERICAL if outcome.failed else EXIT_OK


def _figure(args: argparse.Namespace) -> int:
    args.out.mkdir(parents=True, exist_ok=True)
    metrics = setup_metrics(
        args.out,
        level=_level(args),
        stream=sys.stderr if args.verbose else None,
        experiment=f"figure-{args.preset}",
    )
    matkernel.set_default_backend(args.backend)
    try:
        paths = figures.render(args.preset, args.out, args.threads, _resolution(args.res), _box(args.box))
    finally:
        matkernel.set_default_backend(None)
        metrics.stop_metrics()
    for path in paths:
        print(path)
    return EXIT_OK


def _check(args: argparse.Namespace) -> int:
    metrics = setup_metrics(
        level=_level(args), stream=sys.stderr if args.verbose else None, experiment="check"
    )
    matkernel.set_default_backend(args.backend)
    try:
        results = acceptance.run_checks(
            quick=args.quick, threads=args.threads, seed=args.seed or 0, progress=True
        )
    finally:
        matkernel.set_default_backend(None)
        metrics.stop_metrics()
    print(acceptance.format_table(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK_FAILED


COMMANDS = {"run": _run, "figure": _figure, "check": _check}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point of the console script, returns the exit code"""
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"pencilrange: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"pencilrange: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ArithmeticError, PencilRangeError) as exc:
        print(f"pencilrange: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
