"""`clarify-timing` console script."""

import argparse
import logging
from collections.abc import Sequence
from pathlib import Path

from rich.logging import RichHandler

from ..exceptions import ArchiveError, ConfigError, HarnessImportError, ReportInputMissingError
from .commands import cmd_analyze, cmd_report, cmd_run
from .config import TrialSelector, load_run_config

logger = logging.getLogger("clarify_timing")

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_CONFIG = 2


def _seed_list(value: str) -> list[int]:
    try:
        return [int(item) for item in value.split(",") if item.strip()]
    except ValueError as err:
        message = f"expected comma-separated integers, got {value!r}"
        raise argparse.ArgumentTypeError(message) from err


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clarify-timing",
        description="Measure how the timing of clarification changes agent success.",
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="Log at DEBUG level.")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Execute an experiment grid.")
    run.add_argument("--config", type=Path, required=True, help="Run config (JSON).")
    run.add_argument("--out", type=Path, help="Run directory (overrides env and config).")
    run.add_argument("--parallelism", type=int, help="Cells executed concurrently.")
    run.add_argument("--seed-list", type=_seed_list, help="Seeds, e.g. 0,1,2.")
    run.add_argument(
        "--filter",
        action="append",
        default=[],
        metavar="KEY=V1,V2",
        help="Restrict to variant=, model= or condition= values; repeatable.",
    )

    analyze = commands.add_parser("analyze", help="Build analysis tables for a run directory.")
    analyze.add_argument("run_dir", type=Path)
    analyze.add_argument("--out", type=Path, help="Analysis directory (default: RUN_DIR/analysis).")
    analyze.add_argument("--filter", action="append", default=[], metavar="KEY=V1,V2")

    report = commands.add_parser("report", help="Render an analysis directory as text.")
    report.add_argument("analysis_dir", type=Path)
    report.add_argument("--out", type=Path, help="Report file (default: ANALYSIS_DIR/report.txt).")
    return parser


def configure_logging(verbose: bool = False) -> None:
    handler = RichHandler(show_path=False, rich_tracebacks=False)
    handler.setFormatter(logging.Formatter("%(message)s"))
    logger.handlers[:] = [handler]
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)
    logger.propagate = False


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "run":
        config = load_run_config(
            args.config, out=args.out, parallelism=args.parallelism, seeds=args.seed_list
        )
        result = cmd_run(config, TrialSelector.parse(args.filter))
        return EXIT_PARTIAL if result.failed_cells else EXIT_OK
    if args.command == "analyze":
        selector = TrialSelector.parse(args.filter) if args.filter else None
        cmd_analyze(args.run_dir, args.out, selector)
        return EXIT_OK
    cmd_report(args.analysis_dir, args.out)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        return _dispatch(args)
    except ConfigError as err:
        for problem in err.problems:
            logger.error("%s", problem)
        return EXIT_CONFIG
    except (ArchiveError, ReportInputMissingError, HarnessImportError) as err:
        logger.error("%s", getattr(err, "message", str(err)))
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
