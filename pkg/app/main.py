"""Main command-line entry point."""

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import structlog
import yaml
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from app.cli import commands
from app.config import settings
from app.exceptions import InfeasibleError, InputError, PolymatroidError
from app.schemas.reports import Report, ReportStatus
from app.services.oracle import EnumerationBudget

EXIT_CODES = {
    ReportStatus.OK: 0,
    ReportStatus.INFEASIBLE: 1,
    ReportStatus.ABSENT: 1,
    ReportStatus.FAILED: 3,
}


def configure_logging(level: Optional[str] = None) -> None:
    """Configure structured logging on stderr; stdout carries only reports."""
    renderer = (
        structlog.processors.JSONRenderer()
        if settings.LOG_JSON
        else structlog.dev.ConsoleRenderer(colors=False)
    )
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.UnicodeDecoder(),
            renderer,
        ],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )
    logging.basicConfig(
        level=getattr(logging, (level or settings.LOG_LEVEL).upper()),
        format="%(message)s",
        stream=sys.stderr,
        force=True,
    )


logger = structlog.get_logger()


def _counts(values: Sequence[str]) -> dict[str, int]:
    counts = {}
    for value in values:
        name, _, raw = value.partition("=")
        if not raw.isdigit():
            raise InputError(f"Invalid count {value!r}; expected SWEEP=N")
        counts[name] = int(raw)
    return counts


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, help="Write the report to FILE instead of stdout")
    common.add_argument("--timing", action="store_true", help="Include wall time in the report")
    common.add_argument(
        "--budget",
        type=EnumerationBudget.parse,
        default=None,
        help="Oracle budget, e.g. ground=6,demand=6,points=1000000",
    )
    common.add_argument("--log-level", default=None, help="Override LOG_LEVEL")

    parser = argparse.ArgumentParser(
        prog="polygame",
        description="Optimization, reoptimization and equilibria over polymatroid base polytopes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", parents=[common], help="Minimize a separable convex cost")
    solve.add_argument("file", type=Path)
    solve.add_argument("--oracle", action="store_true", help="Use brute-force enumeration")
    solve.add_argument("--path", action="store_true", help="Also report optima for d' = 0..d")

    reopt = sub.add_parser("reopt", parents=[common], help="Reoptimize after shifting t and d")
    reopt.add_argument("file", type=Path)
    reopt.add_argument(
        "--shift", action="append", default=[], help="Parameter shift LABEL+N or LABEL-N"
    )
    reopt.add_argument("--demand", type=int, default=None, help="Target demand d'")

    pne = sub.add_parser("pne", parents=[common], help="Compute a pure Nash equilibrium")
    pne.add_argument("file", type=Path)
    pne.add_argument("--oracle", action="store_true", help="Use exhaustive profile search")
    pne.add_argument("--trace", action="store_true", help="Dump every move and potential")

    check = sub.add_parser("check", parents=[common], help="Check rank and cost properties")
    check.add_argument("file", type=Path)

    counter = sub.add_parser(
        "counterexample", parents=[common], help="Constructions for a non-submodular rank function"
    )
    counter.add_argument("file", type=Path)
    counter.add_argument("--emit-dir", type=Path, default=None, help="Write instance files here")

    selftest = sub.add_parser("selftest", parents=[common], help="Randomized oracle sweep")
    selftest.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    selftest.add_argument(
        "--count", action="append", default=[], help="Override a sweep size, e.g. games=50"
    )
    return parser


def run(args: argparse.Namespace) -> Report:
    if args.command == "solve":
        return commands.cmd_solve(args.file, args.oracle, args.budget, args.path)
    if args.command == "reopt":
        return commands.cmd_reopt(args.file, args.shift, args.demand)
    if args.command == "pne":
        return commands.cmd_pne(args.file, args.oracle, args.budget, args.trace)
    if args.command == "check":
        return commands.cmd_check(args.file)
    if args.command == "counterexample":
        return commands.cmd_counterexample(args.file, args.emit_dir, args.budget)
    return commands.cmd_selftest(args.seed, args.budget, _counts(args.count) or None)


def print_summary(report: Report, console: Console) -> None:
    """Human-readable summary on stderr."""
    table = Table(title=f"{report.command}: {report.status.value}")
    table.add_column("assertion")
    table.add_column("passed")
    table.add_column("detail")
    for record in report.assertions:
        table.add_row(record.name, "yes" if record.passed else "NO", record.detail)
    console.print(table)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    console = Console(stderr=True)
    log = logger.bind(command=args.command)
    log.info("command_started")
    started = time.perf_counter()

    try:
        report = run(args)
    except InfeasibleError as e:
        log.warning("command_infeasible", error=str(e))
        report = Report(
            command=args.command,
            arguments={"file": str(getattr(args, "file", ""))},
            status=ReportStatus.INFEASIBLE,
            result={"error": str(e)},
        )
    except PolymatroidError as e:
        log.error("command_failed", error=str(e), exit_code=e.exit_code)
        console.print(f"[red]{type(e).__name__}:[/red] {e}")
        return e.exit_code
    except (ValidationError, yaml.YAMLError) as e:
        log.error("invalid_input", error=str(e), exit_code=2)
        console.print(f"[red]Invalid input:[/red] {e}")
        return 2

    if args.timing:
        report.wall_time_ms = int((time.perf_counter() - started) * 1000)
    text = report.to_json() + "\n"
    if args.out:
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    print_summary(report, console)
    exit_code = EXIT_CODES[report.status]
    log.info("command_finished", input_digest=report.input_digest, exit_code=exit_code)
    return exit_code


if __name__ == "__main__":
    sys.exit(main())
