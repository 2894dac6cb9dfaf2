"""
Main entry point for the qss-audit command line.
"""

import argparse
import logging
import os
from typing import List, Optional

from dotenv import load_dotenv

from .config import config
from .exceptions import QssAuditError, SpecError
from .handlers.commands import cmd_diagnose, cmd_run
from .handlers.errors import error_handler

logger = logging.getLogger(__name__)


class ArgumentParser(argparse.ArgumentParser):
    """Reports bad flags through the error handler instead of exiting with 2."""

    def error(self, message):
        raise SpecError(f"{self.prog}: {message}")


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--system", required=True, help="system description (JSON)")
    parser.add_argument("--scenario", required=True, help="scenario file (JSON)")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--step", type=float, help="integration step for every regime (s)")
    parser.add_argument(
        "--qss-start", type=float, help="hand over from complete to QSS at this time (s)"
    )
    parser.add_argument("--t-end", type=float, help="override the scenario end time (s)")
    parser.add_argument("--log-level", help="logging level (default from QSSAUDIT_LOG_LEVEL)")


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog="qss-audit",
        description="Complete and QSS simulation of two-timescale power systems",
    )
    commands = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    run = commands.add_parser("run", help="simulate a scenario and write trajectories")
    _common(run)
    run.add_argument("--model", choices=("complete", "qss", "both"), default="both")
    run.set_defaults(handler=cmd_run)

    diag = commands.add_parser("diagnose", help="compare both models and audit the QSS verdict")
    _common(diag)
    diag.add_argument(
        "--frozen-audit",
        action="store_true",
        help="also run the complete model with z_d frozen at every transition",
    )
    diag.add_argument(
        "--audit-horizon",
        type=float,
        help=f"transient-model run length for each audit (s, default {config.TRANSIENT_T_MAX:g})",
    )
    diag.set_defaults(handler=cmd_diagnose)
    return parser


def _configure_logging(level: str) -> None:
    if not isinstance(logging.getLevelName(level.upper()), int):
        raise SpecError(f"unknown log level '{level}'", field="--log-level")
    logging.basicConfig(
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        level=level.upper(),
    )


def main(argv: Optional[List[str]] = None) -> int:
    """Parse the command line and dispatch; returns the process exit code."""
    # Load environment variables
    load_dotenv()

    try:
        args = build_parser().parse_args(argv)
        # Configure logging
        _configure_logging(
            args.log_level or os.getenv("QSSAUDIT_LOG_LEVEL") or config.LOG_LEVEL
        )
    except SpecError as e:
        return error_handler(e)

    logger.info("Starting %s...", args.command)
    try:
        return args.handler(args)
    except (QssAuditError, OSError) as e:
        return error_handler(e)


if __name__ == "__main__":
    raise SystemExit(main())
