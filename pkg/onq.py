"""
ONQ Lab
Main entry point for the command-line tool.
"""

import argparse
import importlib
import logging
import os
import sys
from typing import List, Optional

from dotenv import load_dotenv

from utils.cli_utils import DEFAULT_OUT_DIR
from utils.errors import OnqError

# Load environment variables
load_dotenv()

LOG_LEVEL_ENV = "ONQ_LOG_LEVEL"
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")

COMMANDS = [
    "commands.spin",
    "commands.tensors",
    "commands.simulate",
    "commands.sweep",
    "commands.feasibility",
    "commands.regress",
]


def load_commands(subparsers):
    """Load all command modules."""
    for name in COMMANDS:
        module = importlib.import_module(name)
        module.setup(subparsers)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="onq",
        description="Opto-nuclear quadrupolar coupling: spin levels, response tensors, "
                    "transduction dynamics and feasibility budgets",
    )
    parser.add_argument("--config", help="Scenario TOML file")
    parser.add_argument("--out", default=DEFAULT_OUT_DIR, help="Output directory (default: out/)")
    parser.add_argument("--workers", type=int, help="Sweep worker processes (overrides ONQ_SIM_WORKERS)")
    parser.add_argument("--stride", type=int, help="Record every k-th integrator step")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log progress at INFO level")
    subparsers = parser.add_subparsers(dest="command", required=True)
    load_commands(subparsers)
    return parser


def configure_logging(verbose: bool):
    level = "INFO" if verbose else os.getenv(LOG_LEVEL_ENV, "WARNING").upper()
    if level not in LOG_LEVELS:
        level = "WARNING"
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", force=True)


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one subcommand.

    Returns:
        Process exit code: 0 success, 1 configuration, 2 numerical, 3 I/O
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)
    try:
        return args.handler(args)
    except OnqError as e:
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
