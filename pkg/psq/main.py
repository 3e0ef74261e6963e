"""Command-line entry point for the PSQ toolkit.

Each pipeline stage is a subcommand: ``align`` or ``counts`` to estimate a translation
table, ``prune``, ``lm``, ``index``, ``search``, ``eval`` and ``sweep``.
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence

from psq import __version__
from psq.commands import align, counts, evaluate, index, lm, prune, search, sweep
from psq.utils.audit import configure_logging, log_event
from psq.utils.config import CONFIG

logger = logging.getLogger(__name__)

COMMANDS = (align, counts, prune, lm, index, search, evaluate, sweep)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="psq", description="Indexing-time PSQ cross-language retrieval"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Run one subcommand; returns 0 on success and 1 when it raises."""

    args = build_parser().parse_args(argv)
    configure_logging(CONFIG)
    try:
        return args.handler(args)
    except Exception as exc:  # noqa: BLE001
        logger.warning("Command %s failed", args.command, exc_info=exc)
        log_event("cli.error", {"command": args.command, "error": str(exc)})
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
