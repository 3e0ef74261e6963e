"""``psq prune``: apply PMF, CDF and top-k pruning to a table."""

from __future__ import annotations

import argparse
from pathlib import Path

from psq.alignment import save_table
from psq.commands.common import (
    add_pruning_flags,
    add_table_flags,
    load_build_table,
    print_json,
    pruning_from_args,
)
from psq.pruning import prune, prune_stats
from psq.utils.audit import log_event


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("prune", help="prune a translation table")
    add_table_flags(parser)
    parser.add_argument("--out", type=Path, required=True, help="output TSV table")
    add_pruning_flags(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    cfg = pruning_from_args(args)
    table = load_build_table(args)
    pruned = prune(table, cfg)
    save_table(pruned, args.out)
    report = prune_stats(table, pruned)
    log_event("prune.applied", {"config": cfg.label, "entries": report.entries_after})
    print_json(report.to_dict())
    return 0
