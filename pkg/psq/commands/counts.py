"""``psq counts``: turn external word alignments into a translation table."""

from __future__ import annotations

import argparse
import itertools
from pathlib import Path

from psq.alignment import (
    counts_from_alignments,
    normalize_counts,
    read_alignment_links,
    save_table,
    table_statistics,
)
from psq.commands.common import print_json
from psq.utils.audit import log_event


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "counts", help="estimate a table from aligner links (i-j pairs per sentence)"
    )
    parser.add_argument("--source", type=Path, required=True,
                        help="tokenized document-language sentences")
    parser.add_argument("--target", type=Path, required=True,
                        help="tokenized query-language sentences")
    parser.add_argument("--links", type=Path, action="append", required=True,
                        help="links file; repeat to combine several aligners")
    parser.add_argument("--out", type=Path, required=True, help="output TSV table")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    occurrences = itertools.chain.from_iterable(
        read_alignment_links(args.source, args.target, links) for links in args.links
    )
    table = normalize_counts(counts_from_alignments(occurrences))
    save_table(table, args.out)
    stats = table_statistics(table)
    log_event("align.counted", {"out": str(args.out), "aligners": len(args.links), **stats})
    print_json(stats)
    return 0
