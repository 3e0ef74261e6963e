"""``psq align``: estimate a translation table with IBM Model 1."""

from __future__ import annotations

import argparse
import logging
from pathlib import Path

from psq.alignment import read_parallel_corpus, save_table, table_statistics, train_model1
from psq.commands.common import add_tokenizer_flags, print_json, tokenizer_from_args
from psq.utils.audit import log_event
from psq.utils.config import CONFIG

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "align", help="train P(query token | document token) from parallel text"
    )
    parser.add_argument("--source", type=Path, required=True,
                        help="document-language sentences, or a source<TAB>target file")
    parser.add_argument("--target", type=Path, default=None,
                        help="query-language sentences, line-aligned with --source")
    parser.add_argument("--out", type=Path, required=True, help="output TSV table")
    parser.add_argument("--iterations", type=int, default=CONFIG.em_iterations)
    parser.add_argument("--workers", type=int, default=CONFIG.em_workers,
                        help="threads for the E-step")
    add_tokenizer_flags(parser, "", "document")
    add_tokenizer_flags(parser, "query-", "query")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    if args.iterations < 1:
        raise ValueError("--iterations must be at least 1")
    corpus = read_parallel_corpus(
        args.source, args.target, tokenizer_from_args(args), tokenizer_from_args(args, "query-")
    )
    table = train_model1(corpus, iterations=args.iterations, workers=args.workers)
    save_table(table, args.out)
    stats = {"sentence_pairs": len(corpus), **table_statistics(table)}
    log_event("align.trained", {"out": str(args.out), **stats})
    print_json(stats)
    return 0
