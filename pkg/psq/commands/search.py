"""``psq search``: rank documents for a query file and write a TREC run."""

from __future__ import annotations

import argparse
import logging
from pathlib import Path

from psq.commands.common import INDEX_FILE
from psq.index_io import load_index
from psq.search import batch_search, load_queries, write_run
from psq.textprep import TokenizerConfig
from psq.utils.audit import log_event
from psq.utils.config import CONFIG

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("search", help="run queries against an index")
    parser.add_argument("--index", type=Path, required=True, help="index directory")
    parser.add_argument("--queries", type=Path, required=True,
                        help="query_id<TAB>query_text lines")
    parser.add_argument("--out", type=Path, required=True, help="output TREC run file")
    parser.add_argument("--depth", type=int, default=CONFIG.search_depth)
    parser.add_argument("--run-tag", default=CONFIG.run_tag)
    parser.add_argument("--workers", type=int, default=1)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    index = load_index(args.index / INDEX_FILE)
    recorded = index.metadata.get("query_tokenizer")
    if recorded is None:
        logger.warning("Index does not record a query tokenizer; using defaults")
    cfg = TokenizerConfig.model_validate(recorded or {})
    queries = load_queries(args.queries, cfg)
    runs = batch_search(index, queries, args.depth, workers=args.workers)
    lines = write_run(runs, args.out, args.run_tag)
    empty = sum(1 for ranked in runs if len(ranked) == 0)
    log_event("search.batch", {"queries": len(queries), "lines": lines, "empty": empty})
    print(f"{len(queries)} queries, {lines} run lines written to {args.out}")
    return 0
