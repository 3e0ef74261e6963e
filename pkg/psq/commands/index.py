"""``psq index``: build the translated inverted index."""

from __future__ import annotations

import argparse
import datetime as dt
from collections.abc import Iterator
from pathlib import Path

from psq.commands.common import (
    INDEX_FILE,
    add_lm_flags,
    add_pruning_flags,
    add_table_flags,
    add_tokenizer_flags,
    command_parameters,
    load_build_table,
    load_lm,
    print_json,
    pruning_from_args,
    tokenizer_from_args,
)
from psq.index_io import save_index
from psq.indexer import SmoothingConfig, build_index, index_statistics, read_documents
from psq.manifest import RunManifest
from psq.pruning import prune
from psq.textprep import TokenSequence
from psq.utils.audit import log_event
from psq.utils.config import CONFIG


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("index", help="build a PSQ index over a document collection")
    parser.add_argument("--docs", type=Path, required=True,
                        help='JSON lines with "id" and "text" fields')
    add_table_flags(parser)
    add_lm_flags(parser)
    parser.add_argument("--alpha", type=float, default=CONFIG.alpha,
                        help="weight of the background model")
    parser.add_argument("--out", type=Path, required=True, help="output index directory")
    parser.add_argument("--chunk-size", type=int, default=CONFIG.chunk_size)
    parser.add_argument("--workers", type=int, default=1, help="threads translating chunks")
    add_pruning_flags(parser)
    add_tokenizer_flags(parser, "", "document")
    add_tokenizer_flags(parser, "query-", "query")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    smoothing = SmoothingConfig(alpha=args.alpha)
    cfg = pruning_from_args(args)
    doc_cfg = tokenizer_from_args(args)
    query_cfg = tokenizer_from_args(args, "query-")
    table = prune(load_build_table(args), cfg)
    lm = load_lm(args, query_cfg)
    built_at = dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")
    source_postings = 0

    def counted_documents() -> Iterator[tuple[str, TokenSequence]]:
        nonlocal source_postings
        for doc_id, tokens in read_documents(args.docs, doc_cfg):
            source_postings += len(set(tokens))
            yield doc_id, tokens

    index = build_index(
        counted_documents(), table, lm, smoothing, args.chunk_size,
        workers=args.workers, pruning=cfg, tokenizer=doc_cfg, query_tokenizer=query_cfg,
        built_at=built_at,
    )
    args.out.mkdir(parents=True, exist_ok=True)
    size = save_index(index, args.out / INDEX_FILE)
    inputs = {"docs": args.docs, "table": args.table}
    inputs["lm"] = args.lm if args.lm is not None else args.lm_corpus
    RunManifest.for_inputs("index", command_parameters(args), inputs).write(args.out)

    stats = {"index_bytes": size, **index_statistics(index, source_postings)}
    log_event("index.built", {"out": str(args.out), **stats})
    print_json(stats)
    return 0
