"""``psq sweep``: build and evaluate one index per pruning-grid cell."""

from __future__ import annotations

import argparse
from pathlib import Path

from psq.analysis import emit_analysis
from psq.commands.common import (
    add_lm_flags,
    add_table_flags,
    add_tokenizer_flags,
    command_parameters,
    load_build_table,
    load_lm,
    tokenizer_from_args,
)
from psq.evaluation import load_qrels
from psq.indexer import read_documents
from psq.manifest import RunManifest
from psq.search import load_queries
from psq.sweep import SweepGrid, pareto_frontier, run_sweep
from psq.utils.config import CONFIG


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "sweep", help="trade index size against effectiveness over a pruning grid"
    )
    parser.add_argument("--docs", type=Path, required=True,
                        help='JSON lines with "id" and "text" fields')
    add_table_flags(parser)
    add_lm_flags(parser)
    parser.add_argument("--queries", type=Path, required=True,
                        help="query_id<TAB>query_text lines")
    parser.add_argument("--qrels", type=Path, required=True, help="TREC qrels file")
    parser.add_argument("--grid", type=Path, default=None,
                        help="JSON grid file (default: the built-in 480-cell grid)")
    parser.add_argument("--alpha", type=float, default=None,
                        help="override the grid's smoothing weight")
    parser.add_argument("--out", type=Path, required=True, help="output analysis directory")
    parser.add_argument("--metric", choices=["r_at_100", "map"], default="r_at_100")
    parser.add_argument("--size-axis", choices=["bytes", "postings"], default="bytes")
    parser.add_argument("--subgrid-cdf", type=float, default=1.0,
                        help="CDF value whose PMF x top-k sub-grid is compared to the full "
                             "frontier")
    parser.add_argument("--chunk-size", type=int, default=CONFIG.chunk_size)
    parser.add_argument("--depth", type=int, default=CONFIG.search_depth)
    parser.add_argument("--workers", type=int, default=CONFIG.sweep_workers,
                        help="grid cells built concurrently")
    add_tokenizer_flags(parser, "", "document")
    add_tokenizer_flags(parser, "query-", "query")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    grid = SweepGrid.from_file(args.grid) if args.grid else SweepGrid.default(CONFIG.alpha)
    if args.alpha is not None:
        grid = SweepGrid.model_validate({**grid.model_dump(), "alpha": args.alpha})
    doc_cfg = tokenizer_from_args(args)
    query_cfg = tokenizer_from_args(args, "query-")
    documents = list(read_documents(args.docs, doc_cfg))
    table = load_build_table(args)
    lm = load_lm(args, query_cfg)
    queries = load_queries(args.queries, query_cfg)
    qrels = load_qrels(args.qrels)

    points = run_sweep(
        documents, table, lm, grid, queries, qrels,
        chunk_size=args.chunk_size, depth=args.depth, workers=args.workers,
    )
    frontier = pareto_frontier(points, args.metric, args.size_axis)
    written = emit_analysis(
        points, frontier, args.out, metric=args.metric, size_axis=args.size_axis,
        subgrid_cdf=args.subgrid_cdf,
    )
    inputs = {"docs": args.docs, "table": args.table, "queries": args.queries,
              "qrels": args.qrels}
    inputs["lm"] = args.lm if args.lm is not None else args.lm_corpus
    if args.grid is not None:
        inputs["grid"] = args.grid
    parameters = {**command_parameters(args), "grid": grid.model_dump(mode="json")}
    RunManifest.for_inputs("sweep", parameters, inputs).write(args.out)
    print(f"{len(points)} sweep points, {len(frontier.frontier)} on the frontier; "
          f"{len(written)} files written to {args.out}")
    return 0
