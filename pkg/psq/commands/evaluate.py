"""``psq eval``: score a run against relevance judgments."""

from __future__ import annotations

import argparse
from pathlib import Path

from psq.evaluation import evaluate, format_report, load_qrels
from psq.search import read_run
from psq.utils.audit import log_event


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("eval", help="compute MAP and recall for a run")
    parser.add_argument("--run", type=Path, required=True, help="TREC run file")
    parser.add_argument("--qrels", type=Path, required=True, help="TREC qrels file")
    parser.add_argument("--recall-cutoff", type=int, default=100)
    parser.add_argument("--format", choices=["json", "text"], default="json")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    report = evaluate(read_run(args.run), load_qrels(args.qrels), args.recall_cutoff)
    log_event("eval.report", {"run": str(args.run), "topics": report.evaluated_topic_count,
                              "map": report.map, "recall": report.recall})
    print(report.to_json() if args.format == "json" else format_report(report))
    return 0
