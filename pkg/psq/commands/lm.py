"""``psq lm``: estimate the background query-language model."""

from __future__ import annotations

import argparse
from pathlib import Path

from psq.commands.common import add_tokenizer_flags, lm_from_text, tokenizer_from_args
from psq.indexer import save_unigram_lm
from psq.utils.audit import log_event
from psq.utils.config import CONFIG


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("lm", help="build a unigram LM from query-language text")
    parser.add_argument("--corpus", type=Path, required=True, help="text, one segment per line")
    parser.add_argument("--out", type=Path, required=True, help="output LM file")
    parser.add_argument("--floor", type=float, default=CONFIG.lm_floor,
                        help="probability returned for unseen tokens")
    add_tokenizer_flags(parser, "query-", "query")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    lm = lm_from_text(args.corpus, tokenizer_from_args(args, "query-"), args.floor)
    save_unigram_lm(lm, args.out)
    log_event("lm.built", {"out": str(args.out), "tokens": len(lm), "floor": lm.floor})
    print(f"{len(lm)} tokens written to {args.out}")
    return 0
