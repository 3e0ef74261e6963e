"""Flag groups and loaders shared by several subcommands."""

from __future__ import annotations

import argparse
import json
import logging
from pathlib import Path
from typing import Any

from psq.alignment import TranslationTable, apply_floor, load_moses_lex, load_table
from psq.indexer import UnigramLM, build_unigram_lm, load_unigram_lm
from psq.pruning import PruningConfig
from psq.textprep import TokenizerConfig, load_stopwords, tokenize
from psq.utils.config import CONFIG

logger = logging.getLogger(__name__)

INDEX_FILE = "index.psq"


def _dest(prefix: str, name: str) -> str:
    return f"{prefix}{name}".replace("-", "_")


def add_tokenizer_flags(parser: argparse.ArgumentParser, prefix: str = "",
                        side: str = "document") -> None:
    """Normalization switches for one language side, e.g. ``--query-stopwords``."""

    group = parser.add_argument_group(f"{side} tokenizer")
    group.add_argument(f"--{prefix}stopwords", type=Path, default=None,
                       help=f"{side}-language stopword file, one token per line")
    group.add_argument(f"--{prefix}keep-case", action="store_true",
                       help=f"do not lowercase {side} tokens")
    group.add_argument(f"--{prefix}keep-diacritics", action="store_true",
                       help=f"do not strip combining marks from {side} tokens")
    group.add_argument(f"--{prefix}keep-punctuation", action="store_true",
                       help=f"do not strip punctuation from {side} tokens")
    group.add_argument(f"--{prefix}lang", default="und", help=f"{side} language tag")


def tokenizer_from_args(args: argparse.Namespace, prefix: str = "") -> TokenizerConfig:
    stopwords_path = getattr(args, _dest(prefix, "stopwords"))
    return TokenizerConfig(
        lowercase=not getattr(args, _dest(prefix, "keep_case")),
        strip_diacritics=not getattr(args, _dest(prefix, "keep_diacritics")),
        strip_punctuation=not getattr(args, _dest(prefix, "keep_punctuation")),
        stopword_list=load_stopwords(stopwords_path) if stopwords_path else frozenset(),
        language_tag=getattr(args, _dest(prefix, "lang")),
    )


def add_pruning_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("pruning")
    group.add_argument("--pmf-min", type=float, default=0.0,
                       help="drop translations below this probability (default: 0)")
    group.add_argument("--cdf-max", type=float, default=1.0,
                       help="keep translations until this cumulative mass (default: 1.0)")
    group.add_argument("--top-k", default="inf",
                       help="keep at most this many translations per source (default: inf)")
    group.add_argument("--renormalize", action="store_true",
                       help="rescale kept translations to sum to one")


def pruning_from_args(args: argparse.Namespace) -> PruningConfig:
    return PruningConfig(
        pmf_min=args.pmf_min, cdf_max=args.cdf_max, top_k=args.top_k,
        renormalize=args.renormalize,
    )


def add_table_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--table", type=Path, required=True, help="translation table")
    parser.add_argument("--moses", action="store_true",
                        help="read the table as a Moses lex file (conditioning token second)")
    parser.add_argument("--build-floor", type=float, default=CONFIG.build_pmf_floor,
                        help="discard entries below this probability when loading")


def load_build_table(args: argparse.Namespace) -> TranslationTable:
    """Load the table named by ``--table`` and apply the build floor once."""

    table = load_moses_lex(args.table) if args.moses else load_table(args.table)
    return apply_floor(table, args.build_floor)


def add_lm_flags(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--lm", type=Path, help="background LM written by `psq lm`")
    source.add_argument("--lm-corpus", type=Path,
                        help="query-language text, one segment per line, to estimate the LM")
    parser.add_argument("--lm-floor", type=float, default=None,
                        help=f"probability of unseen tokens (default: {CONFIG.lm_floor:g})")


def load_lm(args: argparse.Namespace, cfg: TokenizerConfig) -> UnigramLM:
    if args.lm is not None:
        return load_unigram_lm(args.lm, floor=args.lm_floor)
    return lm_from_text(args.lm_corpus, cfg, args.lm_floor or CONFIG.lm_floor)


def lm_from_text(path: Path, cfg: TokenizerConfig, floor: float) -> UnigramLM:
    with open(path, encoding="utf-8") as handle:
        return build_unigram_lm((tokenize(line, cfg) for line in handle), floor=floor)


def print_json(payload: Any) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def command_parameters(args: argparse.Namespace) -> dict[str, Any]:
    """Parsed flags in manifest form (paths as strings, handler dropped)."""

    return {
        key: str(value) if isinstance(value, Path) else value
        for key, value in sorted(vars(args).items())
        if key != "handler"
    }
