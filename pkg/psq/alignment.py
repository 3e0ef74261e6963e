"""Lexical translation tables: IBM Model 1 training, alignment counting and table files.

Probabilities are always normalized as P(query-language token | document-language token).
In the types below the document language is the *source* side (``w_S``) and the query
language is the *target* side (``w_T``).
"""

from __future__ import annotations

import logging
import math
from collections import Counter, defaultdict
from collections.abc import Iterable, Iterator, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from psq.errors import ParseError
from psq.textprep import TokenizerConfig, TokenSequence, tokenize

logger = logging.getLogger(__name__)

SUM_TOLERANCE = 1e-9
EM_NOISE_FLOOR = 1e-12
PROBABILITY_DIGITS = 12

Translation = tuple[str, float]


def _order_key(item: Translation) -> tuple[float, bytes]:
    return (-item[1], item[0].encode("utf-8"))


@dataclass(frozen=True)
class ParallelCorpus:
    """Sentence pairs; source side is the document language, target the query language."""

    pairs: tuple[tuple[TokenSequence, TokenSequence], ...]

    def __post_init__(self) -> None:
        for index, (source, target) in enumerate(self.pairs):
            if len(source) == 0 or len(target) == 0:
                raise ValueError(f"sentence pair {index} has an empty side")

    def __len__(self) -> int:
        return len(self.pairs)

    @classmethod
    def from_strings(cls, pairs: Iterable[tuple[str, str]]) -> ParallelCorpus:
        """Build from pre-tokenized, space-delimited sentence strings."""

        return cls(
            tuple(
                (TokenSequence.from_text(source), TokenSequence.from_text(target))
                for source, target in pairs
            )
        )


@dataclass(frozen=True, eq=True)
class TranslationTable:
    """Sparse P(w_T | w_S), one descending-sorted translation list per source token.

    Ties are broken by the target token's UTF-8 byte order so that every downstream
    cut (CDF, top-k) is deterministic.
    """

    entries: Mapping[str, tuple[Translation, ...]]

    def __post_init__(self) -> None:
        for source, translations in self.entries.items():
            if not translations:
                raise ValueError(f"source token {source!r} has no translations")
            targets = [target for target, _ in translations]
            if len(set(targets)) != len(targets):
                raise ValueError(f"source token {source!r} repeats a target token")
            if any(not (0.0 < prob <= 1.0) for _, prob in translations):
                raise ValueError(f"source token {source!r} has a probability outside (0, 1]")
            if list(translations) != sorted(translations, key=_order_key):
                raise ValueError(f"translations of {source!r} are not in canonical order")
            if math.fsum(prob for _, prob in translations) > 1.0 + SUM_TOLERANCE:
                raise ValueError(f"translations of {source!r} sum to more than one")

    __hash__ = None  # type: ignore[assignment]

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Mapping[str, float]]) -> TranslationTable:
        """Sort raw ``{source: {target: prob}}`` data into a table, dropping empty sources."""

        entries: dict[str, tuple[Translation, ...]] = {}
        for source in sorted(mapping, key=lambda token: token.encode("utf-8")):
            items = [(target, float(prob)) for target, prob in mapping[source].items() if prob > 0]
            if items:
                entries[source] = tuple(sorted(items, key=_order_key))
        return cls(entries)

    def translations(self, source: str) -> tuple[Translation, ...]:
        return self.entries.get(source, ())

    @property
    def source_vocab(self) -> frozenset[str]:
        return frozenset(self.entries)

    @property
    def target_vocab(self) -> frozenset[str]:
        return frozenset(target for items in self.entries.values() for target, _ in items)

    @property
    def num_entries(self) -> int:
        return sum(len(items) for items in self.entries.values())

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, source: object) -> bool:
        return source in self.entries


@dataclass
class AlignmentCounts:
    """Co-occurrence mass per (w_S, w_T) pair."""

    counts: dict[tuple[str, str], float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for pair, value in self.counts.items():
            if value < 0 or not math.isfinite(value):
                raise ValueError(f"count for {pair} must be a finite non-negative number")

    def __len__(self) -> int:
        return len(self.counts)

    def merge(self, other: AlignmentCounts) -> AlignmentCounts:
        """Add two count tables, the same as concatenating the alignments behind them."""

        merged = dict(self.counts)
        for pair, value in other.counts.items():
            merged[pair] = merged.get(pair, 0.0) + value
        return AlignmentCounts(merged)


class Model1Trainer:
    """IBM Model 1 EM over a parallel corpus, estimating P(target | source).

    No NULL token is modelled. Translation parameters start uniform over the target
    tokens observed with each source token. The E-step runs over fixed-size shards of the
    corpus, optionally on several threads; shard counts are always summed in shard order,
    so the result does not depend on the worker count.
    """

    def __init__(
        self, corpus: ParallelCorpus, workers: int = 1, shard_size: int = 1024
    ) -> None:
        if len(corpus) == 0:
            raise ValueError("corpus cannot be empty")
        if workers < 1:
            raise ValueError("workers must be at least 1")
        if shard_size < 1:
            raise ValueError("shard_size must be at least 1")

        self._workers = workers
        self._source_tokens: list[str] = []
        self._target_tokens: list[str] = []
        source_ids: dict[str, int] = {}
        target_ids: dict[str, int] = {}
        pair_ids: dict[tuple[int, int], int] = {}
        pair_source: list[int] = []
        pair_target: list[int] = []
        self._links: list[np.ndarray] = []

        for source, target in corpus.pairs:
            s_ids = [source_ids.setdefault(token, len(source_ids)) for token in source]
            t_ids = [target_ids.setdefault(token, len(target_ids)) for token in target]
            grid = np.empty((len(s_ids), len(t_ids)), dtype=np.int64)
            for i, s_id in enumerate(s_ids):
                for j, t_id in enumerate(t_ids):
                    key = (s_id, t_id)
                    pair = pair_ids.get(key)
                    if pair is None:
                        pair = pair_ids[key] = len(pair_ids)
                        pair_source.append(s_id)
                        pair_target.append(t_id)
                    grid[i, j] = pair
            self._links.append(grid)

        self._source_tokens = list(source_ids)
        self._target_tokens = list(target_ids)
        self._pair_source = np.asarray(pair_source, dtype=np.int64)
        self._pair_target = np.asarray(pair_target, dtype=np.int64)
        fan_out = np.bincount(self._pair_source, minlength=len(self._source_tokens))
        self._prob = 1.0 / fan_out[self._pair_source].astype(np.float64)
        self._shards = [
            self._links[start : start + shard_size]
            for start in range(0, len(self._links), shard_size)
        ]
        self.iterations_run = 0
        self.history: list[float] = []

    def _expect(self, shard: Sequence[np.ndarray]) -> tuple[np.ndarray, float]:
        counts = np.zeros(self._prob.shape[0], dtype=np.float64)
        log_likelihood = 0.0
        for grid in shard:
            probs = self._prob[grid]
            denom = probs.sum(axis=0)
            np.add.at(counts, grid, probs / denom)
            log_likelihood += float(np.sum(np.log(denom / grid.shape[0])))
        return counts, log_likelihood

    def _run_shards(self) -> list[tuple[np.ndarray, float]]:
        if self._workers == 1 or len(self._shards) == 1:
            return [self._expect(shard) for shard in self._shards]
        with ThreadPoolExecutor(max_workers=self._workers) as pool:
            return list(pool.map(self._expect, self._shards))

    def log_likelihood(self) -> float:
        """Corpus log-likelihood under the current parameters (length term omitted)."""

        return sum(ll for _, ll in self._run_shards())

    def iterate(self) -> float:
        """Run one EM round; returns the log-likelihood before the update."""

        results = self._run_shards()
        counts = np.zeros_like(self._prob)
        log_likelihood = 0.0
        for shard_counts, shard_ll in results:
            counts += shard_counts
            log_likelihood += shard_ll
        totals = np.bincount(
            self._pair_source, weights=counts, minlength=len(self._source_tokens)
        )
        denom = totals[self._pair_source]
        self._prob = np.divide(counts, denom, out=np.zeros_like(counts), where=denom > 0)
        self.iterations_run += 1
        self.history.append(log_likelihood)
        return log_likelihood

    def table(self, noise_floor: float = EM_NOISE_FLOOR) -> TranslationTable:
        """Current parameters as a table; probabilities below ``noise_floor`` are dropped."""

        mapping: dict[str, dict[str, float]] = defaultdict(dict)
        keep = np.flatnonzero(self._prob >= noise_floor)
        for pair in keep:
            source = self._source_tokens[self._pair_source[pair]]
            target = self._target_tokens[self._pair_target[pair]]
            mapping[source][target] = float(self._prob[pair])
        return TranslationTable.from_mapping(mapping)


def train_model1(
    corpus: ParallelCorpus, iterations: int = 5, workers: int = 1
) -> TranslationTable:
    """Estimate P(w_T | w_S) with ``iterations`` rounds of Model 1 EM."""

    if iterations < 1:
        raise ValueError("iterations must be at least 1")
    trainer = Model1Trainer(corpus, workers=workers)
    for _ in range(iterations):
        log_likelihood = trainer.iterate()
        logger.debug("Model 1 iteration %d: log-likelihood %.6f", trainer.iterations_run,
                     log_likelihood)
    return trainer.table()


def counts_from_alignments(aligned_pairs: Iterable[tuple[str, str]]) -> AlignmentCounts:
    """Count aligned (w_S, w_T) occurrences.

    Feeding the concatenated output of several aligners combines them: pairs found by
    more than one aligner accumulate more mass.
    """

    counter = Counter(aligned_pairs)
    return AlignmentCounts({pair: float(count) for pair, count in counter.items()})


def normalize_counts(counts: AlignmentCounts) -> TranslationTable:
    """Maximum-likelihood P(w_T | w_S) from co-occurrence counts."""

    if len(counts) == 0:
        raise ValueError("counts cannot be empty")
    grouped: dict[str, dict[str, float]] = defaultdict(dict)
    for (source, target), value in counts.counts.items():
        if value > 0:
            grouped[source][target] = value
    mapping: dict[str, dict[str, float]] = {}
    for source, targets in grouped.items():
        total = math.fsum(targets.values())
        if total <= 0:
            continue
        mapping[source] = {target: value / total for target, value in targets.items()}
    return TranslationTable.from_mapping(mapping)


def apply_floor(table: TranslationTable, floor: float) -> TranslationTable:
    """Drop entries below ``floor`` without renormalizing (the aligner-style PMF floor)."""

    if not 0.0 <= floor <= 1.0:
        raise ValueError("floor must lie in [0, 1]")
    entries = {}
    for source, translations in table.entries.items():
        kept = tuple(item for item in translations if item[1] >= floor)
        if kept:
            entries[source] = kept
    dropped = table.num_entries - sum(len(items) for items in entries.values())
    if dropped:
        logger.info("Build floor %.1e removed %d translation entries", floor, dropped)
    return TranslationTable(entries)


def table_statistics(table: TranslationTable) -> dict[str, float]:
    """Sources, entries and fan-out of a table."""

    fan_out = [len(items) for items in table.entries.values()]
    return {
        "sources": len(table),
        "targets": len(table.target_vocab),
        "entries": sum(fan_out),
        "mean_translations": (sum(fan_out) / len(fan_out)) if fan_out else 0.0,
        "max_translations": max(fan_out, default=0),
    }


def _format_probability(prob: float) -> str:
    return f"{prob:.{PROBABILITY_DIGITS}g}"


def save_table(table: TranslationTable, path: str | Path) -> None:
    """Write ``source<TAB>target<TAB>probability`` lines, grouped by source."""

    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for source, translations in table.entries.items():
            for target, prob in translations:
                handle.write(f"{source}\t{target}\t{_format_probability(prob)}\n")


def _parse_probability(text: str, path: str, line_number: int) -> float:
    try:
        prob = float(text)
    except ValueError as exc:
        raise ParseError(f"probability {text!r} is not numeric", path, line_number) from exc
    if not math.isfinite(prob) or not 0.0 < prob <= 1.0:
        raise ParseError(f"probability {text!r} is out of range (0, 1]", path, line_number)
    return prob


def _check_token(token: str, path: str, line_number: int) -> None:
    if not token or any(char.isspace() for char in token):
        raise ParseError(f"invalid token {token!r}", path, line_number)


def _build_loaded_table(
    mapping: dict[str, dict[str, float]], first_line: dict[str, int], path: str
) -> TranslationTable:
    for source, targets in mapping.items():
        if math.fsum(targets.values()) > 1.0 + 1e-6:
            raise ParseError(
                f"probabilities for source {source!r} sum to more than one", path,
                first_line[source],
            )
    # rounded text can push a sum a hair past one; rescale those lists only
    cleaned: dict[str, dict[str, float]] = {}
    for source, targets in mapping.items():
        total = math.fsum(targets.values())
        if total > 1.0 + SUM_TOLERANCE:
            targets = {target: prob / total for target, prob in targets.items()}
        cleaned[source] = targets
    return TranslationTable.from_mapping(cleaned)


def load_table(path: str | Path) -> TranslationTable:
    """Parse the TSV table format; malformed input raises :class:`ParseError`."""

    name = str(path)
    mapping: dict[str, dict[str, float]] = defaultdict(dict)
    first_line: dict[str, int] = {}
    with open(path, encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise ParseError("expected source<TAB>target<TAB>probability", name,
                                 line_number)
            source, target, prob_text = fields
            _check_token(source, name, line_number)
            _check_token(target, name, line_number)
            prob = _parse_probability(prob_text, name, line_number)
            if target in mapping[source]:
                raise ParseError(f"duplicate pair ({source!r}, {target!r})", name, line_number)
            mapping[source][target] = prob
            first_line.setdefault(source, line_number)
    return _build_loaded_table(mapping, first_line, name)


def load_moses_lex(path: str | Path, source_column: int = 2) -> TranslationTable:
    """Ingest a Moses-style lexical table (``token token probability`` per line).

    ``source_column`` (1 or 2) names the column holding the conditioning,
    document-language token; Moses ``lex.*`` files put it second. ``NULL`` rows are
    skipped because tables here never translate to or from the empty word.
    """

    if source_column not in (1, 2):
        raise ValueError("source_column must be 1 or 2")
    name = str(path)
    mapping: dict[str, dict[str, float]] = defaultdict(dict)
    first_line: dict[str, int] = {}
    with open(path, encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != 3:
                raise ParseError("expected three whitespace-separated fields", name,
                                 line_number)
            if source_column == 2:
                target, source, prob_text = fields
            else:
                source, target, prob_text = fields
            prob = _parse_probability(prob_text, name, line_number)
            if "NULL" in (source, target):
                continue
            if target in mapping[source]:
                raise ParseError(f"duplicate pair ({source!r}, {target!r})", name, line_number)
            mapping[source][target] = prob
            first_line.setdefault(source, line_number)
    return _build_loaded_table(mapping, first_line, name)


def read_alignment_links(
    source_path: str | Path, target_path: str | Path, links_path: str | Path
) -> Iterator[tuple[str, str]]:
    """Yield aligned (w_S, w_T) occurrences from tokenized text plus ``i-j`` link lines.

    Links are zero-based source-target positions in the Pharaoh format written by most
    word aligners. Out-of-range links are skipped with a warning.
    """

    links_name = str(links_path)
    with (
        open(source_path, encoding="utf-8") as sources,
        open(target_path, encoding="utf-8") as targets,
        open(links_path, encoding="utf-8") as links,
    ):
        for line_number, (source_line, target_line, link_line) in enumerate(
            zip(sources, targets, links, strict=True), start=1
        ):
            source_words = source_line.split()
            target_words = target_line.split()
            for link in link_line.split():
                left, sep, right = link.partition("-")
                if not sep or not left.isdigit() or not right.isdigit():
                    raise ParseError(f"malformed link {link!r}", links_name, line_number)
                i, j = int(left), int(right)
                if i >= len(source_words) or j >= len(target_words):
                    logger.warning("Skipping out-of-range link %s on line %d of %s", link,
                                   line_number, links_name)
                    continue
                yield source_words[i], target_words[j]


def read_parallel_corpus(
    source_path: str | Path,
    target_path: str | Path | None,
    source_cfg: TokenizerConfig,
    target_cfg: TokenizerConfig | None = None,
) -> ParallelCorpus:
    """Read two line-aligned files, or one ``source<TAB>target`` file when
    ``target_path`` is None, tokenizing each side."""

    target_cfg = target_cfg or source_cfg
    raw_pairs: list[tuple[int, str, str]] = []
    if target_path is None:
        name = str(source_path)
        with open(source_path, encoding="utf-8") as handle:
            for line_number, line in enumerate(handle, start=1):
                line = line.rstrip("\n").rstrip("\r")
                if not line:
                    continue
                fields = line.split("\t")
                if len(fields) != 2:
                    raise ParseError("expected source<TAB>target", name, line_number)
                raw_pairs.append((line_number, fields[0], fields[1]))
    else:
        with (
            open(source_path, encoding="utf-8") as sources,
            open(target_path, encoding="utf-8") as targets,
        ):
            source_lines = sources.read().splitlines()
            target_lines = targets.read().splitlines()
        if len(source_lines) != len(target_lines):
            raise ParseError(
                f"line counts differ: {len(source_lines)} source vs {len(target_lines)} target",
                str(target_path),
            )
        raw_pairs = [
            (number, s, t) for number, (s, t) in enumerate(zip(source_lines, target_lines), 1)
        ]

    pairs = []
    skipped = 0
    for _, source_text, target_text in raw_pairs:
        source = tokenize(source_text, source_cfg)
        target = tokenize(target_text, target_cfg)
        if len(source) == 0 or len(target) == 0:
            skipped += 1
            continue
        pairs.append((source, target))
    if skipped:
        logger.info("Skipped %d sentence pairs that were empty after preprocessing", skipped)
    return ParallelCorpus(tuple(pairs))
