"""Ranked retrieval over the PSQ inverted index.

A document's score is the sum of its stored weights over the query tokens it matches;
documents matching nothing score exactly zero and are never returned. This sparse score
equals the full smoothed query likelihood minus a query-only constant, so the two rank
documents identically; :func:`dense_oracle_score` computes the full form for checking.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from psq.errors import ParseError
from psq.indexer import InvertedIndex, SmoothingConfig, TranslatedDocVector, UnigramLM
from psq.textprep import TokenizerConfig, TokenSequence, tokenize

logger = logging.getLogger(__name__)

DEFAULT_DEPTH = 1000


@dataclass(frozen=True)
class Query:
    query_id: str
    tokens: TokenSequence

    def __post_init__(self) -> None:
        if len(self.tokens) == 0:
            raise ValueError(f"query {self.query_id!r} has no tokens after preprocessing")


@dataclass(frozen=True)
class RankedList:
    """Results for one query, best first; ties are ordered by document ordinal."""

    query_id: str
    items: tuple[tuple[str, float], ...] = ()

    def __len__(self) -> int:
        return len(self.items)

    @property
    def doc_ids(self) -> list[str]:
        return [doc_id for doc_id, _ in self.items]


def search(index: InvertedIndex, query: Query, depth: int = DEFAULT_DEPTH) -> RankedList:
    """Top ``depth`` documents by summed term weight.

    Repeated query tokens count once per occurrence; tokens missing from the index
    contribute nothing.
    """

    if depth < 1:
        raise ValueError("depth must be at least 1")
    occurrences: Counter[int] = Counter()
    for token in query.tokens:
        token_id = index.query_vocab.get(token)
        if token_id is not None:
            occurrences[token_id] += 1
    if not occurrences:
        logger.warning("Query %s has no tokens in the index vocabulary", query.query_id)
        return RankedList(query.query_id)

    token_ids = sorted(occurrences)
    multiplicity = np.asarray([occurrences[token_id] for token_id in token_ids],
                              dtype=np.float64)
    columns = index.matrix[:, token_ids]
    scores = np.asarray(columns @ multiplicity).ravel()

    matched = np.flatnonzero(scores > 0)
    order = np.lexsort((matched, -scores[matched]))[:depth]
    items = tuple((index.doc_ids[matched[i]], float(scores[matched[i]])) for i in order)
    return RankedList(query.query_id, items)


def batch_search(
    index: InvertedIndex, queries: Sequence[Query], depth: int = DEFAULT_DEPTH,
    workers: int = 1,
) -> list[RankedList]:
    """Search every query; a failing query yields an empty list and a warning."""

    def run(query: Query) -> RankedList:
        try:
            return search(index, query, depth)
        except Exception as exc:  # noqa: BLE001
            logger.warning("Search failed for query %s", query.query_id, exc_info=exc)
            return RankedList(query.query_id)

    if workers > 1 and len(queries) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, queries))
    return [run(query) for query in queries]


def baseline_score(query: Query, lm: UnigramLM, cfg: SmoothingConfig) -> float:
    """Score of a document sharing no token with the query: sum of log(alpha * P(w|G))."""

    return math.fsum(math.log(cfg.alpha * lm.lookup(token)) for token in query.tokens)


def dense_oracle_score(
    query: Query, doc: TranslatedDocVector, lm: UnigramLM, cfg: SmoothingConfig
) -> float:
    """Full smoothed query log-likelihood of a translated document."""

    alpha = cfg.alpha
    return math.fsum(
        math.log(alpha * lm.lookup(token) + (1.0 - alpha) * doc.entries.get(token, 0.0))
        for token in query.tokens
    )


def load_queries(path: str | Path, cfg: TokenizerConfig) -> list[Query]:
    """Read ``query_id<TAB>query_text`` lines; queries that normalize to nothing are
    skipped with a warning."""

    name = str(path)
    queries: list[Query] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            query_id, sep, text = line.partition("\t")
            if not sep or not query_id:
                raise ParseError("expected query_id<TAB>query_text", name, line_number)
            if query_id in seen:
                raise ParseError(f"duplicate query id {query_id!r}", name, line_number)
            seen.add(query_id)
            tokens = tokenize(text, cfg)
            if len(tokens) == 0:
                logger.warning("Query %s is empty after preprocessing; skipped", query_id)
                continue
            queries.append(Query(query_id, tokens))
    return queries


def write_run(runs: Sequence[RankedList], path: str | Path, run_tag: str = "psq") -> int:
    """Write TREC six-column run lines; returns the number of lines written."""

    lines = 0
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for ranked in runs:
            for rank, (doc_id, score) in enumerate(ranked.items, start=1):
                handle.write(f"{ranked.query_id} Q0 {doc_id} {rank} {score:.10f} {run_tag}\n")
                lines += 1
    return lines


def read_run(path: str | Path) -> list[RankedList]:
    """Parse a TREC run file, ordering each query's documents by the rank column."""

    name = str(path)
    grouped: dict[str, list[tuple[int, str, float]]] = {}
    with open(path, encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != 6:
                raise ParseError("expected six whitespace-separated fields", name, line_number)
            query_id, _, doc_id, rank_text, score_text, _ = fields
            try:
                rank, score = int(rank_text), float(score_text)
            except ValueError as exc:
                raise ParseError("rank and score must be numeric", name, line_number) from exc
            grouped.setdefault(query_id, []).append((rank, doc_id, score))

    runs = []
    for query_id, rows in grouped.items():
        rows.sort(key=lambda row: row[0])
        seen: set[str] = set()
        items = []
        for _, doc_id, score in rows:
            if doc_id in seen:
                logger.warning("Duplicate document %s for query %s in %s", doc_id, query_id,
                               name)
                continue
            seen.add(doc_id)
            items.append((doc_id, score))
        runs.append(RankedList(query_id, tuple(items)))
    return runs
