"""Indexing-time PSQ: translate documents into the query language and weight them.

A document's term-frequency distribution is projected through the translation table,

    P(w_T | D) = sum over w_S in D of P(w_T | w_S) * tf(w_S) / |D|

and every projected probability becomes a smoothed-LM weight

    v = log[ (1 - alpha) * P(w_T | D) / (alpha * P(w_T | G)) + 1 ]

which is zero exactly when P(w_T | D) is zero. Documents are processed in chunks as
sparse row vectors multiplied with the translation matrix, and the chunks are stacked
into one compressed sparse column matrix (documents x query tokens), i.e. the inverted
index keyed by query-language token.
"""

from __future__ import annotations

import datetime as dt
import json
import logging
import math
from collections import Counter
from collections.abc import Iterable, Iterator, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import islice
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import sparse

from psq.alignment import TranslationTable
from psq.errors import ParseError
from psq.pruning import PruningConfig
from psq.textprep import TokenizerConfig, TokenSequence, tokenize

logger = logging.getLogger(__name__)

# projected probabilities below this weigh nothing at double precision
TRANSLATION_FLOOR = 1e-10
DEFAULT_LM_FLOOR = 1e-7


def _byte_order(token: str) -> bytes:
    return token.encode("utf-8")


class Vocabulary:
    """Bijection between tokens and contiguous integer ids starting at zero."""

    def __init__(self, tokens: Iterable[str] = ()) -> None:
        self._tokens: list[str] = []
        self._ids: dict[str, int] = {}
        for token in tokens:
            self.add(token)

    @classmethod
    def sorted(cls, tokens: Iterable[str]) -> Vocabulary:
        """Vocabulary in UTF-8 byte order, the order used by every index file."""

        return cls(sorted(set(tokens), key=_byte_order))

    def add(self, token: str) -> int:
        existing = self._ids.get(token)
        if existing is not None:
            return existing
        self._ids[token] = len(self._tokens)
        self._tokens.append(token)
        return self._ids[token]

    def get(self, token: str) -> int | None:
        return self._ids.get(token)

    def __getitem__(self, token_id: int) -> str:
        return self._tokens[token_id]

    def __contains__(self, token: object) -> bool:
        return token in self._ids

    def __len__(self) -> int:
        return len(self._tokens)

    def __iter__(self) -> Iterator[str]:
        return iter(self._tokens)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vocabulary) and self._tokens == other._tokens

    @property
    def tokens(self) -> tuple[str, ...]:
        return tuple(self._tokens)


@dataclass(frozen=True)
class DocumentVector:
    """Term frequencies of one document; ``length`` is |D| after preprocessing."""

    doc_id: str
    entries: dict[str, int]
    length: int

    def __post_init__(self) -> None:
        if any(tf < 1 for tf in self.entries.values()):
            raise ValueError("term frequencies must be at least 1")
        if sum(self.entries.values()) != self.length:
            raise ValueError("document length must equal the sum of term frequencies")

    @classmethod
    def from_tokens(cls, doc_id: str, tokens: Iterable[str]) -> DocumentVector:
        counts = Counter(tokens)
        ordered = {token: counts[token] for token in sorted(counts, key=_byte_order)}
        return cls(doc_id=doc_id, entries=ordered, length=sum(ordered.values()))


@dataclass(frozen=True)
class TranslatedDocVector:
    """P(w_T | D) for every query-language token reachable from the document."""

    doc_id: str
    entries: dict[str, float]

    def __post_init__(self) -> None:
        for token, prob in self.entries.items():
            if not 0.0 < prob <= 1.0 + 1e-12:
                raise ValueError(f"translated probability for {token!r} is outside (0, 1]")


class SmoothingConfig(BaseModel):
    """Jelinek-Mercer weight on the background model."""

    model_config = ConfigDict(frozen=True)

    alpha: float = Field(default=0.5, gt=0.0, lt=1.0, description="Background model weight")


@dataclass(frozen=True)
class UnigramLM:
    """Background query-language model P(w | G) with a floor for unseen tokens."""

    probabilities: dict[str, float]
    floor: float = DEFAULT_LM_FLOOR

    def __post_init__(self) -> None:
        if not self.floor > 0:
            raise ValueError("floor must be positive")
        if any(prob <= 0 for prob in self.probabilities.values()):
            raise ValueError("stored probabilities must be positive")
        if math.fsum(self.probabilities.values()) > 1.0 + 1e-6:
            raise ValueError("stored probabilities sum to more than one")

    def lookup(self, token: str) -> float:
        return self.probabilities.get(token, self.floor)

    def __len__(self) -> int:
        return len(self.probabilities)


def build_unigram_lm(
    stream: Iterable[str | TokenSequence], floor: float = DEFAULT_LM_FLOOR
) -> UnigramLM:
    """Maximum-likelihood unigram model over a token stream.

    ``stream`` may yield single tokens or whole token sequences.
    """

    if isinstance(stream, str):
        raise TypeError("stream must yield tokens or token sequences, not a bare string")
    if not floor > 0:
        raise ValueError("floor must be positive")
    counts: Counter[str] = Counter()
    for item in stream:
        if isinstance(item, str):
            counts[item] += 1
        else:
            counts.update(item)
    total = sum(counts.values())
    if total == 0:
        raise ValueError("token stream cannot be empty")
    probabilities = {
        token: counts[token] / total for token in sorted(counts, key=_byte_order)
    }
    return UnigramLM(probabilities=probabilities, floor=floor)


def save_unigram_lm(lm: UnigramLM, path: str | Path) -> None:
    """Write ``#floor<TAB>value`` then ``token<TAB>probability`` lines."""

    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(f"#floor\t{lm.floor!r}\n")
        for token, prob in lm.probabilities.items():
            handle.write(f"{token}\t{prob!r}\n")


def load_unigram_lm(path: str | Path, floor: float | None = None) -> UnigramLM:
    name = str(path)
    stored_floor = DEFAULT_LM_FLOOR
    probabilities: dict[str, float] = {}
    with open(path, encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise ParseError("expected token<TAB>probability", name, line_number)
            try:
                value = float(fields[1])
            except ValueError as exc:
                raise ParseError(f"probability {fields[1]!r} is not numeric", name,
                                 line_number) from exc
            if fields[0] == "#floor":
                stored_floor = value
                continue
            if not 0.0 < value <= 1.0:
                raise ParseError(f"probability {fields[1]!r} is out of range", name, line_number)
            if fields[0] in probabilities:
                raise ParseError(f"duplicate token {fields[0]!r}", name, line_number)
            probabilities[fields[0]] = value
    if floor is None:
        floor = stored_floor
    return UnigramLM(probabilities=probabilities, floor=floor)


def translate_document(doc: DocumentVector, table: TranslationTable) -> TranslatedDocVector:
    """Project a document's term distribution through the translation table."""

    accumulated: dict[str, float] = {}
    if doc.length > 0:
        for token, tf in doc.entries.items():
            share = tf / doc.length
            for target, prob in table.translations(token):
                accumulated[target] = accumulated.get(target, 0.0) + prob * share
    kept = {
        token: accumulated[token]
        for token in sorted(accumulated, key=_byte_order)
        if accumulated[token] >= TRANSLATION_FLOOR
    }
    return TranslatedDocVector(doc_id=doc.doc_id, entries=kept)


def term_weight(p_doc: float, p_bg: float, cfg: SmoothingConfig) -> float:
    """Smoothed-LM weight of one (token, document) pair; exactly 0 when ``p_doc`` is 0."""

    if not p_bg > 0:
        raise ValueError("background probability must be positive")
    if p_doc < 0:
        raise ValueError("document probability cannot be negative")
    if p_doc == 0:
        return 0.0
    alpha = cfg.alpha
    return math.log1p(((1.0 - alpha) * p_doc) / (alpha * p_bg))


@dataclass
class InvertedIndex:
    """Query-language inverted index backed by a CSC matrix (documents x tokens).

    Column ``j`` holds the postings of ``query_vocab[j]``; every stored weight is
    positive. :meth:`postings` returns a list ordered by weight descending, then by
    document ordinal.
    """

    query_vocab: Vocabulary
    doc_ids: tuple[str, ...]
    matrix: sparse.csc_matrix
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        expected = (len(self.doc_ids), len(self.query_vocab))
        if self.matrix.shape != expected:
            raise ValueError(f"matrix shape {self.matrix.shape} does not match {expected}")
        if self.matrix.nnz and not np.all(self.matrix.data > 0):
            raise ValueError("index weights must be positive")
        self.matrix.sort_indices()

    @property
    def total_postings(self) -> int:
        return int(self.matrix.nnz)

    @property
    def num_docs(self) -> int:
        return len(self.doc_ids)

    def postings_by_id(self, token_id: int) -> list[tuple[int, float]]:
        start, end = self.matrix.indptr[token_id], self.matrix.indptr[token_id + 1]
        rows = self.matrix.indices[start:end]
        weights = self.matrix.data[start:end]
        order = np.lexsort((rows, -weights))
        return [(int(rows[i]), float(weights[i])) for i in order]

    def postings(self, token: str) -> list[tuple[int, float]]:
        token_id = self.query_vocab.get(token)
        if token_id is None:
            return []
        return self.postings_by_id(token_id)


def vectorize_documents(
    docs: Iterable[tuple[str, TokenSequence]],
) -> Iterator[DocumentVector]:
    for doc_id, tokens in docs:
        yield DocumentVector.from_tokens(doc_id, tokens)


def translation_matrix(
    table: TranslationTable, source_vocab: Vocabulary, target_vocab: Vocabulary
) -> sparse.csr_matrix:
    """Sparse (source x target) matrix of P(w_T | w_S)."""

    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for source in source_vocab:
        for target, prob in table.translations(source):
            indices.append(target_vocab.get(target))  # type: ignore[arg-type]
            data.append(prob)
        indptr.append(len(indices))
    matrix = sparse.csr_matrix(
        (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int64),
         np.asarray(indptr, dtype=np.int64)),
        shape=(len(source_vocab), len(target_vocab)),
    )
    matrix.sort_indices()
    return matrix


class _ChunkWeigher:
    """Translate and weight one chunk of documents."""

    def __init__(
        self,
        source_vocab: Vocabulary,
        projection: sparse.csr_matrix,
        background: np.ndarray,
        cfg: SmoothingConfig,
    ) -> None:
        self._source_vocab = source_vocab
        self._projection = projection
        self._background = background
        self._alpha = cfg.alpha

    def __call__(self, chunk: Sequence[DocumentVector]) -> sparse.csr_matrix:
        indptr = [0]
        indices: list[int] = []
        data: list[float] = []
        for doc in chunk:
            for token, tf in doc.entries.items():
                source_id = self._source_vocab.get(token)
                if source_id is None:
                    continue
                indices.append(source_id)
                data.append(tf / doc.length)
            indptr.append(len(indices))
        rows = sparse.csr_matrix(
            (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int64),
             np.asarray(indptr, dtype=np.int64)),
            shape=(len(chunk), len(self._source_vocab)),
        )
        translated = (rows @ self._projection).tocsr()
        translated.data[translated.data < TRANSLATION_FLOOR] = 0.0
        translated.eliminate_zeros()
        bg = self._background[translated.indices]
        translated.data = np.log1p(((1.0 - self._alpha) * translated.data) / (self._alpha * bg))
        translated.eliminate_zeros()
        translated.sort_indices()
        return translated


def _chunks(items: Iterable[DocumentVector], size: int) -> Iterator[list[DocumentVector]]:
    iterator = iter(items)
    while chunk := list(islice(iterator, size)):
        yield chunk


def build_index(
    docs: Iterable[tuple[str, TokenSequence]],
    table: TranslationTable,
    lm: UnigramLM,
    cfg: SmoothingConfig,
    chunk_size: int = 1000,
    *,
    workers: int = 1,
    pruning: PruningConfig | None = None,
    tokenizer: TokenizerConfig | None = None,
    query_tokenizer: TokenizerConfig | None = None,
    built_at: str | None = None,
) -> InvertedIndex:
    """Build the PSQ inverted index.

    Document ordinals follow input order. The serialized result does not depend on
    ``chunk_size`` or ``workers``: each document row is computed independently and the
    chunks are stacked in ordinal order.
    """

    if chunk_size < 1:
        raise ValueError("chunk_size must be at least 1")
    source_vocab = Vocabulary.sorted(table.source_vocab)
    target_vocab = Vocabulary.sorted(table.target_vocab)
    projection = translation_matrix(table, source_vocab, target_vocab)
    background = np.asarray([lm.lookup(token) for token in target_vocab], dtype=np.float64)
    weigh = _ChunkWeigher(source_vocab, projection, background, cfg)

    doc_ids: list[str] = []
    seen: set[str] = set()

    def checked() -> Iterator[DocumentVector]:
        for doc in vectorize_documents(docs):
            if doc.doc_id in seen:
                raise ValueError(f"duplicate document id {doc.doc_id!r}")
            seen.add(doc.doc_id)
            doc_ids.append(doc.doc_id)
            yield doc

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(weigh, _chunks(checked(), chunk_size)))
    else:
        blocks = [weigh(chunk) for chunk in _chunks(checked(), chunk_size)]
    if not doc_ids:
        raise ValueError("document stream cannot be empty")

    stacked = sparse.vstack(blocks, format="csr") if len(blocks) > 1 else blocks[0]
    matrix = sparse.csc_matrix(stacked)
    matrix.sort_indices()
    keep = np.flatnonzero(np.diff(matrix.indptr) > 0)
    matrix = sparse.csc_matrix(matrix[:, keep])
    matrix.sort_indices()
    query_vocab = Vocabulary(target_vocab[int(token_id)] for token_id in keep)

    metadata: dict[str, Any] = {
        "alpha": cfg.alpha,
        "pruning": pruning.model_dump(mode="json") if pruning is not None else None,
        "tokenizer": tokenizer.model_dump(mode="json") if tokenizer is not None else None,
        "query_tokenizer": (
            query_tokenizer.model_dump(mode="json") if query_tokenizer is not None else None
        ),
        "lm_floor": lm.floor,
        "built_at": built_at or dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"),
    }
    index = InvertedIndex(
        query_vocab=query_vocab, doc_ids=tuple(doc_ids), matrix=matrix, metadata=metadata
    )
    logger.info(
        "Built index: %d documents, %d query tokens, %d postings",
        index.num_docs, len(query_vocab), index.total_postings,
    )
    return index


def index_statistics(index: InvertedIndex, source_postings: int = 0) -> dict[str, float]:
    """Postings-list shape, plus the expansion over a document-language index.

    ``source_postings`` counts distinct (document, token) pairs before translation; the
    ratio is left out when it is zero.
    """

    lengths = np.diff(index.matrix.indptr)
    stats: dict[str, float] = {
        "documents": index.num_docs,
        "query_vocab": len(index.query_vocab),
        "total_postings": index.total_postings,
        "mean_postings": float(lengths.mean()) if lengths.size else 0.0,
        "max_postings": int(lengths.max()) if lengths.size else 0,
    }
    if source_postings:
        stats["expansion_ratio"] = index.total_postings / source_postings
    return stats


def read_documents(
    path: str | Path, cfg: TokenizerConfig
) -> Iterator[tuple[str, TokenSequence]]:
    """Stream ``{"id": ..., "text": ...}`` JSON lines as tokenized documents."""

    name = str(path)
    with open(path, encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", name, line_number) from exc
            if not isinstance(record, dict):
                raise ParseError("expected a JSON object", name, line_number)
            doc_id, text = record.get("id"), record.get("text")
            if not isinstance(doc_id, str) or not isinstance(text, str):
                raise ParseError("fields 'id' and 'text' must be strings", name, line_number)
            yield doc_id, tokenize(text, cfg)
