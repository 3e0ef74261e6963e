"""Bit-exact binary serialization of :class:`~psq.indexer.InvertedIndex`.

Layout (all integers little-endian)::

    b"PSQIDX01"
    u64 query vocab count | u64 doc count | u64 total postings
    vocab    : (u32 byte length, UTF-8 token) per token, in id order
    doc ids  : (u32 byte length, UTF-8 id) per document, in ordinal order
    postings : per token, u64 list length then (u32 doc ordinal, f64 weight) pairs,
               weight descending, ties by ordinal ascending
    trailer  : u64 byte length, then JSON metadata (sorted keys, compact separators)
"""

from __future__ import annotations

import io
import json
from pathlib import Path
from typing import Any

import numpy as np
from scipy import sparse

from psq.errors import IndexFormatError
from psq.indexer import InvertedIndex, Vocabulary

MAGIC = b"PSQIDX01"
_U32 = np.dtype("<u4")
_U64 = np.dtype("<u8")
POSTING = np.dtype([("doc", "<u4"), ("weight", "<f8")])


def _metadata_bytes(metadata: dict[str, Any]) -> bytes:
    return json.dumps(
        metadata, sort_keys=True, separators=(",", ":"), ensure_ascii=False
    ).encode("utf-8")


def _write_strings(buffer: io.BytesIO, strings: tuple[str, ...]) -> None:
    for text in strings:
        encoded = text.encode("utf-8")
        buffer.write(np.array([len(encoded)], dtype=_U32).tobytes())
        buffer.write(encoded)


def serialize_index(index: InvertedIndex) -> bytes:
    if index.num_docs >= 2**32:
        raise ValueError("document ordinals must fit in 32 bits")
    buffer = io.BytesIO()
    buffer.write(MAGIC)
    header = [len(index.query_vocab), index.num_docs, index.total_postings]
    buffer.write(np.array(header, dtype=_U64).tobytes())
    _write_strings(buffer, index.query_vocab.tokens)
    _write_strings(buffer, index.doc_ids)

    matrix = index.matrix
    for token_id in range(len(index.query_vocab)):
        start, end = matrix.indptr[token_id], matrix.indptr[token_id + 1]
        rows = matrix.indices[start:end]
        weights = matrix.data[start:end]
        order = np.lexsort((rows, -weights))
        block = np.empty(end - start, dtype=POSTING)
        block["doc"] = rows[order]
        block["weight"] = weights[order]
        buffer.write(np.array([end - start], dtype=_U64).tobytes())
        buffer.write(block.tobytes())

    trailer = _metadata_bytes(index.metadata)
    buffer.write(np.array([len(trailer)], dtype=_U64).tobytes())
    buffer.write(trailer)
    return buffer.getvalue()


class _Reader:
    def __init__(self, data: bytes) -> None:
        self._data = data
        self._offset = 0

    def take(self, size: int, what: str) -> bytes:
        end = self._offset + size
        if size < 0 or end > len(self._data):
            raise IndexFormatError(f"index truncated while reading {what}")
        chunk = self._data[self._offset : end]
        self._offset = end
        return chunk

    def u32(self, what: str) -> int:
        return int(np.frombuffer(self.take(4, what), dtype=_U32)[0])

    def u64(self, what: str) -> int:
        return int(np.frombuffer(self.take(8, what), dtype=_U64)[0])

    def strings(self, count: int, what: str) -> list[str]:
        values = []
        for _ in range(count):
            length = self.u32(what)
            try:
                values.append(self.take(length, what).decode("utf-8"))
            except UnicodeDecodeError as exc:
                raise IndexFormatError(f"{what} entry is not valid UTF-8") from exc
        return values

    @property
    def exhausted(self) -> bool:
        return self._offset == len(self._data)


def deserialize_index(data: bytes) -> InvertedIndex:
    reader = _Reader(data)
    if reader.take(len(MAGIC), "magic") != MAGIC:
        raise IndexFormatError("not a PSQ index (bad magic bytes)")
    vocab_count = reader.u64("header")
    doc_count = reader.u64("header")
    total_postings = reader.u64("header")
    tokens = reader.strings(vocab_count, "vocabulary")
    doc_ids = reader.strings(doc_count, "document ids")
    if len(set(tokens)) != len(tokens):
        raise IndexFormatError("vocabulary contains duplicate tokens")

    indptr = np.zeros(vocab_count + 1, dtype=np.int64)
    row_blocks: list[np.ndarray] = []
    weight_blocks: list[np.ndarray] = []
    for token_id in range(vocab_count):
        length = reader.u64("postings length")
        block = np.frombuffer(
            reader.take(length * POSTING.itemsize, "postings"), dtype=POSTING
        )
        rows = block["doc"].astype(np.int64)
        weights = block["weight"].astype(np.float64)
        if length and (rows.max() >= doc_count or not np.all(weights > 0)):
            raise IndexFormatError(f"invalid posting for token {tokens[token_id]!r}")
        if np.unique(rows).size != rows.size:
            raise IndexFormatError(f"duplicate document in postings of {tokens[token_id]!r}")
        by_row = np.argsort(rows, kind="stable")
        row_blocks.append(rows[by_row])
        weight_blocks.append(weights[by_row])
        indptr[token_id + 1] = indptr[token_id] + length
    if indptr[-1] != total_postings:
        raise IndexFormatError("postings count does not match the header")

    trailer_length = reader.u64("metadata length")
    try:
        metadata = json.loads(reader.take(trailer_length, "metadata").decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise IndexFormatError("metadata trailer is not valid JSON") from exc
    if not reader.exhausted:
        raise IndexFormatError("unexpected bytes after the metadata trailer")

    indices = np.concatenate(row_blocks) if row_blocks else np.zeros(0, dtype=np.int64)
    values = np.concatenate(weight_blocks) if weight_blocks else np.zeros(0, dtype=np.float64)
    matrix = sparse.csc_matrix((values, indices, indptr), shape=(doc_count, vocab_count))
    return InvertedIndex(
        query_vocab=Vocabulary(tokens), doc_ids=tuple(doc_ids), matrix=matrix,
        metadata=metadata,
    )


def save_index(index: InvertedIndex, path: str | Path) -> int:
    """Write the index; returns the number of bytes written."""

    payload = serialize_index(index)
    Path(path).write_bytes(payload)
    return len(payload)


def load_index(path: str | Path) -> InvertedIndex:
    return deserialize_index(Path(path).read_bytes())


def index_size(index: InvertedIndex) -> tuple[int, int]:
    """Exact serialized byte count and total posting count."""

    return len(serialize_index(index)), index.total_postings
