"""Text normalization shared by parallel-text ingestion, indexing and query processing.

Translation tables only line up with an index when both sides were produced by the same
pipeline, so every reader in the toolkit funnels text through :func:`tokenize` with an
explicit :class:`TokenizerConfig`. The stages run in a fixed order:

1. split on Unicode whitespace
2. lowercase
3. strip diacritics (canonical-compatibility decomposition, combining marks removed)
4. strip punctuation (Unicode categories ``P*``)
5. drop stopwords

Chinese and other unsegmented scripts are expected to arrive pre-segmented.
"""

from __future__ import annotations

import logging
import unicodedata
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator

from psq.errors import ParseError

logger = logging.getLogger(__name__)


class TokenizerConfig(BaseModel):
    """Switches for the normalization pipeline."""

    model_config = ConfigDict(frozen=True)

    lowercase: bool = Field(default=True, description="Lowercase every token")
    strip_diacritics: bool = Field(default=True, description="Remove combining marks")
    strip_punctuation: bool = Field(default=True, description="Remove punctuation characters")
    stopword_list: frozenset[str] = Field(
        default_factory=frozenset, description="Tokens dropped after normalization"
    )
    language_tag: str = Field(default="und", description="Free-form language label")

    @field_validator("stopword_list", mode="before")
    @classmethod
    def validate_stopwords(cls, value: object) -> frozenset[str]:
        if value is None:
            return frozenset()
        words = frozenset(str(word).strip() for word in value)  # type: ignore[attr-defined]
        return frozenset(word for word in words if word)

    @field_serializer("stopword_list")
    def serialize_stopwords(self, value: frozenset[str]) -> list[str]:
        return sorted(value)


@dataclass(frozen=True)
class TokenSequence:
    """Ordered tokens; never empty strings, never containing whitespace."""

    tokens: tuple[str, ...]

    def __post_init__(self) -> None:
        for token in self.tokens:
            if not token:
                raise ValueError("tokens cannot be empty strings")
            if any(char.isspace() for char in token):
                raise ValueError(f"token {token!r} contains whitespace")

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):  # type: ignore[no-untyped-def]
        return iter(self.tokens)

    @classmethod
    def from_text(cls, text: str) -> TokenSequence:
        """Whitespace split with no normalization, for already-tokenized input."""

        return cls(tuple(text.split()))


def _strip_marks(token: str) -> str:
    decomposed = unicodedata.normalize("NFKD", token)
    kept = "".join(char for char in decomposed if not unicodedata.combining(char))
    # compatibility decomposition can introduce spaces (e.g. U+00A8)
    kept = "".join(char for char in kept if not char.isspace())
    return unicodedata.normalize("NFC", kept)


def _strip_punct(token: str) -> str:
    return "".join(char for char in token if not unicodedata.category(char).startswith("P"))


def _normalize(token: str, cfg: TokenizerConfig) -> str:
    if cfg.lowercase:
        token = token.lower()
    if cfg.strip_diacritics:
        token = _strip_marks(token)
    if cfg.strip_punctuation:
        token = _strip_punct(token)
    return token


@lru_cache(maxsize=64)
def _normalized_stopwords(cfg: TokenizerConfig) -> frozenset[str]:
    # Stopword entries go through the same stages as text so "Café" matches "cafe".
    return frozenset(_normalize(word, cfg) for word in cfg.stopword_list) | cfg.stopword_list


def tokenize(text: str | bytes, cfg: TokenizerConfig) -> TokenSequence:
    """Run the five-stage pipeline over ``text``.

    Bytes are decoded as strict UTF-8; invalid input raises :class:`UnicodeDecodeError`.
    """

    if isinstance(text, bytes):
        text = text.decode("utf-8")
    else:
        # lone surrogates are not valid Unicode text
        text.encode("utf-8")

    stopwords = _normalized_stopwords(cfg) if cfg.stopword_list else frozenset()
    tokens: list[str] = []
    for raw in text.split():
        token = _normalize(raw, cfg)
        if not token or token in stopwords:
            continue
        tokens.append(token)
    return TokenSequence(tuple(tokens))


def load_stopwords(path: str | Path) -> frozenset[str]:
    """Read a stopword file: UTF-8, one token per line, ``#`` lines are comments."""

    words: set[str] = set()
    try:
        content = Path(path).read_bytes().decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"stopword file is not valid UTF-8: {exc}", path=str(path)) from exc
    for line_number, line in enumerate(content.splitlines(), start=1):
        entry = line.strip()
        if not entry or entry.startswith("#"):
            continue
        if len(entry.split()) != 1:
            raise ParseError("expected one token per line", str(path), line_number)
        words.add(entry)
    logger.debug("Loaded %d stopwords from %s", len(words), path)
    return frozenset(words)
