"""Translation-table pruning by PMF floor, CDF cutoff and top-k cap.

Each of the three criteria keeps a prefix of a source token's descending-sorted
translation list, so applying them together simply keeps the shortest of the three
prefixes. The result is independent of the order in which criteria are considered.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from psq.alignment import TranslationTable


class PruningConfig(BaseModel):
    """Combined pruning criteria; ``top_k=None`` means unbounded."""

    model_config = ConfigDict(frozen=True)

    pmf_min: float = Field(default=0.0, ge=0.0, le=1.0, description="Minimum probability kept")
    cdf_max: float = Field(default=1.0, gt=0.0, le=1.0, description="Cumulative mass to reach")
    top_k: int | None = Field(default=None, description="Maximum translations per source")
    renormalize: bool = Field(default=False, description="Rescale kept entries to sum to one")

    @field_validator("top_k", mode="before")
    @classmethod
    def validate_top_k(cls, value: Any) -> int | None:
        if value is None:
            return None
        if isinstance(value, str):
            if value.strip().lower() in {"inf", "infinity", "none", "unbounded"}:
                return None
            value = int(value)
        if isinstance(value, float):
            if math.isinf(value):
                return None
            if not value.is_integer():
                raise ValueError("top_k must be an integer or 'inf'")
            value = int(value)
        if value < 1:
            raise ValueError("top_k must be at least 1 when bounded")
        return value

    @property
    def is_identity(self) -> bool:
        return (
            self.pmf_min == 0.0 and self.cdf_max == 1.0 and self.top_k is None
            and not self.renormalize
        )

    @property
    def top_k_label(self) -> str:
        return "inf" if self.top_k is None else str(self.top_k)

    @property
    def label(self) -> str:
        text = f"pmf={self.pmf_min:g},cdf={self.cdf_max:g},topk={self.top_k_label}"
        return f"{text},renorm" if self.renormalize else text


def combine_configs(first: PruningConfig, second: PruningConfig) -> PruningConfig:
    """The single config equivalent to pruning with ``first`` and then ``second``."""

    if first.top_k is None:
        top_k = second.top_k
    elif second.top_k is None:
        top_k = first.top_k
    else:
        top_k = min(first.top_k, second.top_k)
    return PruningConfig(
        pmf_min=max(first.pmf_min, second.pmf_min),
        cdf_max=min(first.cdf_max, second.cdf_max),
        top_k=top_k,
        renormalize=first.renormalize or second.renormalize,
    )


def kept_length(probabilities: Sequence[float], cfg: PruningConfig) -> int:
    """Length of the prefix that survives ``cfg`` for one descending-sorted list.

    The CDF prefix is the shortest whose running sum reaches ``cdf_max`` exactly; a list
    whose total falls short is kept whole.
    """

    probs = np.asarray(probabilities, dtype=np.float64)
    size = len(probs)
    length_pmf = int(np.count_nonzero(probs >= cfg.pmf_min))

    length_cdf = size
    if cfg.cdf_max < 1.0:
        position = int(np.searchsorted(np.cumsum(probs), cfg.cdf_max, side="left"))
        length_cdf = min(position + 1, size)

    length_topk = size if cfg.top_k is None else cfg.top_k
    return min(length_pmf, length_cdf, length_topk)


def prune(table: TranslationTable, cfg: PruningConfig) -> TranslationTable:
    """Keep the shortest qualifying prefix of every translation list.

    Source tokens left with nothing are removed; with ``renormalize`` the kept
    probabilities are divided by their sum.
    """

    entries = {}
    for source, translations in table.entries.items():
        length = kept_length([prob for _, prob in translations], cfg)
        if length == 0:
            continue
        kept = translations[:length]
        if cfg.renormalize:
            total = math.fsum(prob for _, prob in kept)
            kept = tuple((target, prob / total) for target, prob in kept)
        entries[source] = kept
    return TranslationTable(entries)


@dataclass(frozen=True)
class PruneReport:
    """Before/after sizes of a pruned table."""

    sources_before: int
    sources_after: int
    entries_before: int
    entries_after: int
    mean_translations_before: float
    mean_translations_after: float
    max_translations_before: int
    max_translations_after: int
    retained_mass: float

    def to_dict(self) -> dict[str, float]:
        return asdict(self)


def prune_stats(before: TranslationTable, after: TranslationTable) -> PruneReport:
    """Compare a table with its pruned version.

    ``retained_mass`` is the share of the original probability mass whose (source, target)
    pairs survive; it is measured on the original probabilities, so renormalization does
    not hide what was cut.
    """

    total_before = math.fsum(prob for items in before.entries.values() for _, prob in items)
    kept_mass = 0.0
    for source, items in after.entries.items():
        original = dict(before.translations(source))
        kept_mass += math.fsum(original.get(target, 0.0) for target, _ in items)

    def fan_out(table: TranslationTable) -> list[int]:
        return [len(items) for items in table.entries.values()]

    counts_before, counts_after = fan_out(before), fan_out(after)
    return PruneReport(
        sources_before=len(counts_before),
        sources_after=len(counts_after),
        entries_before=sum(counts_before),
        entries_after=sum(counts_after),
        mean_translations_before=sum(counts_before) / len(counts_before) if counts_before else 0.0,
        mean_translations_after=sum(counts_after) / len(counts_after) if counts_after else 0.0,
        max_translations_before=max(counts_before, default=0),
        max_translations_after=max(counts_after, default=0),
        retained_mass=kept_mass / total_before if total_before > 0 else 0.0,
    )
