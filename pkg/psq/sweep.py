"""Pruning-grid sweeps and Pareto analysis of index size against effectiveness.

Every grid cell prunes the same translation table, builds an index, runs the queries
and evaluates them. The default grid crosses six PMF floors, eight top-k caps and ten
CDF cutoffs (480 cells).
"""

from __future__ import annotations

import datetime as dt
import json
import logging
import math
import time
from collections.abc import Sequence
from concurrent.futures import FIRST_EXCEPTION, ThreadPoolExecutor, wait
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

from pydantic import AliasChoices, BaseModel, ConfigDict, Field, field_validator

from psq.alignment import TranslationTable
from psq.errors import ParseError, SweepCellError
from psq.evaluation import Qrels, evaluate
from psq.index_io import index_size
from psq.indexer import SmoothingConfig, UnigramLM, build_index
from psq.pruning import PruningConfig, prune
from psq.search import Query, batch_search
from psq.textprep import TokenSequence
from psq.utils.audit import log_event
from psq.utils.store import GridKey, SweepPointStore

logger = logging.getLogger(__name__)

Metric = Literal["map", "r_at_100"]
SizeAxis = Literal["bytes", "postings"]

DEFAULT_PMF = [0.0, 0.05, 0.01, 0.001, 0.0001, 0.00001]
DEFAULT_TOPK: list[int | None] = [2, 4, 8, 16, 32, 64, 128, None]
DEFAULT_CDF = [0.800, 0.900, 0.950, 0.960, 0.965, 0.970, 0.975, 0.980, 0.990, 1.000]


class SweepGrid(BaseModel):
    """Values for each pruning knob; the sweep visits their Cartesian product."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    pmf_values: tuple[float, ...] = Field(
        default=tuple(DEFAULT_PMF), validation_alias=AliasChoices("pmf_values", "pmf")
    )
    topk_values: tuple[int | None, ...] = Field(
        default=tuple(DEFAULT_TOPK), validation_alias=AliasChoices("topk_values", "topk")
    )
    cdf_values: tuple[float, ...] = Field(
        default=tuple(DEFAULT_CDF), validation_alias=AliasChoices("cdf_values", "cdf")
    )
    alpha: float = Field(default=0.5, gt=0.0, lt=1.0)
    renormalize: bool = Field(default=False)

    @field_validator("pmf_values", "cdf_values", "topk_values", mode="before")
    @classmethod
    def validate_nonempty(cls, values: object) -> object:
        if not isinstance(values, list | tuple) or len(values) == 0:
            raise ValueError("each knob needs at least one value")
        return values

    @field_validator("topk_values", mode="before")
    @classmethod
    def validate_topk(cls, values: Sequence[object]) -> tuple[int | None, ...]:
        return tuple(PruningConfig(top_k=value).top_k for value in values)

    @field_validator("pmf_values")
    @classmethod
    def validate_pmf(cls, values: tuple[float, ...]) -> tuple[float, ...]:
        for value in values:
            PruningConfig(pmf_min=value)
        return values

    @field_validator("cdf_values")
    @classmethod
    def validate_cdf(cls, values: tuple[float, ...]) -> tuple[float, ...]:
        for value in values:
            PruningConfig(cdf_max=value)
        return values

    @classmethod
    def default(cls, alpha: float = 0.5) -> SweepGrid:
        return cls(alpha=alpha)

    @classmethod
    def from_file(cls, path: str | Path) -> SweepGrid:
        """Load a JSON grid with arrays ``pmf``, ``topk`` (ints or "inf"), ``cdf`` and
        scalar ``alpha``."""

        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid grid JSON: {exc.msg}", str(path), exc.lineno) from exc
        if not isinstance(payload, dict):
            raise ParseError("grid file must hold a JSON object", str(path))
        return cls.model_validate(payload)

    def cells(self) -> list[tuple[GridKey, PruningConfig]]:
        """Grid cells in (pmf, topk, cdf) order."""

        return [
            (
                (i, j, k),
                PruningConfig(
                    pmf_min=pmf, cdf_max=cdf, top_k=top_k, renormalize=self.renormalize
                ),
            )
            for i, pmf in enumerate(self.pmf_values)
            for j, top_k in enumerate(self.topk_values)
            for k, cdf in enumerate(self.cdf_values)
        ]

    def __len__(self) -> int:
        return len(self.pmf_values) * len(self.topk_values) * len(self.cdf_values)


@dataclass(frozen=True)
class SweepPoint:
    """Index size and effectiveness of one pruning configuration."""

    config: PruningConfig
    index_bytes: int
    total_postings: int
    map: float
    r_at_100: float
    build_seconds: float = 0.0

    def __post_init__(self) -> None:
        if self.index_bytes <= 0:
            raise ValueError("index_bytes must be positive")
        for name in ("map", "r_at_100"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")

    def metric(self, name: Metric) -> float:
        if name == "map":
            return self.map
        if name == "r_at_100":
            return self.r_at_100
        raise ValueError(f"unknown metric {name!r}")

    def size(self, axis: SizeAxis) -> int:
        if axis == "bytes":
            return self.index_bytes
        if axis == "postings":
            return self.total_postings
        raise ValueError(f"unknown size axis {axis!r}")


def run_sweep(
    documents: Sequence[tuple[str, TokenSequence]],
    table: TranslationTable,
    lm: UnigramLM,
    grid: SweepGrid,
    queries: Sequence[Query],
    qrels: Qrels,
    *,
    chunk_size: int = 1000,
    depth: int = 1000,
    workers: int = 1,
    recall_cutoff: int = 100,
    built_at: str | None = None,
) -> list[SweepPoint]:
    """Build and evaluate one index per grid cell; points come back in grid order."""

    if len(grid) == 0:
        raise ValueError("grid cannot be empty")
    if workers < 1:
        raise ValueError("workers must be at least 1")
    documents = list(documents)
    smoothing = SmoothingConfig(alpha=grid.alpha)
    stamp = built_at or dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")
    store: SweepPointStore[SweepPoint] = SweepPointStore()

    def run_cell(key: GridKey, cfg: PruningConfig) -> None:
        started = time.perf_counter()
        try:
            index = build_index(
                documents, prune(table, cfg), lm, smoothing, chunk_size,
                pruning=cfg, built_at=stamp,
            )
            index_bytes, total_postings = index_size(index)
            report = evaluate(batch_search(index, queries, depth), qrels, recall_cutoff)
        except Exception as exc:  # noqa: BLE001
            raise SweepCellError(cfg, exc) from exc
        point = SweepPoint(
            config=cfg,
            index_bytes=index_bytes,
            total_postings=total_postings,
            map=report.map,
            r_at_100=report.recall,
            build_seconds=time.perf_counter() - started,
        )
        store.save(key, point)
        log_event(
            "sweep.cell",
            {"config": cfg.label, "postings": total_postings, "map": round(report.map, 4),
             "r_at_100": round(report.recall, 4)},
        )

    cells = grid.cells()
    if workers == 1:
        for key, cfg in cells:
            run_cell(key, cfg)
    else:
        pool = ThreadPoolExecutor(max_workers=workers)
        try:
            futures = [pool.submit(run_cell, key, cfg) for key, cfg in cells]
            done, _ = wait(futures, return_when=FIRST_EXCEPTION)
            for future in futures:
                if future in done and future.exception() is not None:
                    raise future.exception()  # type: ignore[misc]
        finally:
            pool.shutdown(wait=True, cancel_futures=True)

    points = store.ordered()
    log_event("sweep.done", {"cells": len(points)})
    return points


@dataclass(frozen=True)
class ParetoResult:
    frontier: tuple[SweepPoint, ...]
    dominated: tuple[SweepPoint, ...]


def dominates(q: SweepPoint, p: SweepPoint, metric: Metric, size_axis: SizeAxis) -> bool:
    """True when ``q`` is no larger and no worse than ``p`` and better in one of them."""

    q_size, p_size = q.size(size_axis), p.size(size_axis)
    q_metric, p_metric = q.metric(metric), p.metric(metric)
    return (
        q_size <= p_size and q_metric >= p_metric and (q_size < p_size or q_metric > p_metric)
    )


def pareto_frontier(
    points: Sequence[SweepPoint], metric: Metric = "r_at_100", size_axis: SizeAxis = "bytes"
) -> ParetoResult:
    """Split points into the non-dominated frontier (smallest size first) and the rest.

    Points tied on both size and metric are all kept.
    """

    if not points:
        raise ValueError("points cannot be empty")
    order = sorted(range(len(points)), key=lambda i: (points[i].size(size_axis), i))
    on_frontier = [False] * len(points)
    best_smaller = -math.inf
    position = 0
    while position < len(order):
        size = points[order[position]].size(size_axis)
        group = []
        while position < len(order) and points[order[position]].size(size_axis) == size:
            group.append(order[position])
            position += 1
        group_best = max(points[i].metric(metric) for i in group)
        for i in group:
            value = points[i].metric(metric)
            on_frontier[i] = value == group_best and value > best_smaller
        best_smaller = max(best_smaller, group_best)

    frontier = tuple(points[i] for i in order if on_frontier[i])
    dominated = tuple(point for i, point in enumerate(points) if not on_frontier[i])
    return ParetoResult(frontier=frontier, dominated=dominated)


def microaverage_points(
    collections: Sequence[tuple[Sequence[SweepPoint], float]],
) -> list[SweepPoint]:
    """Merge per-collection sweeps into one point per shared configuration.

    Metrics are topic-weighted means and sizes are summed, so the frontier of the result
    describes a pruning setting applied to every collection at once.
    """

    if not collections:
        raise ValueError("collections cannot be empty")
    total_weight = math.fsum(weight for _, weight in collections)
    if total_weight <= 0:
        raise ValueError("topic weights must sum to a positive number")
    by_config = [{point.config: point for point in points} for points, _ in collections]
    shared = [
        point.config for point in collections[0][0]
        if all(point.config in mapping for mapping in by_config)
    ]
    merged = []
    for cfg in shared:
        members = [
            (mapping[cfg], weight)
            for mapping, (_, weight) in zip(by_config, collections, strict=True)
        ]
        merged.append(
            SweepPoint(
                config=cfg,
                index_bytes=sum(point.index_bytes for point, _ in members),
                total_postings=sum(point.total_postings for point, _ in members),
                map=math.fsum(w * point.map for point, w in members) / total_weight,
                r_at_100=math.fsum(w * point.r_at_100 for point, w in members) / total_weight,
                build_seconds=math.fsum(point.build_seconds for point, _ in members),
            )
        )
    return merged
