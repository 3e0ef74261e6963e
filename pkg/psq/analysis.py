"""Sweep artifacts: point tables, knob heatmaps, frontier series and summaries.

Tables are assembled with pandas and written as CSV/TSV so they load straight into a
plotting notebook. Heatmaps pivot one statistic over a pair of pruning knobs with the
third knob held at its least restrictive grid value.
"""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass
from pathlib import Path

import pandas as pd

from psq.sweep import Metric, ParetoResult, SizeAxis, SweepPoint, pareto_frontier
from psq.utils.audit import log_event

logger = logging.getLogger(__name__)

POINT_COLUMNS = [
    "pmf", "cdf", "topk", "renormalize", "index_bytes", "total_postings", "map", "r_at_100",
    "build_seconds",
]
HEATMAP_STATISTICS = ["map", "r_at_100", "index_bytes", "total_postings"]
# (row knob, column knob, held knob)
KNOB_PAIRS = [("pmf", "topk", "cdf"), ("pmf", "cdf", "topk"), ("topk", "cdf", "pmf")]


def _knob_value(point: SweepPoint, knob: str) -> float:
    """Numeric knob value; an unbounded top-k sorts as infinity."""

    cfg = point.config
    if knob == "pmf":
        return cfg.pmf_min
    if knob == "cdf":
        return cfg.cdf_max
    if knob == "topk":
        return math.inf if cfg.top_k is None else float(cfg.top_k)
    raise ValueError(f"unknown knob {knob!r}")


def _knob_label(point: SweepPoint, knob: str) -> str:
    if knob == "topk":
        return point.config.top_k_label
    return f"{_knob_value(point, knob):g}"


# value at which each knob prunes nothing
_IDENTITY = {"pmf": 0.0, "cdf": 1.0, "topk": math.inf}


def _least_restrictive(points: Sequence[SweepPoint], knob: str) -> float:
    values = {_knob_value(point, knob) for point in points}
    return min(values) if knob == "pmf" else max(values)


def points_frame(points: Sequence[SweepPoint]) -> pd.DataFrame:
    """One row per sweep point, columns in the fixed ``points.csv`` order."""

    rows = [
        {
            "pmf": point.config.pmf_min,
            "cdf": point.config.cdf_max,
            "topk": point.config.top_k_label,
            "renormalize": point.config.renormalize,
            "index_bytes": point.index_bytes,
            "total_postings": point.total_postings,
            "map": point.map,
            "r_at_100": point.r_at_100,
            "build_seconds": point.build_seconds,
        }
        for point in points
    ]
    return pd.DataFrame(rows, columns=POINT_COLUMNS)


def heatmap_frame(points: Sequence[SweepPoint], row_knob: str, col_knob: str,
                  statistic: str) -> pd.DataFrame:
    """Pivot ``statistic`` over two knobs, holding the third at its loosest grid value."""

    held_knob = next(k for k in ("pmf", "topk", "cdf") if k not in (row_knob, col_knob))
    held = _least_restrictive(points, held_knob)
    selected = [point for point in points if _knob_value(point, held_knob) == held]
    rows = sorted({_knob_value(p, row_knob): _knob_label(p, row_knob) for p in selected}.items())
    cols = sorted({_knob_value(p, col_knob): _knob_label(p, col_knob) for p in selected}.items())
    cells = {
        (_knob_value(p, row_knob), _knob_value(p, col_knob)): getattr(p, statistic)
        for p in selected
    }
    frame = pd.DataFrame(
        [[cells.get((r, c)) for c, _ in cols] for r, _ in rows],
        index=pd.Index([label for _, label in rows], name=f"{row_knob}\\{col_knob}"),
        columns=[label for _, label in cols],
    )
    return frame


@dataclass(frozen=True)
class KnobSeriesRow:
    """One point of a single-knob sweep, relative to the unpruned cell."""

    knob: str
    value: str
    index_bytes: int
    total_postings: int
    map: float
    r_at_100: float
    relative_bytes: float
    relative_map: float | None
    relative_r_at_100: float | None


def find_unpruned(points: Sequence[SweepPoint]) -> SweepPoint | None:
    for point in points:
        if all(_knob_value(point, knob) == value for knob, value in _IDENTITY.items()):
            return point
    return None


def single_knob_series(
    points: Sequence[SweepPoint], baseline: SweepPoint | None = None
) -> list[KnobSeriesRow]:
    """Vary one knob with the other two at their identity values.

    Rows are grouped by knob and ordered from the loosest setting to the tightest.
    Relative metrics are ``None`` when the unpruned metric is zero.
    """

    baseline = baseline or find_unpruned(points)
    if baseline is None:
        raise ValueError("sweep has no unpruned cell to compare against")

    def ratio(value: float, reference: float) -> float | None:
        return value / reference if reference > 0 else None

    rows: list[KnobSeriesRow] = []
    for knob in ("pmf", "topk", "cdf"):
        others = [k for k in _IDENTITY if k != knob]
        series = [
            point for point in points
            if all(_knob_value(point, other) == _IDENTITY[other] for other in others)
        ]
        descending = knob != "pmf"
        series.sort(key=lambda point: _knob_value(point, knob), reverse=descending)
        for point in series:
            rows.append(
                KnobSeriesRow(
                    knob=knob,
                    value=_knob_label(point, knob),
                    index_bytes=point.index_bytes,
                    total_postings=point.total_postings,
                    map=point.map,
                    r_at_100=point.r_at_100,
                    relative_bytes=point.index_bytes / baseline.index_bytes,
                    relative_map=ratio(point.map, baseline.map),
                    relative_r_at_100=ratio(point.r_at_100, baseline.r_at_100),
                )
            )
    return rows


@dataclass(frozen=True)
class FrontierGap:
    max_gap: float
    matched: int
    unmatched: int


def frontier_gap(
    full_frontier: Sequence[SweepPoint],
    sub_frontier: Sequence[SweepPoint],
    metric: Metric = "r_at_100",
    size_axis: SizeAxis = "bytes",
) -> FrontierGap:
    """Largest metric loss from using only the sub-grid at each full-frontier size budget.

    For every full-frontier point the best sub-frontier point no larger than it is found;
    budgets below the smallest sub-frontier point are counted as unmatched.
    """

    max_gap = 0.0
    matched = unmatched = 0
    for point in full_frontier:
        budget = point.size(size_axis)
        candidates = [q.metric(metric) for q in sub_frontier if q.size(size_axis) <= budget]
        if not candidates:
            unmatched += 1
            continue
        matched += 1
        max_gap = max(max_gap, point.metric(metric) - max(candidates))
    return FrontierGap(max_gap=max_gap, matched=matched, unmatched=unmatched)


def subgrid_points(points: Sequence[SweepPoint], cdf_max: float = 1.0) -> list[SweepPoint]:
    """Points of the PMF x top-k sub-grid at one CDF setting."""

    return [point for point in points if point.config.cdf_max == cdf_max]


def _write_frame(frame: pd.DataFrame, path: Path, sep: str, index: bool = False) -> None:
    try:
        frame.to_csv(path, sep=sep, index=index, lineterminator="\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def emit_analysis(
    points: Sequence[SweepPoint],
    frontier: ParetoResult,
    out_dir: str | Path,
    *,
    metric: Metric = "r_at_100",
    size_axis: SizeAxis = "bytes",
    subgrid_cdf: float | None = None,
) -> list[Path]:
    """Write every sweep artifact into ``out_dir``; returns the written paths."""

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def emit(frame: pd.DataFrame, name: str, sep: str = ",", index: bool = False) -> None:
        path = out / name
        _write_frame(frame, path, sep, index)
        written.append(path)

    emit(points_frame(points), "points.csv")
    emit(points_frame(frontier.frontier), "frontier.csv")

    for row_knob, col_knob, _ in KNOB_PAIRS:
        for statistic in HEATMAP_STATISTICS:
            emit(heatmap_frame(points, row_knob, col_knob, statistic),
                 f"heatmap_{row_knob}_{col_knob}_{statistic}.tsv", sep="\t", index=True)

    series = pd.DataFrame(
        [
            {"size": point.size(size_axis), "metric": point.metric(metric),
             "config": point.config.label}
            for point in frontier.frontier
        ],
        columns=["size", "metric", "config"],
    )
    emit(series, "frontier_series.tsv", sep="\t")

    baseline = find_unpruned(points)
    if baseline is not None:
        knob_rows = pd.DataFrame(
            [asdict(row) for row in single_knob_series(points, baseline)],
            columns=list(KnobSeriesRow.__dataclass_fields__),
        )
        emit(knob_rows, "knob_series.tsv", sep="\t")
    else:
        logger.warning("No unpruned cell in the sweep; knob_series.tsv not written")

    summary: dict[str, object] = {
        "points": len(points),
        "frontier_size": len(frontier.frontier),
        "metric": metric,
        "size_axis": size_axis,
        "unpruned": None,
    }
    if baseline is not None:
        summary["unpruned"] = {
            "index_bytes": baseline.index_bytes,
            "total_postings": baseline.total_postings,
            "map": baseline.map,
            "r_at_100": baseline.r_at_100,
        }

    if subgrid_cdf is not None:
        sub_points = subgrid_points(points, subgrid_cdf)
        if sub_points:
            sub = pareto_frontier(sub_points, metric, size_axis)
            gap = frontier_gap(frontier.frontier, sub.frontier, metric, size_axis)
            gap_path = out / "frontier_gap.json"
            payload = {"subgrid_cdf": subgrid_cdf, **asdict(gap)}
            gap_path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
            written.append(gap_path)
            summary["frontier_gap"] = gap.max_gap
        else:
            logger.warning("No sweep points at cdf=%g; frontier gap skipped", subgrid_cdf)

    summary_path = out / "summary.json"
    summary_path.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    written.append(summary_path)
    log_event("sweep.analysis", {"out_dir": str(out), "files": len(written)})
    return written
