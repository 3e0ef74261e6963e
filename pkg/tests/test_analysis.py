"""Sweep artifact tests."""

import csv
import json

from psq.analysis import (
    POINT_COLUMNS,
    emit_analysis,
    find_unpruned,
    frontier_gap,
    heatmap_frame,
    single_knob_series,
    subgrid_points,
)
from psq.pruning import PruningConfig
from psq.sweep import SweepGrid, SweepPoint, pareto_frontier


def synthetic_points() -> list[SweepPoint]:
    """One point per default grid cell with sizes that grow as pruning loosens."""

    points = []
    for _, cfg in SweepGrid.default().cells():
        top_k = cfg.top_k if cfg.top_k is not None else 256
        postings = 1 + int(top_k * cfg.cdf_max * 10) + int((0.05 - cfg.pmf_min) * 1000)
        metric = min(1.0, postings / 3000)
        points.append(SweepPoint(cfg, index_bytes=100 + 12 * postings, total_postings=postings,
                                 map=metric / 2, r_at_100=metric, build_seconds=0.01))
    return points


def read_tsv(path):
    with open(path, encoding="utf-8", newline="") as handle:
        return list(csv.reader(handle, delimiter="\t"))


def test_points_csv_has_one_row_per_point(tmp_path):
    """480 points give a header plus 480 rows with the fixed columns."""

    points = synthetic_points()
    emit_analysis(points, pareto_frontier(points), tmp_path)
    lines = (tmp_path / "points.csv").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 481
    assert lines[0] == ",".join(POINT_COLUMNS)


def test_frontier_rows_are_subset_of_points(tmp_path):
    """Every frontier row also appears in points.csv."""

    points = synthetic_points()
    emit_analysis(points, pareto_frontier(points), tmp_path)
    all_rows = set((tmp_path / "points.csv").read_text(encoding="utf-8").splitlines()[1:])
    frontier_rows = (tmp_path / "frontier.csv").read_text(encoding="utf-8").splitlines()[1:]
    assert frontier_rows
    assert set(frontier_rows) <= all_rows


def test_topk_by_cdf_heatmap_dimensions(tmp_path):
    """Eight top-k rows by ten CDF columns for every statistic."""

    points = synthetic_points()
    emit_analysis(points, pareto_frontier(points), tmp_path)
    for statistic in ("map", "r_at_100", "index_bytes", "total_postings"):
        rows = read_tsv(tmp_path / f"heatmap_topk_cdf_{statistic}.tsv")
        assert len(rows) == 1 + 8
        assert all(len(row) == 1 + 10 for row in rows)
        assert [row[0] for row in rows[1:]] == ["2", "4", "8", "16", "32", "64", "128", "inf"]
        assert all(cell != "" for row in rows[1:] for cell in row[1:])


def test_heatmap_holds_third_knob_loosest():
    """The held knob sits at its least restrictive grid value."""

    points = synthetic_points()
    frame = heatmap_frame(points, "pmf", "topk", "total_postings")
    unpruned = find_unpruned(points)
    assert frame.loc["0", "inf"] == unpruned.total_postings
    assert frame.shape == (6, 8)


def test_knob_series_relative_to_unpruned():
    """Each knob varies alone and ratios are taken against the unpruned cell."""

    points = synthetic_points()
    rows = single_knob_series(points)
    by_knob = {knob: [row for row in rows if row.knob == knob] for knob in ("pmf", "topk", "cdf")}
    assert len(by_knob["pmf"]) == 6
    assert len(by_knob["topk"]) == 8
    assert len(by_knob["cdf"]) == 10
    for series in by_knob.values():
        assert series[0].relative_bytes == 1.0
        assert all(row.relative_bytes <= 1.0 for row in series)


def test_frontier_gap():
    """Gap is the metric lost at matched size budgets."""

    full = [SweepPoint(PruningConfig(top_k=1), 10, 1, 0.1, 0.5),
            SweepPoint(PruningConfig(top_k=2), 20, 2, 0.1, 0.8)]
    sub = [SweepPoint(PruningConfig(top_k=3), 15, 1, 0.1, 0.6)]
    gap = frontier_gap(full, sub)
    assert gap.unmatched == 1
    assert gap.matched == 1
    assert abs(gap.max_gap - 0.2) < 1e-12
    assert frontier_gap(full, full).max_gap == 0.0


def test_subgrid_gap_and_summary_files(tmp_path):
    """The CDF=1 sub-grid gap and the run summary are written as JSON."""

    points = synthetic_points()
    written = emit_analysis(points, pareto_frontier(points), tmp_path, subgrid_cdf=1.0)
    assert tmp_path / "frontier_gap.json" in written
    gap = json.loads((tmp_path / "frontier_gap.json").read_text(encoding="utf-8"))
    assert gap["max_gap"] >= 0.0
    summary = json.loads((tmp_path / "summary.json").read_text(encoding="utf-8"))
    assert summary["points"] == 480
    assert summary["unpruned"]["total_postings"] == max(p.total_postings for p in points)
    assert len(subgrid_points(points, 1.0)) == 48


def test_series_files_exist(tmp_path):
    """Plot-ready series are written as TSV."""

    points = synthetic_points()
    result = pareto_frontier(points)
    emit_analysis(points, result, tmp_path)
    series = read_tsv(tmp_path / "frontier_series.tsv")
    assert series[0] == ["size", "metric", "config"]
    assert len(series) == 1 + len(result.frontier)
    knob_rows = read_tsv(tmp_path / "knob_series.tsv")
    assert knob_rows[0][0] == "knob"
    assert len(knob_rows) == 1 + 6 + 8 + 10
