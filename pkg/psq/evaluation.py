"""Mean average precision and recall at a cutoff over TREC-style judgments.

Measures are computed by trec_eval through ``pytrec_eval``. Only topics with at least
one relevant document are evaluated. Unjudged retrieved documents count as
non-relevant. A judged topic with no run scores zero on both measures.
"""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import pytrec_eval

from psq.errors import ParseError
from psq.search import RankedList

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Qrels:
    """Relevance grades keyed by (query_id, doc_id); grades above zero are relevant."""

    judgments: dict[tuple[str, str], int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if any(grade < 0 for grade in self.judgments.values()):
            raise ValueError("relevance grades cannot be negative")

    @property
    def topics(self) -> list[str]:
        return sorted({query_id for query_id, _ in self.judgments})

    def relevant(self, query_id: str) -> set[str]:
        return {
            doc_id for (qid, doc_id), grade in self.judgments.items()
            if qid == query_id and grade > 0
        }

    def relevant_by_topic(self) -> dict[str, set[str]]:
        grouped: dict[str, set[str]] = {}
        for (query_id, doc_id), grade in self.judgments.items():
            docs = grouped.setdefault(query_id, set())
            if grade > 0:
                docs.add(doc_id)
        return grouped

    def graded_by_topic(self) -> dict[str, dict[str, int]]:
        """Nested ``{query_id: {doc_id: grade}}`` form read by trec_eval."""

        nested: dict[str, dict[str, int]] = {}
        for (query_id, doc_id), grade in self.judgments.items():
            nested.setdefault(query_id, {})[doc_id] = grade
        return nested

    def __len__(self) -> int:
        return len(self.judgments)


def load_qrels(path: str | Path) -> Qrels:
    """Read ``query_id 0 doc_id grade`` lines.

    Each line is checked first so malformed input fails with its line number; the
    checked lines are then parsed by ``pytrec_eval.parse_qrel``.
    """

    name = str(path)
    checked: list[str] = []
    seen: set[tuple[str, str]] = set()
    with open(path, encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != 4:
                raise ParseError("expected query_id iteration doc_id grade", name, line_number)
            query_id, _, doc_id, grade_text = fields
            try:
                grade = int(grade_text)
            except ValueError as exc:
                raise ParseError(f"grade {grade_text!r} is not an integer", name,
                                 line_number) from exc
            if grade < 0:
                raise ParseError("grade cannot be negative", name, line_number)
            key = (query_id, doc_id)
            if key in seen:
                raise ParseError(f"duplicate judgment for {key}", name, line_number)
            seen.add(key)
            checked.append(" ".join(fields))
    nested = pytrec_eval.parse_qrel(checked)
    return Qrels({
        (query_id, doc_id): grade
        for query_id, grades in nested.items()
        for doc_id, grade in grades.items()
    })


def _rank_scores(ranking: Sequence[str]) -> dict[str, float]:
    """Strictly decreasing scores that make trec_eval keep ``ranking``'s order.

    trec_eval re-sorts every run by score, so the original scores (and their ties) are
    replaced by positions. A repeated document keeps its first position.
    """

    scores: dict[str, float] = {}
    for position, doc_id in enumerate(ranking):
        scores.setdefault(doc_id, float(len(ranking) - position))
    return scores


def _trec_measures(
    rankings: Mapping[str, Sequence[str]],
    graded: Mapping[str, Mapping[str, int]],
    recall_cutoff: int,
) -> dict[str, tuple[float, float]]:
    """(AP, recall) per judged topic; topics missing from ``rankings`` score zero."""

    recall_key = f"recall_{recall_cutoff}"
    run = {
        query_id: _rank_scores(ranking)
        for query_id, ranking in rankings.items()
        if ranking and query_id in graded
    }
    results: dict[str, dict[str, float]] = {}
    if run:
        evaluator = pytrec_eval.RelevanceEvaluator(
            {query_id: dict(grades) for query_id, grades in graded.items()},
            {"map", f"recall.{recall_cutoff}"},
        )
        results = evaluator.evaluate(run)
    measures = {}
    for query_id in graded:
        values = results.get(query_id)
        measures[query_id] = (values["map"], values[recall_key]) if values else (0.0, 0.0)
    return measures


def average_precision(ranking: Sequence[str], relevant: set[str]) -> float:
    """Precision at each relevant hit, summed and divided by the number of relevant docs."""

    if not relevant:
        raise ValueError("average precision needs at least one relevant document")
    graded = {"q": {doc_id: 1 for doc_id in relevant}}
    return _trec_measures({"q": ranking}, graded, 1)["q"][0]


def recall_at(ranking: Sequence[str], relevant: set[str], cutoff: int) -> float:
    if not relevant:
        raise ValueError("recall needs at least one relevant document")
    if cutoff < 1:
        raise ValueError("cutoff must be at least 1")
    graded = {"q": {doc_id: 1 for doc_id in relevant}}
    return _trec_measures({"q": ranking}, graded, cutoff)["q"][1]


@dataclass(frozen=True)
class TopicScores:
    average_precision: float
    recall: float


@dataclass(frozen=True)
class EvalReport:
    per_topic: dict[str, TopicScores]
    recall_cutoff: int = 100

    @property
    def evaluated_topic_count(self) -> int:
        return len(self.per_topic)

    @property
    def map(self) -> float:
        values = [scores.average_precision for scores in self.per_topic.values()]
        return math.fsum(values) / len(values) if values else 0.0

    @property
    def recall(self) -> float:
        values = [scores.recall for scores in self.per_topic.values()]
        return math.fsum(values) / len(values) if values else 0.0

    def to_dict(self) -> dict[str, object]:
        return {
            "evaluated_topics": self.evaluated_topic_count,
            "recall_cutoff": self.recall_cutoff,
            "map": self.map,
            f"r_at_{self.recall_cutoff}": self.recall,
            "per_topic": {
                query_id: {
                    "ap": scores.average_precision,
                    f"r_at_{self.recall_cutoff}": scores.recall,
                }
                for query_id, scores in sorted(self.per_topic.items())
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)


def evaluate(runs: Iterable[RankedList], qrels: Qrels, recall_cutoff: int = 100) -> EvalReport:
    """Per-topic AP over the full ranking and recall in the top ``recall_cutoff``."""

    if recall_cutoff < 1:
        raise ValueError("recall_cutoff must be at least 1")
    relevant_by_topic = qrels.relevant_by_topic()
    rankings: dict[str, list[str]] = {}
    for ranked in runs:
        if ranked.query_id not in relevant_by_topic:
            logger.warning("Run for query %s has no judgments; skipped", ranked.query_id)
            continue
        if ranked.query_id in rankings:
            logger.warning("Duplicate run for query %s; keeping the first", ranked.query_id)
            continue
        rankings[ranked.query_id] = ranked.doc_ids

    graded = {
        query_id: grades
        for query_id, grades in qrels.graded_by_topic().items()
        if relevant_by_topic[query_id]
    }
    measures = _trec_measures(rankings, graded, recall_cutoff)
    per_topic = {
        query_id: TopicScores(average_precision=ap, recall=recall)
        for query_id, (ap, recall) in sorted(measures.items())
    }
    return EvalReport(per_topic=per_topic, recall_cutoff=recall_cutoff)


@dataclass(frozen=True)
class PooledScores:
    map: float
    recall: float
    topic_count: float


def microaverage(
    reports: Sequence[EvalReport], weights: Sequence[float] | None = None
) -> PooledScores:
    """Topic-weighted mean across collections.

    Weights default to each report's evaluated topic count, which is the same as
    averaging over the pooled topics of every collection.
    """

    if not reports:
        raise ValueError("reports cannot be empty")
    if weights is None:
        weights = [report.evaluated_topic_count for report in reports]
    if len(weights) != len(reports):
        raise ValueError("one weight per report is required")
    total = math.fsum(weights)
    if total <= 0:
        return PooledScores(map=0.0, recall=0.0, topic_count=0.0)
    return PooledScores(
        map=math.fsum(w * r.map for w, r in zip(weights, reports, strict=True)) / total,
        recall=math.fsum(w * r.recall for w, r in zip(weights, reports, strict=True)) / total,
        topic_count=total,
    )


def format_report(report: EvalReport) -> str:
    """Aligned text table: one row per topic, then the means."""

    recall_name = f"R@{report.recall_cutoff}"
    width = max([len("topic"), len("all")] + [len(qid) for qid in report.per_topic])
    lines = [f"{'topic':<{width}}  {'AP':>8}  {recall_name:>8}"]
    for query_id, scores in sorted(report.per_topic.items()):
        lines.append(
            f"{query_id:<{width}}  {scores.average_precision:>8.4f}  {scores.recall:>8.4f}"
        )
    lines.append(f"{'all':<{width}}  {report.map:>8.4f}  {report.recall:>8.4f}")
    lines.append(f"evaluated topics: {report.evaluated_topic_count}")
    return "\n".join(lines)
