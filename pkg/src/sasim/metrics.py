"""Arbitration classification metrics and episode driving metrics.

The positive class is "the human plan is correct"; the prediction is "the
arbiter selected the human plan" (an alternative counts as not-selected).
Under this mapping the always-trust-the-human baseline has accuracy = p,
recall = 100%, and f1 = 2p/(1+p) by algebra, which pins the convention.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

from .arbitration import Choice
from .episode import EpisodeResult
from .errors import EmptyResultSet

COLLISION_SCORE_FACTOR = 0.6  # composite-score penalty for a collided episode


@dataclass
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def add(self, human_correct: bool, selected_human: bool) -> None:
        if human_correct and selected_human:
            self.tp += 1
        elif not human_correct and selected_human:
            self.fp += 1
        elif human_correct and not selected_human:
            self.fn += 1
        else:
            self.tn += 1


def label_trial(human_correct: bool, choice: Choice) -> tuple[bool, bool]:
    """(human_correct, selected_human) pair for one trial."""
    return (human_correct, choice is Choice.HUMAN)


@dataclass(frozen=True)
class ClassificationMetrics:
    accuracy: float
    precision: float | None
    recall: float | None
    f1: float | None

    def rounded(self) -> dict:
        def pct(v):
            return None if v is None else round(v * 100.0, 2)

        return {
            "accuracy": pct(self.accuracy),
            "precision": pct(self.precision),
            "recall": pct(self.recall),
            "f1": pct(self.f1),
        }


def classification_metrics(c: ConfusionCounts) -> ClassificationMetrics:
    if c.total == 0:
        raise EmptyResultSet("no trials to score")
    accuracy = (c.tp + c.tn) / c.total
    precision = c.tp / (c.tp + c.fp) if (c.tp + c.fp) > 0 else None
    recall = c.tp / (c.tp + c.fn) if (c.tp + c.fn) > 0 else None
    if precision is None or recall is None or (precision + recall) == 0:
        f1 = None
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return ClassificationMetrics(accuracy=accuracy, precision=precision, recall=recall, f1=f1)


@dataclass(frozen=True)
class DrivingMetrics:
    collision_rate: float
    route_completion_rate: float
    average_score: float

    def rounded(self) -> dict:
        return {
            "collision_rate": round(self.collision_rate * 100.0, 2),
            "route_completion_rate": round(self.route_completion_rate * 100.0, 2),
            "average_score": round(self.average_score * 100.0, 2),
        }


def episode_score(result: EpisodeResult) -> float:
    """Composite per-episode score: completion, discounted when collided."""
    if result.collided:
        return result.route_completion * COLLISION_SCORE_FACTOR
    return result.route_completion


def driving_metrics(results: list[EpisodeResult]) -> DrivingMetrics:
    if not results:
        raise EmptyResultSet("no episode results to aggregate")
    n = len(results)
    return DrivingMetrics(
        collision_rate=sum(1 for r in results if r.collided) / n,
        route_completion_rate=sum(r.route_completion for r in results) / n,
        average_score=sum(episode_score(r) for r in results) / n,
    )


# ---------------------------------------------------------------------------
# Report emission
# ---------------------------------------------------------------------------


def _fmt_cell(value) -> str:
    return "-" if value is None else f"{value:.2f}"


def emit_report(table: dict, fmt: str = "json") -> str:
    """Render a metrics table.

    `table` maps row label -> {column -> value(dict of metric->pct or scalar)}.
    Formats: json (sorted keys, machine-stable), csv, markdown.
    """
    if fmt == "json":
        return json.dumps(table, sort_keys=True, indent=2)
    rows = sorted(table)
    columns: list[str] = []
    for row in rows:
        for col in table[row]:
            if col not in columns:
                columns.append(col)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["row"] + columns)
        for row in rows:
            writer.writerow([row] + [_fmt_cell(table[row].get(c)) for c in columns])
        return buf.getvalue()
    if fmt == "markdown":
        lines = ["| " + " | ".join([""] + columns) + " |"]
        lines.append("|" + "---|" * (len(columns) + 1))
        for row in rows:
            cells = [_fmt_cell(table[row].get(c)) for c in columns]
            lines.append("| " + " | ".join([row] + cells) + " |")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")
