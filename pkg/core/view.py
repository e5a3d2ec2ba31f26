# core/view.py
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

from core.errors import RankOutOfRangeError
from core.evaluation import ExperimentReport

DEFAULT_TABLE_RANKS: tuple[int, ...] = (1, 5, 10, 20)


@dataclass(frozen=True)
class TableView:
    lines: List[str]            # human-readable table
    csv_header: List[str]
    csv_rows: List[List[str]]   # raw fractions, exactly as in the JSON report

    @property
    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def format_pct(value: float) -> str:
    return f"{100.0 * value:.2f}"


def format_table(
    reports: ExperimentReport | Sequence[ExperimentReport],
    ranks: Sequence[int] = DEFAULT_TABLE_RANKS,
) -> TableView:
    """
    One row per report: "Dim | Rank-1 | Rank-5 | ...", grouped under a
    feature-type heading when more than one feature type is present.
    """
    if isinstance(reports, ExperimentReport):
        reports = [reports]

    for report in reports:
        too_far = [r for r in ranks if not 1 <= r <= report.gallery_size]
        if too_far:
            raise RankOutOfRangeError(
                f"ranks {too_far} outside gallery of {report.gallery_size} ({report.features}, dim {report.dim})"
            )

    header = " | ".join(["Dim", *(f"Rank-{r}" for r in ranks)])
    grouped = len({report.features for report in reports}) > 1
    lines: List[str] = [header]
    csv_rows: List[List[str]] = []
    current = None

    for report in reports:
        if grouped and report.features != current:
            current = report.features
            lines.append(current.upper())
        values = [report.mean_curve.at(r) for r in ranks]
        lines.append(" | ".join([str(report.dim), *(format_pct(v) for v in values)]))
        csv_rows.append([report.features, report.method, str(report.dim), *(repr(v) for v in values)])

    return TableView(
        lines=lines,
        csv_header=["features", "method", "dim", *(f"rank_{r}" for r in ranks)],
        csv_rows=csv_rows,
    )
