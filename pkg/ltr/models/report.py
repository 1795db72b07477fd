from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

MetricKey = tuple[str, int]

REPORT_COLUMNS = ("fold", "split", "metric", "cutoff", "value", "query_count")


def metric_label(metric: str, cutoff: int) -> str:
    return metric if cutoff == 0 else f"{metric}@{cutoff}"


@dataclass(frozen=True)
class MetricReport:
    """Metric values per evaluation unit (a query, or a fold when averaged)."""

    unit_ids: tuple[str, ...]
    values: Mapping[MetricKey, np.ndarray]
    query_count: int

    @classmethod
    def from_rows(
        cls,
        unit_ids: Sequence[str],
        rows: Sequence[Mapping[MetricKey, float]],
        keys: Sequence[MetricKey],
        query_count: int | None = None,
    ) -> MetricReport:
        values = {
            key: np.array([float(row[key]) for row in rows], dtype=np.float64) for key in keys
        }
        count = len(rows) if query_count is None else query_count
        return cls(unit_ids=tuple(unit_ids), values=values, query_count=count)

    @classmethod
    def average(cls, reports: Sequence[MetricReport]) -> MetricReport:
        """Fold average: one unit per report, valued at that report's mean."""
        if not reports:
            return cls(unit_ids=(), values={}, query_count=0)
        keys = list(reports[0].keys())
        rows = [{key: r.mean(*key) for key in keys} for r in reports]
        return cls.from_rows(
            [str(i) for i in range(len(reports))],
            rows,
            keys,
            query_count=sum(r.query_count for r in reports),
        )

    def keys(self) -> list[MetricKey]:
        return list(self.values.keys())

    def __len__(self) -> int:
        return len(self.unit_ids)

    def mean(self, metric: str, cutoff: int) -> float:
        arr = self.values[(metric, cutoff)]
        if arr.size == 0:
            return 0.0
        return float(np.mean(arr))

    def means(self) -> dict[MetricKey, float]:
        return {key: self.mean(*key) for key in self.values}

    def per_unit(self, metric: str, cutoff: int) -> list[float]:
        return [float(v) for v in self.values[(metric, cutoff)]]

    def to_rows(self, fold: str, split: str) -> list[dict[str, str | int]]:
        return [
            {
                "fold": fold,
                "split": split,
                "metric": metric,
                "cutoff": cutoff,
                "value": f"{self.mean(metric, cutoff):.6f}",
                "query_count": self.query_count,
            }
            for metric, cutoff in self.values
        ]
