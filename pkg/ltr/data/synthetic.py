"""Desk-scale surrogate for web-search LETOR data.

Each document's features are standard normal; a hidden weight vector ``w``
drawn once per dataset gives the clean utility ``w . x``. Labels bucket the
noisy utility ``u = w . x + noise * eps`` into equal-sized per-query
quantiles, so grade counts per query are exact by construction. Sorting by
``u`` is the oracle ranker.
"""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ltr.errors import DatasetError
from ltr.metrics import evaluate_ranking, metric_keys
from ltr.models.data import Dataset, QueryGroup
from ltr.models.report import MetricReport


@dataclass(frozen=True)
class SyntheticDataset:
    dataset: Dataset
    weights: np.ndarray
    utilities: dict[str, np.ndarray]

    def oracle_report(
        self,
        groups: Sequence[QueryGroup],
        cutoffs: Sequence[int],
        metrics: Sequence[str] = ("nDCG",),
    ) -> MetricReport:
        """Metrics of ranking each query by the hidden utility that generated its labels."""
        rows = [
            evaluate_ranking(
                self.utilities[g.qid], g.labels, self.dataset.label_max, cutoffs, metrics
            )
            for g in groups
        ]
        return MetricReport.from_rows([g.qid for g in groups], rows, metric_keys(metrics, cutoffs))


def quantile_grades(values: np.ndarray, num_grades: int) -> np.ndarray:
    """Grade ``g`` for the ``g``-th equal-sized block of ascending ``values``."""
    m = values.shape[0]
    positions = np.empty(m, dtype=np.int64)
    positions[np.argsort(values, kind="stable")] = np.arange(m)
    return (positions * num_grades // m).astype(np.float64)


def make_synthetic_dataset(
    num_queries: int = 200,
    docs_per_query: int = 30,
    dim: int = 20,
    noise: float = 0.1,
    seed: int = 0,
    num_grades: int = 5,
) -> SyntheticDataset:
    if num_queries < 1 or docs_per_query < 1 or dim < 1:
        raise DatasetError(
            detail="synthetic sizes must be positive",
            num_queries=num_queries,
            docs_per_query=docs_per_query,
            dim=dim,
        )
    if noise < 0 or num_grades < 2:
        raise DatasetError(detail="invalid synthetic noise or grade count", noise=noise)
    rng = np.random.default_rng(seed)
    weights = rng.standard_normal(dim)
    groups = []
    utilities: dict[str, np.ndarray] = {}
    for q in range(num_queries):
        qid = str(q + 1)
        x = rng.standard_normal((docs_per_query, dim))
        utility = x @ weights
        noisy = utility + noise * rng.standard_normal(docs_per_query)
        groups.append(QueryGroup(qid=qid, features=x, labels=quantile_grades(noisy, num_grades)))
        utilities[qid] = noisy
    dataset = Dataset(
        groups=tuple(groups),
        feature_dim=dim,
        label_max=float(num_grades - 1),
        provenance=(
            f"synthetic:queries={num_queries},docs={docs_per_query},dim={dim},"
            f"noise={noise:g},seed={seed}",
        ),
    )
    return SyntheticDataset(dataset=dataset, weights=weights, utilities=utilities)
