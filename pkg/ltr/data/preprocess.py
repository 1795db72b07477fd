"""Query-level preprocessing: normalization, binarization, masking and filtering.

Every function returns a new value; inputs are never modified.
"""

import logging
from collections import Counter
from dataclasses import dataclass

import numpy as np

from ltr.errors import DatasetError
from ltr.models.data import Dataset, QueryGroup
from ltr.seeds import make_rng

logger = logging.getLogger(__name__)

MASK_EPSILON = 1e-9


def zscore_normalize_query(group: QueryGroup) -> QueryGroup:
    """Standardize each feature column over this query's documents (population variance)."""
    x = group.features
    constant = np.ptp(x, axis=0) == 0.0
    sigma = np.where(constant, 1.0, x.std(axis=0))
    out = (x - x.mean(axis=0)) / sigma
    out[:, constant] = 0.0
    return group.replace(features=out)


def minmax_normalize_query(group: QueryGroup) -> QueryGroup:
    x = group.features
    low = x.min(axis=0)
    span = x.max(axis=0) - low
    constant = span == 0.0
    out = (x - low) / np.where(constant, 1.0, span)
    out[:, constant] = 0.0
    return group.replace(features=out)


NORMALIZERS = {
    "zscore": zscore_normalize_query,
    "minmax": minmax_normalize_query,
}


def normalize_dataset(dataset: Dataset, method: str = "zscore") -> Dataset:
    if method == "none":
        return dataset
    try:
        normalize = NORMALIZERS[method]
    except KeyError:
        raise DatasetError(detail="unknown normalization", method=method) from None
    return dataset.with_groups([normalize(g) for g in dataset], f"normalize={method}")


def binarize_labels(dataset: Dataset, threshold: float = 1.0) -> Dataset:
    """Relevant (1) when the grade reaches ``threshold``, else 0."""
    if not np.isfinite(threshold):
        raise DatasetError(detail="binarization threshold must be finite", threshold=threshold)
    groups = [g.replace(labels=(g.labels >= threshold).astype(np.float64)) for g in dataset]
    return Dataset(
        groups=tuple(groups),
        feature_dim=dataset.feature_dim,
        label_max=1.0,
        provenance=dataset.provenance + (f"binarize>={threshold:g}",),
    )


def mask_count(ratio: float, num_docs: int) -> int:
    return int(np.floor(ratio * num_docs + MASK_EPSILON))


def apply_random_mask(
    dataset: Dataset,
    ratio: float,
    seed: int | np.random.Generator,
) -> Dataset:
    """Hide labels until ``floor(ratio * m)`` per query are masked.

    New masks are drawn uniformly without replacement from the documents that
    are still labeled; a query already at or above the target is left as is.
    """
    if not 0.0 <= ratio <= 1.0:
        raise DatasetError(detail="mask ratio must lie in [0, 1]", ratio=ratio)
    rng = make_rng(seed)
    groups = []
    for group in dataset:
        masked = group.masked.copy()
        count = mask_count(ratio, group.num_docs) - int(masked.sum())
        if count > 0:
            masked[rng.choice(np.flatnonzero(~masked), size=count, replace=False)] = True
        groups.append(group.replace(masked=masked))
    return dataset.with_groups(groups, f"mask={ratio:g}")


def filter_queries(
    dataset: Dataset,
    min_docs: int = 1,
    require_relevant: bool = False,
) -> Dataset:
    kept = [
        g
        for g in dataset
        if g.num_docs >= min_docs and (not require_relevant or bool(np.any(g.labels > 0)))
    ]
    dropped = len(dataset) - len(kept)
    if not dropped:
        return dataset
    logger.info(
        "Dropped %d of %d queries (min_docs=%d, require_relevant=%s)",
        dropped,
        len(dataset),
        min_docs,
        require_relevant,
    )
    if not kept:
        raise DatasetError(detail="no queries left after filtering", min_docs=min_docs)
    return dataset.with_groups(kept, f"filter:min_docs={min_docs},relevant={require_relevant}")


@dataclass(frozen=True)
class DatasetStats:
    num_queries: int
    num_docs: int
    min_docs: int
    mean_docs: float
    max_docs: int
    feature_dim: int
    label_histogram: dict[float, int]

    def format(self) -> str:
        labels = ", ".join(
            f"{_label_text(label)}:{count}" for label, count in sorted(self.label_histogram.items())
        )
        return (
            f"{self.num_queries} queries, {self.num_docs} documents, d={self.feature_dim}, "
            f"docs/query min={self.min_docs} mean={self.mean_docs:.2f} max={self.max_docs}, "
            f"labels {{{labels}}}"
        )


def _label_text(label: float) -> str:
    return str(int(label)) if float(label).is_integer() else f"{label:g}"


def dataset_stats(dataset: Dataset) -> DatasetStats:
    sizes = np.array([g.num_docs for g in dataset])
    histogram: Counter[float] = Counter()
    for group in dataset:
        histogram.update(float(v) for v in group.labels)
    return DatasetStats(
        num_queries=len(dataset),
        num_docs=int(sizes.sum()),
        min_docs=int(sizes.min()),
        mean_docs=float(sizes.mean()),
        max_docs=int(sizes.max()),
        feature_dim=dataset.feature_dim,
        label_histogram=dict(histogram),
    )
