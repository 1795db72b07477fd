from __future__ import annotations

import dataclasses
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field

import numpy as np

from ltr.errors import DatasetError, RankingError


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class QueryGroup:
    """One query's documents: features (m x d), graded labels, mask flags."""

    qid: str
    features: np.ndarray
    labels: np.ndarray
    masked: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        features = np.array(self.features, dtype=np.float64)
        labels = np.array(self.labels, dtype=np.float64).reshape(-1)
        if features.ndim != 2:
            raise DatasetError(detail="features must be a matrix", qid=self.qid)
        m, d = features.shape
        if m < 1 or d < 1:
            raise DatasetError(detail="query needs at least one document and feature", qid=self.qid)
        if labels.shape[0] != m:
            raise DatasetError(
                detail="labels length differs from document count",
                qid=self.qid,
                docs=m,
                labels=labels.shape[0],
            )
        if not np.all(np.isfinite(labels)):
            raise DatasetError(detail="labels must be finite", qid=self.qid)
        if self.masked is None:
            masked = np.zeros(m, dtype=bool)
        else:
            masked = np.array(self.masked, dtype=bool).reshape(-1)
        if masked.shape[0] != m:
            raise DatasetError(detail="mask length differs from document count", qid=self.qid)
        object.__setattr__(self, "features", _frozen(features))
        object.__setattr__(self, "labels", _frozen(labels))
        object.__setattr__(self, "masked", _frozen(masked))

    @property
    def num_docs(self) -> int:
        return int(self.features.shape[0])

    @property
    def feature_dim(self) -> int:
        return int(self.features.shape[1])

    def replace(self, **changes: object) -> QueryGroup:
        return dataclasses.replace(self, **changes)  # type: ignore[arg-type]


@dataclass(frozen=True)
class Dataset:
    """Ordered query groups sharing one feature dimension."""

    groups: tuple[QueryGroup, ...]
    feature_dim: int
    label_max: float
    provenance: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        groups = tuple(self.groups)
        object.__setattr__(self, "groups", groups)
        seen: set[str] = set()
        for group in groups:
            if group.feature_dim != self.feature_dim:
                raise DatasetError(
                    detail="query feature dimension differs from dataset",
                    qid=group.qid,
                    expected=self.feature_dim,
                    got=group.feature_dim,
                )
            if group.qid in seen:
                raise DatasetError(detail="duplicate qid", qid=group.qid)
            seen.add(group.qid)

    def __len__(self) -> int:
        return len(self.groups)

    def __iter__(self) -> Iterator[QueryGroup]:
        return iter(self.groups)

    @property
    def num_docs(self) -> int:
        return sum(g.num_docs for g in self.groups)

    def with_groups(self, groups: Sequence[QueryGroup], note: str | None = None) -> Dataset:
        provenance = self.provenance + ((note,) if note else ())
        return Dataset(
            groups=tuple(groups),
            feature_dim=self.feature_dim,
            label_max=self.label_max,
            provenance=provenance,
        )

    def subset(self, indices: Sequence[int], note: str | None = None) -> Dataset:
        return self.with_groups([self.groups[i] for i in indices], note)

    def any_masked(self) -> bool:
        return any(bool(g.masked.any()) for g in self.groups)


@dataclass(frozen=True)
class FoldAssignment:
    train: tuple[int, ...]
    vali: tuple[int, ...]
    test: tuple[int, ...]


@dataclass(frozen=True)
class FoldPlan:
    num_folds: int
    assignments: tuple[FoldAssignment, ...]

    def splits(self, dataset: Dataset, fold: int) -> tuple[Dataset, Dataset, Dataset]:
        a = self.assignments[fold]
        return (
            dataset.subset(a.train, f"fold{fold}:train"),
            dataset.subset(a.vali, f"fold{fold}:vali"),
            dataset.subset(a.test, f"fold{fold}:test"),
        )


@dataclass(frozen=True)
class Permutation:
    """``forward[i]`` is the 1-based rank of document i; ``inverse[r-1]`` the document at rank r."""

    forward: np.ndarray
    inverse: np.ndarray

    @classmethod
    def from_order(cls, order: np.ndarray) -> Permutation:
        order = np.asarray(order, dtype=np.int64)
        m = order.shape[0]
        if np.unique(order).shape[0] != m or (m and (order.min() < 0 or order.max() >= m)):
            raise RankingError(detail="order is not a permutation", size=m)
        forward = np.empty(m, dtype=np.int64)
        forward[order] = np.arange(1, m + 1)
        return cls(forward=_frozen(forward), inverse=_frozen(order.copy()))

    def __len__(self) -> int:
        return int(self.inverse.shape[0])

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Reorder per-document values into rank order."""
        return np.asarray(values)[self.inverse]
