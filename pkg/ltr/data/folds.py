import logging

import numpy as np

from ltr.errors import DatasetError
from ltr.models.data import Dataset, FoldAssignment, FoldPlan
from ltr.seeds import make_rng

logger = logging.getLogger(__name__)

MIN_FOLDS = 3


def make_folds(
    dataset: Dataset, num_folds: int = 5, seed: int | np.random.Generator = 0
) -> FoldPlan:
    """Shuffle queries into ``num_folds`` near-equal subsets and rotate their roles.

    Fold ``i`` tests on subset ``i``, validates on subset ``i + 1`` (cyclically)
    and trains on the remaining subsets, so at five folds the split is 3:1:1
    and every query is tested exactly once.
    """
    if num_folds < MIN_FOLDS:
        raise DatasetError(detail="need at least three folds", num_folds=num_folds)
    if len(dataset) < num_folds:
        raise DatasetError(
            detail="too few queries for the requested folds",
            queries=len(dataset),
            num_folds=num_folds,
        )
    order = make_rng(seed).permutation(len(dataset))
    subsets = [np.sort(part) for part in np.array_split(order, num_folds)]
    assignments = []
    for i in range(num_folds):
        vali = (i + 1) % num_folds
        rest = [subsets[j] for j in range(num_folds) if j not in (i, vali)]
        train = np.sort(np.concatenate(rest))
        assignments.append(
            FoldAssignment(
                train=tuple(int(q) for q in train),
                vali=tuple(int(q) for q in subsets[vali]),
                test=tuple(int(q) for q in subsets[i]),
            )
        )
    logger.debug("Fold subset sizes: %s", [len(s) for s in subsets])
    return FoldPlan(num_folds=num_folds, assignments=tuple(assignments))
