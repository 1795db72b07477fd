"""Rank-based IR metrics.

All functions take labels already in ranked order (first element is rank 1)
unless stated otherwise. Graded gain is ``2**label - 1`` with a
``log2(rank + 1)`` discount; ERR uses satisfaction probability
``(2**label - 1) / 2**label_max``.
"""

import logging
from collections.abc import Callable, Iterable, Sequence
from typing import TYPE_CHECKING

import numpy as np

from ltr.errors import RankingError
from ltr.models.data import Permutation, QueryGroup
from ltr.models.report import MetricKey, MetricReport
from ltr.seeds import make_rng

if TYPE_CHECKING:
    from ltr.nn.network import ScoringNet

logger = logging.getLogger(__name__)

DEFAULT_RELEVANCE_THRESHOLD = 1.0


def rank_by_scores(
    scores: np.ndarray,
    tie_break: str = "by_index",
    rng: int | np.random.Generator | None = None,
) -> Permutation:
    """Sort documents by descending score."""
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    if np.isnan(s).any():
        raise RankingError(detail="NaN score")
    if tie_break == "by_index":
        order = np.argsort(-s, kind="stable")
    elif tie_break == "seeded":
        shuffle = make_rng(0 if rng is None else rng).permutation(s.shape[0])
        order = shuffle[np.argsort(-s[shuffle], kind="stable")]
    else:
        raise RankingError(detail="unknown tie_break", tie_break=tie_break)
    return Permutation.from_order(order)


def gains(labels: np.ndarray) -> np.ndarray:
    return np.power(2.0, np.asarray(labels, dtype=np.float64)) - 1.0


def discounts(n: int) -> np.ndarray:
    return 1.0 / np.log2(np.arange(2, n + 2, dtype=np.float64))


def dcg_at_k(ranked_labels: np.ndarray, k: int) -> float:
    top = np.asarray(ranked_labels, dtype=np.float64)[:k]
    return float(np.sum(gains(top) * discounts(top.shape[0])))


def precision_at_k(
    ranked_labels: np.ndarray, k: int, relevance_threshold: float = DEFAULT_RELEVANCE_THRESHOLD
) -> float:
    if k < 1:
        raise RankingError(detail="cutoff must be >= 1", k=k)
    top = np.asarray(ranked_labels, dtype=np.float64)[:k]
    return float(np.count_nonzero(top >= relevance_threshold)) / k


def average_precision(
    ranked_labels: np.ndarray, relevance_threshold: float = DEFAULT_RELEVANCE_THRESHOLD
) -> float:
    relevant = np.asarray(ranked_labels, dtype=np.float64) >= relevance_threshold
    if not relevant.any():
        return 0.0
    hits = np.cumsum(relevant)
    ranks = np.arange(1, relevant.shape[0] + 1)
    return float(np.mean(hits[relevant] / ranks[relevant]))


def mean_average_precision(
    rankings: Iterable[np.ndarray], relevance_threshold: float = DEFAULT_RELEVANCE_THRESHOLD
) -> float:
    values = [average_precision(r, relevance_threshold) for r in rankings]
    return float(np.mean(values)) if values else 0.0


def ndcg_at_k(ranked_labels: np.ndarray, ideal_labels_sorted_desc: np.ndarray, k: int) -> float:
    ranked = np.asarray(ranked_labels, dtype=np.float64)
    ideal = np.asarray(ideal_labels_sorted_desc, dtype=np.float64)
    if ranked.shape != ideal.shape or not np.array_equal(np.sort(ranked), np.sort(ideal)):
        raise RankingError(detail="ideal labels are not a permutation of the ranked labels")
    ideal = np.sort(ideal)[::-1]
    idcg = dcg_at_k(ideal, k)
    if idcg == 0.0:
        return 0.0
    return dcg_at_k(ranked, k) / idcg


def _err(ranked: np.ndarray, label_max: float, k: int) -> float:
    top = ranked[:k]
    satisfaction = gains(top) / 2.0**label_max
    not_stopped = np.concatenate(([1.0], np.cumprod(1.0 - satisfaction)[:-1]))
    ranks = np.arange(1, top.shape[0] + 1, dtype=np.float64)
    return float(np.sum(satisfaction * not_stopped / ranks))


def _check_err_labels(ranked: np.ndarray, label_max: float) -> None:
    if label_max < 1:
        raise RankingError(detail="label_max must be >= 1", label_max=label_max)
    if ranked.size and (ranked.min() < 0 or ranked.max() > label_max):
        raise RankingError(
            detail="label outside [0, label_max]",
            label_max=label_max,
            low=float(ranked.min()),
            high=float(ranked.max()),
        )


def err_at_k(ranked_labels: np.ndarray, label_max: float, k: int) -> float:
    """Expected reciprocal rank over the top ``k`` positions."""
    ranked = np.asarray(ranked_labels, dtype=np.float64)
    _check_err_labels(ranked, label_max)
    return _err(ranked, label_max, k)


def nerr_at_k(ranked_labels: np.ndarray, label_max: float, k: int) -> float:
    """ERR normalized by the ERR of the label-sorted ranking; 0 when that is 0."""
    ranked = np.asarray(ranked_labels, dtype=np.float64)
    _check_err_labels(ranked, label_max)
    ideal = _err(np.sort(ranked)[::-1], label_max, k)
    if ideal == 0.0:
        return 0.0
    return _err(ranked, label_max, k) / ideal


def metric_keys(metrics: Sequence[str], cutoffs: Sequence[int]) -> list[MetricKey]:
    keys: list[MetricKey] = []
    for metric in metrics:
        if metric == "AP":
            keys.append(("AP", 0))
        else:
            keys.extend((metric, k) for k in cutoffs)
    return keys


def evaluate_ranking(
    scores: np.ndarray,
    labels: np.ndarray,
    label_max: float,
    cutoffs: Sequence[int],
    metrics: Sequence[str] = ("P", "AP", "nDCG", "ERR", "nERR"),
    relevance_threshold: float = DEFAULT_RELEVANCE_THRESHOLD,
) -> dict[MetricKey, float]:
    """Rank one query by ``scores`` and compute every requested metric@k."""
    labels = np.asarray(labels, dtype=np.float64)
    ranked = rank_by_scores(scores).apply(labels)
    ideal = np.sort(labels)[::-1]
    err_max = max(float(label_max), 1.0)
    out: dict[MetricKey, float] = {}
    for metric, k in metric_keys(metrics, cutoffs):
        if metric == "P":
            out[(metric, k)] = precision_at_k(ranked, k, relevance_threshold)
        elif metric == "AP":
            out[(metric, k)] = average_precision(ranked, relevance_threshold)
        elif metric == "nDCG":
            out[(metric, k)] = ndcg_at_k(ranked, ideal, k)
        elif metric == "ERR":
            out[(metric, k)] = err_at_k(ranked, err_max, k)
        elif metric == "nERR":
            out[(metric, k)] = nerr_at_k(ranked, err_max, k)
        else:
            raise RankingError(detail="unknown metric", metric=metric)
    return out


def stacked_scores(
    score_fn: Callable[[np.ndarray], np.ndarray], groups: Sequence[QueryGroup]
) -> list[np.ndarray]:
    """Score all groups in one call; valid because eval-mode scoring is row-wise."""
    if not groups:
        return []
    features = np.vstack([g.features for g in groups])
    scores = score_fn(features)
    bounds = np.cumsum([g.num_docs for g in groups])[:-1]
    return np.split(scores, bounds)


def evaluate_groups(
    score_fn: Callable[[np.ndarray], np.ndarray],
    groups: Sequence[QueryGroup],
    label_max: float,
    cutoffs: Sequence[int],
    metrics: Sequence[str] = ("P", "AP", "nDCG", "ERR", "nERR"),
    relevance_threshold: float = DEFAULT_RELEVANCE_THRESHOLD,
    skip_zero_relevance: bool = False,
) -> MetricReport:
    """Per-query metrics for every group, optionally excluding queries with no relevant doc."""
    keys = metric_keys(metrics, cutoffs)
    unit_ids: list[str] = []
    rows: list[dict[MetricKey, float]] = []
    for group, scores in zip(groups, stacked_scores(score_fn, groups), strict=True):
        if skip_zero_relevance and not np.any(group.labels > 0):
            continue
        unit_ids.append(group.qid)
        rows.append(
            evaluate_ranking(scores, group.labels, label_max, cutoffs, metrics, relevance_threshold)
        )
    if skip_zero_relevance and len(rows) < len(groups):
        logger.debug("Excluded %d queries without relevant documents", len(groups) - len(rows))
    return MetricReport.from_rows(unit_ids, rows, keys)


def evaluate_net(
    net: "ScoringNet",
    groups: Sequence[QueryGroup],
    label_max: float,
    cutoffs: Sequence[int],
    metrics: Sequence[str] = ("P", "AP", "nDCG", "ERR", "nERR"),
    relevance_threshold: float = DEFAULT_RELEVANCE_THRESHOLD,
    skip_zero_relevance: bool = False,
) -> MetricReport:
    """Eval-mode metrics of a scoring net over ``groups``."""
    return evaluate_groups(
        net.predict,
        groups,
        label_max,
        cutoffs,
        metrics,
        relevance_threshold,
        skip_zero_relevance,
    )
