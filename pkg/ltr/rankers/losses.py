"""Surrogate ranking losses with exact gradients on the per-document scores.

Every loss takes one query's ``scores`` and ``labels`` and returns
``(loss, grad)`` with ``grad`` the same length as ``scores``.
"""

from collections.abc import Callable

import numpy as np
from scipy.special import expit, log_softmax, logsumexp, softmax

from ltr.metrics import dcg_at_k, discounts, gains, rank_by_scores
from ltr.models.experiment import RankerKind, RankerSpec
from ltr.rankers.plackett_luce import pl_log_prob_and_grad
from ltr.seeds import make_rng

LossResult = tuple[float, np.ndarray]
LossFn = Callable[[np.ndarray, np.ndarray, RankerSpec, np.random.Generator], LossResult]


def _as_vectors(scores: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return (
        np.asarray(scores, dtype=np.float64).reshape(-1),
        np.asarray(labels, dtype=np.float64).reshape(-1),
    )


def _ideal_dcg(labels: np.ndarray) -> float:
    return dcg_at_k(np.sort(labels)[::-1], labels.shape[0])


def loss_rank_mse(scores: np.ndarray, labels: np.ndarray) -> LossResult:
    s, y = _as_vectors(scores, labels)
    residual = s - y
    m = s.shape[0]
    return float(np.mean(residual**2)), 2.0 * residual / m


def _ordered_pairs(labels: np.ndarray) -> np.ndarray:
    """``pairs[i, j]`` is true when document ``i`` should rank above ``j``."""
    return labels[:, None] > labels[None, :]


def loss_ranknet(scores: np.ndarray, labels: np.ndarray, sigma: float = 1.0) -> LossResult:
    s, y = _as_vectors(scores, labels)
    pairs = _ordered_pairs(y)
    if not pairs.any():
        return 0.0, np.zeros_like(s)
    diff = s[:, None] - s[None, :]
    loss = float(np.sum(np.logaddexp(0.0, -sigma * diff)[pairs]))
    lam = np.where(pairs, -sigma * expit(-sigma * diff), 0.0)
    return loss, lam.sum(axis=1) - lam.sum(axis=0)


def delta_ndcg(scores: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """|change in nDCG| from swapping each pair under the ranking the scores induce."""
    s, y = _as_vectors(scores, labels)
    idcg = _ideal_dcg(y)
    if idcg == 0.0:
        return np.zeros((s.shape[0], s.shape[0]))
    disc = discounts(s.shape[0])[rank_by_scores(s).forward - 1]
    g = gains(y)
    return np.abs(g[:, None] - g[None, :]) * np.abs(disc[:, None] - disc[None, :]) / idcg


def lambda_gradients(scores: np.ndarray, labels: np.ndarray, sigma: float = 1.0) -> np.ndarray:
    return loss_lambdarank(scores, labels, sigma)[1]


def loss_lambdarank(scores: np.ndarray, labels: np.ndarray, sigma: float = 1.0) -> LossResult:
    """RankNet pair terms weighted by |delta nDCG|; the lambdas are the gradient."""
    s, y = _as_vectors(scores, labels)
    pairs = _ordered_pairs(y)
    weight = np.where(pairs, delta_ndcg(s, y), 0.0)
    if not weight.any():
        return 0.0, np.zeros_like(s)
    diff = s[:, None] - s[None, :]
    loss = float(np.sum(weight * np.logaddexp(0.0, -sigma * diff)))
    lam = -sigma * expit(-sigma * diff) * weight
    return loss, lam.sum(axis=1) - lam.sum(axis=0)


def loss_listnet_top1(
    scores: np.ndarray, labels: np.ndarray, target: str = "labels"
) -> LossResult:
    s, y = _as_vectors(scores, labels)
    p = softmax(gains(y) if target == "gains" else y)
    loss = -float(np.dot(p, log_softmax(s)))
    return loss, softmax(s) - p


def listmle_target(
    labels: np.ndarray, tie_policy: str = "by_index", rng: np.random.Generator | None = None
) -> np.ndarray:
    """Documents in descending label order; ties by index or by a seeded shuffle."""
    return rank_by_scores(labels, tie_break=tie_policy, rng=rng).inverse


def loss_listmle(
    scores: np.ndarray,
    labels: np.ndarray,
    tie_policy: str = "by_index",
    rng: np.random.Generator | None = None,
) -> LossResult:
    s, y = _as_vectors(scores, labels)
    log_prob, grad = pl_log_prob_and_grad(s, listmle_target(y, tie_policy, rng))
    return -log_prob, -grad


def loss_rankcosine(scores: np.ndarray, labels: np.ndarray) -> LossResult:
    s, y = _as_vectors(scores, labels)
    ns = float(np.linalg.norm(s))
    ny = float(np.linalg.norm(y))
    if ns == 0.0 or ny == 0.0:
        return 0.5, np.zeros_like(s)
    cos = float(np.dot(s, y)) / (ns * ny)
    d_cos = y / (ns * ny) - cos * s / ns**2
    return 0.5 * (1.0 - cos), -0.5 * d_cos


def loss_approxndcg(scores: np.ndarray, labels: np.ndarray, alpha: float = 10.0) -> LossResult:
    """Negative nDCG with each rank replaced by a sum of sigmoids."""
    s, y = _as_vectors(scores, labels)
    idcg = _ideal_dcg(y)
    if idcg == 0.0:
        return 0.0, np.zeros_like(s)
    g = gains(y)
    sig = expit(alpha * (s[None, :] - s[:, None]))
    np.fill_diagonal(sig, 0.0)
    approx_rank = 1.0 + sig.sum(axis=1)
    log_term = np.log2(1.0 + approx_rank)
    loss = -float(np.sum(g / log_term)) / idcg
    c = g / ((1.0 + approx_rank) * np.log(2.0) * log_term**2) / idcg
    w = alpha * sig * (1.0 - sig)
    np.fill_diagonal(w, 0.0)
    return loss, w.T @ c - c * w.sum(axis=1)


def loss_stlistnet(
    scores: np.ndarray,
    labels: np.ndarray,
    rng: np.random.Generator | int | None = None,
    noise: np.ndarray | None = None,
    target: str = "labels",
) -> LossResult:
    """ListNet top-1 on Gumbel-perturbed scores; pass ``noise`` to freeze the draw."""
    s, y = _as_vectors(scores, labels)
    if noise is None:
        noise = make_rng(0 if rng is None else rng).gumbel(size=s.shape[0])
    return loss_listnet_top1(s + noise, y, target)


def expected_perturbed_listnet(
    scores: np.ndarray, labels: np.ndarray, draws: int, rng: np.random.Generator
) -> float:
    """Monte-Carlo mean of the perturbed ListNet loss; vectorized over draws."""
    s, y = _as_vectors(scores, labels)
    p = softmax(y)
    perturbed = s[None, :] + rng.gumbel(size=(draws, s.shape[0]))
    log_q = perturbed - logsumexp(perturbed, axis=1, keepdims=True)
    return float(np.mean(-(log_q @ p)))


LOSSES: dict[RankerKind, LossFn] = {
    RankerKind.RANK_MSE: lambda s, y, spec, rng: loss_rank_mse(s, y),
    RankerKind.RANKNET: lambda s, y, spec, rng: loss_ranknet(s, y, spec.sigma),
    RankerKind.LAMBDARANK: lambda s, y, spec, rng: loss_lambdarank(s, y, spec.sigma),
    RankerKind.LISTNET: lambda s, y, spec, rng: loss_listnet_top1(s, y, spec.listnet_target),
    RankerKind.LISTMLE: lambda s, y, spec, rng: loss_listmle(s, y, spec.tie_policy, rng),
    RankerKind.RANKCOSINE: lambda s, y, spec, rng: loss_rankcosine(s, y),
    RankerKind.APPROXNDCG: lambda s, y, spec, rng: loss_approxndcg(s, y, spec.alpha),
    RankerKind.STLISTNET: lambda s, y, spec, rng: loss_stlistnet(
        s, y, rng=rng, target=spec.listnet_target
    ),
}


def compute_loss(
    spec: RankerSpec, scores: np.ndarray, labels: np.ndarray, rng: np.random.Generator
) -> LossResult:
    return LOSSES[spec.kind](scores, labels, spec, rng)
