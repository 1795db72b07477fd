"""Plackett-Luce distribution over top-k rankings.

A ranking places documents one at a time, each chosen with probability
``softmax(scores / T)`` over the documents not yet placed. For ``k < m`` the
unplaced remainder stays in every denominator.
"""

import itertools
from collections.abc import Sequence

import numpy as np
from scipy.special import logsumexp

from ltr.errors import RankingError
from ltr.seeds import make_rng


def _check_ranking(ranking: Sequence[int] | np.ndarray, m: int) -> np.ndarray:
    idx = np.asarray(ranking, dtype=np.int64).reshape(-1)
    if idx.shape[0] > m:
        raise RankingError(detail="ranking longer than the candidate list", k=idx.shape[0], m=m)
    if idx.size and (idx.min() < 0 or idx.max() >= m):
        raise RankingError(detail="ranking index out of range", m=m)
    if np.unique(idx).shape[0] != idx.shape[0]:
        raise RankingError(detail="duplicate index in ranking", ranking=idx.tolist())
    return idx


def _step_log_normalizers(s: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """``lse[i]`` is log-sum-exp over the candidates still available at step ``i``."""
    k = idx.shape[0]
    rest = np.ones(s.shape[0], dtype=bool)
    rest[idx] = False
    lse = np.empty(k)
    acc = logsumexp(s[rest]) if rest.any() else -np.inf
    for i in range(k - 1, -1, -1):
        acc = np.logaddexp(s[idx[i]], acc)
        lse[i] = acc
    return lse


def pl_log_prob(
    scores: np.ndarray, ranking: Sequence[int] | np.ndarray, temperature: float = 1.0
) -> float:
    """Log-probability of the top-k ``ranking`` under Plackett-Luce on ``scores / temperature``."""
    s = np.asarray(scores, dtype=np.float64).reshape(-1) / temperature
    idx = _check_ranking(ranking, s.shape[0])
    if idx.size == 0:
        return 0.0
    return float(np.sum(s[idx] - _step_log_normalizers(s, idx)))


def pl_log_prob_and_grad(
    scores: np.ndarray, ranking: Sequence[int] | np.ndarray, temperature: float = 1.0
) -> tuple[float, np.ndarray]:
    """Log-probability and its gradient with respect to the raw scores."""
    s = np.asarray(scores, dtype=np.float64).reshape(-1) / temperature
    m = s.shape[0]
    idx = _check_ranking(ranking, m)
    k = idx.shape[0]
    if k == 0:
        return 0.0, np.zeros(m)
    lse = _step_log_normalizers(s, idx)
    position = np.full(m, k)
    position[idx] = np.arange(k)
    candidate = position[None, :] >= np.arange(k)[:, None]
    exponent = np.where(candidate, s[None, :] - lse[:, None], -np.inf)
    grad = -np.exp(exponent).sum(axis=0)
    grad[idx] += 1.0
    return float(np.sum(s[idx] - lse)), grad / temperature


def gumbel_noise(rng: np.random.Generator, size: int) -> np.ndarray:
    """Standard Gumbel draws ``-log(-log u)``."""
    return rng.gumbel(size=size)


def sample_ranking(
    scores: np.ndarray,
    k: int,
    rng: int | np.random.Generator,
    temperature: float = 1.0,
) -> np.ndarray:
    """Exact Plackett-Luce top-k sample: perturb ``scores / T`` with Gumbel noise and sort."""
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    m = s.shape[0]
    if k < 1 or k > m:
        raise RankingError(detail="ranking size must satisfy 1 <= k <= m", k=k, m=m)
    perturbed = s / temperature + gumbel_noise(make_rng(rng), m)
    return np.argsort(-perturbed, kind="stable")[:k]


def enumerate_topk_rankings(m: int, k: int) -> list[tuple[int, ...]]:
    return list(itertools.permutations(range(m), k))


def topk_distribution(
    scores: np.ndarray, k: int, temperature: float = 1.0
) -> dict[tuple[int, ...], float]:
    """Exact probability of every top-k ranking; only sensible for small ``m``."""
    m = np.asarray(scores).reshape(-1).shape[0]
    return {
        ranking: float(np.exp(pl_log_prob(scores, ranking, temperature)))
        for ranking in enumerate_topk_rankings(m, k)
    }
