"""Generator/discriminator game over top-k Plackett-Luce rankings.

Both players are scoring nets read as Plackett-Luce models at temperature
``T``. The discriminator learns to tell ground-truth rankings from rankings the
generator samples; the generator is updated by REINFORCE with reward
``log D(ranking)``. ``k = 1`` and ``k = 2`` are the pointwise and pairwise
games, larger ``k`` the listwise one.
"""

import csv
import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ltr.errors import DivergenceError, InsufficientDocumentsError, RankingError, ShapeError
from ltr.metrics import evaluate_net
from ltr.models.data import Dataset, QueryGroup
from ltr.models.experiment import AdversarialSpec
from ltr.nn.network import ScoringNet
from ltr.nn.optim import Adam
from ltr.rankers.plackett_luce import (
    enumerate_topk_rankings,
    pl_log_prob,
    pl_log_prob_and_grad,
    sample_ranking,
)
from ltr.seeds import make_rng

logger = logging.getLogger(__name__)

D_MAX = 1.0 - 1e-7
LOG_D_MAX = float(np.log(D_MAX))

ADVERSARIAL_LOG_COLUMNS = (
    "epoch",
    "g_reward_mean",
    "d_loss_mean",
    "g_test_ndcg@1",
    "d_test_ndcg@1",
)


@dataclass(frozen=True)
class RankingSample:
    qid: str
    indices: np.ndarray
    source: str
    log_prob: float = float("nan")

    @property
    def k(self) -> int:
        return int(self.indices.shape[0])


def gumbel_sample_ranking(
    generator_net: ScoringNet,
    features: np.ndarray,
    k: int,
    temperature: float,
    rng: int | np.random.Generator,
    qid: str = "",
) -> RankingSample:
    """Draw a top-k ranking from the generator's Plackett-Luce distribution."""
    m = np.asarray(features).shape[0]
    if k > m:
        raise RankingError(detail="ranking size exceeds document count", k=k, m=m)
    scores = generator_net.predict(features)
    indices = sample_ranking(scores, k, rng, temperature)
    return RankingSample(
        qid=qid,
        indices=indices,
        source="generated",
        log_prob=pl_log_prob(scores, indices, temperature),
    )


def sample_true_ranking(
    group: QueryGroup, k: int, rng: int | np.random.Generator
) -> RankingSample:
    """Unmasked documents by descending label with seeded tie shuffling, cut to ``k``."""
    candidates = np.flatnonzero(~group.masked)
    if candidates.shape[0] < k:
        raise InsufficientDocumentsError(
            qid=group.qid, k=k, unmasked=int(candidates.shape[0])
        )
    shuffled = make_rng(rng).permutation(candidates)
    order = shuffled[np.argsort(-group.labels[shuffled], kind="stable")]
    return RankingSample(qid=group.qid, indices=order[:k], source="true")


def log_one_minus_d(log_d: float) -> float:
    """``log(1 - D)`` from ``log D``, with ``D`` capped at ``1 - 1e-7``."""
    return float(np.log(-np.expm1(min(log_d, LOG_D_MAX))))


def discriminator_loss(
    disc_scores: np.ndarray,
    true_ranking: np.ndarray,
    gen_ranking: np.ndarray,
    temperature: float,
) -> tuple[float, np.ndarray]:
    """``-[log D(true) + log(1 - D(gen))]`` and its gradient on the discriminator scores.

    ``log D(true)`` is the Plackett-Luce log-probability itself and is never
    clipped, so long rankings keep their gradient. Only ``D(gen)`` is capped
    at ``1 - 1e-7``; the capped term contributes no gradient.
    """
    lp_true, g_true = pl_log_prob_and_grad(disc_scores, true_ranking, temperature)
    lp_gen, g_gen = pl_log_prob_and_grad(disc_scores, gen_ranking, temperature)
    grad = -g_true
    if lp_gen < LOG_D_MAX:
        # d/ds -log(1 - D) = D / (1 - D) * d log D / ds
        grad = grad + float(np.exp(lp_gen) / -np.expm1(lp_gen)) * g_gen
    loss = -(lp_true + log_one_minus_d(lp_gen))
    return loss, grad


def discriminator_step(
    disc_net: ScoringNet,
    optimizer: Adam,
    features: np.ndarray,
    true_sample: RankingSample,
    gen_sample: RankingSample,
    temperature: float,
) -> float:
    """One Adam step on the discriminator; returns the loss before the step."""
    if true_sample.qid != gen_sample.qid or true_sample.k != gen_sample.k:
        raise RankingError(
            detail="discriminator samples must share query and ranking size",
            true_qid=true_sample.qid,
            gen_qid=gen_sample.qid,
        )
    disc_net.train()
    scores, cache = disc_net.forward(features)
    loss, grad = discriminator_loss(scores, true_sample.indices, gen_sample.indices, temperature)
    if not np.isfinite(loss):
        raise DivergenceError(detail="non-finite discriminator loss", qid=true_sample.qid)
    optimizer.step(disc_net, disc_net.backward(cache, grad))
    return loss


def reinforce_gradient(rewards: np.ndarray, log_prob_grads: np.ndarray) -> np.ndarray:
    """Leave-one-out REINFORCE estimate of the gradient of the expected reward.

    With ``S`` samples and mean reward ``b`` this is
    ``sum_s (R_s - b) grad log P(s) / (S - 1)``, which equals averaging each
    sample against the mean of the others and is unbiased. ``S = 1`` gives 0.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    grads = np.asarray(log_prob_grads, dtype=np.float64)
    samples = rewards.shape[0]
    if samples < 2:
        return np.zeros(grads.shape[1:])
    advantages = rewards - rewards.mean()
    return advantages @ grads / (samples - 1)


@dataclass(frozen=True)
class GeneratorStep:
    reward_mean: float
    surrogate_loss: float
    updated: bool


def generator_step(
    gen_net: ScoringNet,
    optimizer: Adam,
    disc_net: ScoringNet,
    features: np.ndarray,
    k: int,
    samples_per_query: int,
    temperature: float,
    rng: np.random.Generator,
) -> GeneratorStep:
    """Sample rankings, reward them with ``log D`` and take one policy-gradient step.

    The generator draws from every document of the query, masked ones included.
    """
    if samples_per_query < 1:
        raise RankingError(detail="samples_per_query must be >= 1", samples=samples_per_query)
    m = features.shape[0]
    if k > m:
        raise InsufficientDocumentsError(k=k, m=m)
    gen_net.train()
    scores, cache = gen_net.forward(features)
    disc_scores = disc_net.predict(features)

    rewards = np.empty(samples_per_query)
    log_probs = np.empty(samples_per_query)
    grads = np.empty((samples_per_query, m))
    for s in range(samples_per_query):
        ranking = sample_ranking(scores, k, rng, temperature)
        log_probs[s], grads[s] = pl_log_prob_and_grad(scores, ranking, temperature)
        rewards[s] = pl_log_prob(disc_scores, ranking, temperature)

    ascent = reinforce_gradient(rewards, grads)
    if not np.all(np.isfinite(ascent)):
        raise DivergenceError(detail="non-finite generator gradient")
    reward_mean = float(rewards.mean())
    if not ascent.any():
        return GeneratorStep(reward_mean=reward_mean, surrogate_loss=0.0, updated=False)
    advantages = rewards - reward_mean
    surrogate = -float(advantages @ log_probs) / (samples_per_query - 1)
    optimizer.step(gen_net, gen_net.backward(cache, -ascent))
    return GeneratorStep(reward_mean=reward_mean, surrogate_loss=surrogate, updated=True)


def exact_policy_gradient(
    scores: np.ndarray,
    k: int,
    temperature: float,
    reward_fn: Callable[[tuple[int, ...]], float],
) -> np.ndarray:
    """Gradient of the expected reward on the scores, by enumerating every top-k ranking."""
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    total = np.zeros_like(s)
    for ranking in enumerate_topk_rankings(s.shape[0], k):
        log_prob, grad = pl_log_prob_and_grad(s, ranking, temperature)
        total += np.exp(log_prob) * reward_fn(ranking) * grad
    return total


@dataclass(frozen=True)
class AdversarialEpoch:
    epoch: int
    g_reward_mean: float
    d_loss_mean: float
    g_test_ndcg1: float | None
    d_test_ndcg1: float | None


@dataclass
class AdversarialResult:
    gen_net: ScoringNet
    disc_net: ScoringNet
    history: list[AdversarialEpoch] = field(default_factory=list)
    skipped_queries: int = 0


def write_adversarial_log(path: Path, history: Sequence[AdversarialEpoch]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)

    def fmt(v: float | None) -> str:
        return "" if v is None else f"{v:.6f}"

    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ADVERSARIAL_LOG_COLUMNS)
        for r in history:
            writer.writerow(
                [
                    r.epoch,
                    fmt(r.g_reward_mean),
                    fmt(r.d_loss_mean),
                    fmt(r.g_test_ndcg1),
                    fmt(r.d_test_ndcg1),
                ]
            )
    return path


def _test_ndcg1(net: ScoringNet, test: Dataset | None, label_max: float) -> float | None:
    if test is None or not len(test):
        return None
    return evaluate_net(net, test.groups, label_max, [1], ["nDCG"]).mean("nDCG", 1)


def train_adversarial(
    spec: AdversarialSpec,
    gen_net: ScoringNet,
    disc_net: ScoringNet,
    train: Dataset,
    epochs: int,
    gen_optimizer: Adam | None = None,
    disc_optimizer: Adam | None = None,
    test: Dataset | None = None,
    seed: int | np.random.Generator = 0,
    log_path: Path | None = None,
) -> AdversarialResult:
    """Alternate generator and discriminator steps per training query.

    Queries with fewer than ``k`` unmasked documents have no ground-truth
    ranking of size ``k`` and are skipped.
    """
    for name, net in (("generator", gen_net), ("discriminator", disc_net)):
        if net.input_dim != train.feature_dim:
            raise ShapeError(
                detail=f"{name} input differs from data feature dimension",
                expected=train.feature_dim,
                got=net.input_dim,
            )
    gen_optimizer = gen_optimizer or Adam()
    disc_optimizer = disc_optimizer or Adam()
    rng = make_rng(seed)
    label_max = train.label_max
    result = AdversarialResult(gen_net=gen_net, disc_net=disc_net)
    needs_batch = gen_net.batchnorm or disc_net.batchnorm

    for epoch in range(1, epochs + 1):
        rewards: list[float] = []
        d_losses: list[float] = []
        skipped = 0
        for q in rng.permutation(len(train)):
            group = train.groups[q]
            if int((~group.masked).sum()) < spec.k or (needs_batch and group.num_docs < 2):
                skipped += 1
                continue
            for _ in range(spec.g_steps):
                step = generator_step(
                    gen_net,
                    gen_optimizer,
                    disc_net,
                    group.features,
                    spec.k,
                    spec.samples_per_query,
                    spec.temperature,
                    rng,
                )
                rewards.append(step.reward_mean)
            for _ in range(spec.d_steps):
                true_sample = sample_true_ranking(group, spec.k, rng)
                gen_sample = gumbel_sample_ranking(
                    gen_net, group.features, spec.k, spec.temperature, rng, group.qid
                )
                d_losses.append(
                    discriminator_step(
                        disc_net,
                        disc_optimizer,
                        group.features,
                        true_sample,
                        gen_sample,
                        spec.temperature,
                    )
                )
        if skipped and epoch == 1:
            logger.info(
                "Skipping %d queries with fewer than k=%d usable documents", skipped, spec.k
            )
        result.skipped_queries = skipped
        record = AdversarialEpoch(
            epoch=epoch,
            g_reward_mean=float(np.mean(rewards)) if rewards else 0.0,
            d_loss_mean=float(np.mean(d_losses)) if d_losses else 0.0,
            g_test_ndcg1=_test_ndcg1(gen_net, test, label_max),
            d_test_ndcg1=_test_ndcg1(disc_net, test, label_max),
        )
        result.history.append(record)
        logger.info(
            "epoch %d: G reward=%.6f D loss=%.6f",
            epoch,
            record.g_reward_mean,
            record.d_loss_mean,
        )

    gen_net.eval()
    disc_net.eval()
    if log_path is not None:
        write_adversarial_log(log_path, result.history)
    return result
