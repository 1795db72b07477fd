"""Empirical risk minimization: one Adam step per training query."""

import csv
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ltr.errors import DivergenceError, ShapeError
from ltr.metrics import evaluate_groups
from ltr.models.data import Dataset, QueryGroup
from ltr.models.experiment import SELECTION_KEY, RankerSpec
from ltr.nn.network import ScoringNet
from ltr.nn.optim import Adam
from ltr.rankers.losses import compute_loss
from ltr.seeds import make_rng

logger = logging.getLogger(__name__)

TRAIN_LOG_COLUMNS = ("epoch", "loss_mean", "vali_ndcg@5")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    loss_mean: float
    vali_ndcg5: float | None


@dataclass
class ERMResult:
    net: ScoringNet
    best_net: ScoringNet
    best_epoch: int
    best_optimizer: Adam
    history: list[EpochRecord] = field(default_factory=list)

    def best_record(self) -> EpochRecord | None:
        for record in self.history:
            if record.epoch == self.best_epoch:
                return record
        return None


def training_view(
    group: QueryGroup, policy: str
) -> tuple[np.ndarray, np.ndarray] | None:
    """Features and labels the loss sees; masked labels read as 0 or are dropped."""
    if not group.masked.any():
        return group.features, group.labels
    if policy == "exclude":
        keep = ~group.masked
        if not keep.any():
            return None
        return group.features[keep], group.labels[keep]
    return group.features, np.where(group.masked, 0.0, group.labels)


def validation_ndcg5(net: ScoringNet, vali: Dataset, label_max: float) -> float:
    metric, cutoff = SELECTION_KEY
    report = evaluate_groups(net.predict, vali.groups, label_max, [cutoff], [metric])
    return report.mean(metric, cutoff)


def write_train_log(path: Path, history: Sequence[EpochRecord]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRAIN_LOG_COLUMNS)
        for r in history:
            vali = "" if r.vali_ndcg5 is None else f"{r.vali_ndcg5:.6f}"
            writer.writerow([r.epoch, f"{r.loss_mean:.6f}", vali])
    return path


def train_epoch(
    ranker: RankerSpec,
    net: ScoringNet,
    optimizer: Adam,
    train: Dataset,
    rng: np.random.Generator,
    epoch: int,
) -> float:
    net.train()
    losses: list[float] = []
    for q in rng.permutation(len(train)):
        group = train.groups[q]
        view = training_view(group, ranker.masked_label_policy)
        if view is None:
            continue
        features, labels = view
        if net.batchnorm and features.shape[0] < 2:
            logger.debug("Skipping single-document query %s under batch norm", group.qid)
            continue
        scores, cache = net.forward(features)
        loss, grad = compute_loss(ranker, scores, labels, rng)
        if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
            raise DivergenceError(
                detail="non-finite loss", epoch=epoch, qid=group.qid, ranker=str(ranker.kind)
            )
        optimizer.step(net, net.backward(cache, grad))
        losses.append(loss)
    return float(np.mean(losses)) if losses else 0.0


def train_erm(
    ranker: RankerSpec,
    net: ScoringNet,
    train: Dataset,
    epochs: int,
    optimizer: Adam | None = None,
    vali: Dataset | None = None,
    seed: int | np.random.Generator = 0,
    log_path: Path | None = None,
) -> ERMResult:
    """Train ``net`` in place and keep a copy of the epoch with the best vali nDCG@5.

    Without a validation split the last epoch is kept. ``epochs=0`` leaves the
    net untouched and selects it as is. The optimizer state at the selected
    epoch is kept alongside, so training can resume from the selected net.
    """
    if net.input_dim != train.feature_dim:
        raise ShapeError(
            detail="network input differs from data feature dimension",
            expected=train.feature_dim,
            got=net.input_dim,
        )
    optimizer = optimizer or Adam()
    rng = make_rng(seed)
    label_max = train.label_max
    history: list[EpochRecord] = []
    best_net = net.clone().eval()
    best_optimizer = optimizer.snapshot()
    best_epoch = 0
    best_score = -np.inf

    for epoch in range(1, epochs + 1):
        loss_mean = train_epoch(ranker, net, optimizer, train, rng, epoch)
        vali_score = (
            validation_ndcg5(net, vali, label_max) if vali is not None and len(vali) else None
        )
        history.append(EpochRecord(epoch, loss_mean, vali_score))
        if vali_score is None:
            logger.info("epoch %d: loss=%.6f", epoch, loss_mean)
        else:
            logger.info("epoch %d: loss=%.6f vali nDCG@5=%.6f", epoch, loss_mean, vali_score)
        if vali_score is None or vali_score > best_score:
            best_score = -np.inf if vali_score is None else vali_score
            best_epoch = epoch
            best_net = net.clone().eval()
            best_optimizer = optimizer.snapshot()

    net.eval()
    if log_path is not None:
        write_train_log(log_path, history)
    return ERMResult(
        net=net,
        best_net=best_net,
        best_epoch=best_epoch,
        best_optimizer=best_optimizer,
        history=history,
    )

