"""Cross-validated training and evaluation of one experiment config.

ERM runs pick, per fold, the epoch with the best validation nDCG@5 and report
that net's test metrics. Adversarial runs never look at the validation split
and report the final epoch.
"""

import logging
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ltr.data.folds import make_folds
from ltr.data.letor import load_dataset, load_fold_directory
from ltr.data.preprocess import (
    apply_random_mask,
    binarize_labels,
    filter_queries,
    normalize_dataset,
)
from ltr.data.synthetic import make_synthetic_dataset
from ltr.errors import CancelledRunError, ConfigError, FoldFailure, LTRError, RankingError
from ltr.metrics import evaluate_net
from ltr.models.data import Dataset
from ltr.models.experiment import SELECTION_KEY, ExperimentConfig
from ltr.models.report import MetricReport
from ltr.nn.checkpoint import save_checkpoint
from ltr.nn.network import ScoringNet, build_scoring_net
from ltr.nn.optim import Adam
from ltr.rankers.adversarial import train_adversarial
from ltr.rankers.erm import train_erm
from ltr.seeds import derive_seed
from ltr.state import cancel_event

from .runs import (
    CHECKPOINT_NAME,
    SUMMARY_NAME,
    TEST_METRICS_NAME,
    TRAIN_LOG_NAME,
    clear_failure_marker,
    fold_dir,
    prepare_run_dir,
    write_failure_marker,
    write_report_csv,
)

logger = logging.getLogger(__name__)

Splits = tuple[Dataset, Dataset, Dataset]


@dataclass
class FoldResult:
    fold: int
    test: MetricReport
    vali_selection: float | None = None
    train_selection: float | None = None
    best_epoch: int | None = None
    players: dict[str, MetricReport] = field(default_factory=dict)


@dataclass
class CrossValidationResult:
    config: ExperimentConfig
    run_dir: Path
    folds: list[FoldResult] = field(default_factory=list)
    failures: dict[int, str] = field(default_factory=dict)

    @property
    def report(self) -> MetricReport:
        """Fold-averaged test metrics."""
        return MetricReport.average([f.test for f in self.folds])

    def player_report(self, player: str) -> MetricReport:
        return MetricReport.average(
            [f.players[player] for f in self.folds if player in f.players]
        )

    @property
    def selection_score(self) -> float:
        """Mean validation nDCG@5 over folds; training nDCG@5 when no fold validated.

        Test metrics never take part in selection.
        """
        scores = [f.vali_selection for f in self.folds if f.vali_selection is not None]
        if not scores:
            scores = [f.train_selection for f in self.folds if f.train_selection is not None]
        if not scores:
            return float("-inf")
        return float(np.mean(scores))

    @property
    def selection_split(self) -> str:
        return "vali" if any(f.vali_selection is not None for f in self.folds) else "train"

    @property
    def partial_failure(self) -> bool:
        return bool(self.failures)


def make_optimizer(config: ExperimentConfig) -> Adam:
    o = config.optimizer
    return Adam(lr=o.lr, weight_decay=o.weight_decay, beta1=o.beta1, beta2=o.beta2, eps=o.eps)


def prepare_dataset(config: ExperimentConfig, dataset: Dataset) -> Dataset:
    """Normalization, binarization and document-count filtering on the whole dataset."""
    spec = config.data
    dataset = normalize_dataset(dataset, spec.normalization)
    if spec.binarize_threshold is not None:
        dataset = binarize_labels(dataset, spec.binarize_threshold)
    if spec.min_docs > 1:
        dataset = filter_queries(dataset, min_docs=spec.min_docs)
    return dataset


def load_experiment_data(config: ExperimentConfig) -> Dataset | Splits:
    """The configured dataset, or the three splits of a pre-split fold directory."""
    spec = config.data
    if spec.fold_dir is not None:
        splits = load_fold_directory(spec.fold_dir, spec.feature_dim, spec.noncontiguous)
        train, vali, test = (prepare_dataset(config, split) for split in splits)
        return train, vali, test
    if spec.path is not None:
        dataset = load_dataset(spec.path, spec.feature_dim, spec.noncontiguous)
    elif spec.synthetic is not None:
        s = spec.synthetic
        dataset = make_synthetic_dataset(
            s.num_queries, s.docs_per_query, s.dim, s.noise, s.seed, s.num_grades
        ).dataset
    else:
        raise ConfigError(detail="no data source configured", key="data")
    return prepare_dataset(config, dataset)


def prepare_train_split(
    config: ExperimentConfig, train: Dataset, fold: int, mask_ratio: float | None = None
) -> Dataset:
    """Training-split-only steps: label masking and relevance filtering."""
    ratio = config.data.mask_ratio if mask_ratio is None else mask_ratio
    if ratio > 0:
        train = apply_random_mask(train, ratio, derive_seed(config.seed, "mask", fold))
    if config.data.require_relevant:
        train = filter_queries(train, require_relevant=True)
    return train


def _check_unmasked(fold: int, *splits: Dataset) -> None:
    for split in splits:
        if split.any_masked():
            raise RankingError(detail="evaluation split carries masked labels", fold=fold)


def _write_metrics(directory: Path, fold: int, result: FoldResult) -> None:
    rows = result.test.to_rows(str(fold), "test")
    for player, report in sorted(result.players.items()):
        rows.extend(report.to_rows(str(fold), f"test_{player}"))
    write_report_csv(directory / TEST_METRICS_NAME, rows)


def _evaluate(
    config: ExperimentConfig, net: ScoringNet, test: Dataset, label_max: float
) -> MetricReport:
    e = config.evaluation
    return evaluate_net(
        net,
        test.groups,
        label_max,
        e.cutoffs,
        e.metrics,
        e.relevance_threshold,
        e.skip_zero_relevance,
    )


def train_selection_score(net: ScoringNet, train: Dataset) -> float:
    """nDCG@5 on the training split; masked labels read as 0."""
    groups = [
        g.replace(labels=np.where(g.masked, 0.0, g.labels)) if g.masked.any() else g
        for g in train.groups
    ]
    metric, cutoff = SELECTION_KEY
    return evaluate_net(net, groups, train.label_max, [cutoff], [metric]).mean(metric, cutoff)


def run_erm_fold(
    config: ExperimentConfig, splits: Splits, fold: int, directory: Path
) -> FoldResult:
    train, vali, test = splits
    seed = derive_seed(config.seed, "init", fold, "net")
    net = build_scoring_net(config.network, train.feature_dim, seed)
    optimizer = make_optimizer(config)
    base = config.seed if config.ranker.seed is None else config.ranker.seed
    result = train_erm(
        config.ranker,
        net,
        train,
        config.epochs,
        optimizer,
        vali=vali,
        seed=derive_seed(base, "train", fold),
        log_path=directory / TRAIN_LOG_NAME,
    )
    best = result.best_record()
    vali_score = None if best is None else best.vali_ndcg5
    logger.info(
        "Fold %d: selected epoch %d (vali nDCG@5=%s)",
        fold,
        result.best_epoch,
        "n/a" if vali_score is None else f"{vali_score:.6f}",
    )
    save_checkpoint(directory / CHECKPOINT_NAME, result.best_net, result.best_optimizer)
    return FoldResult(
        fold=fold,
        test=_evaluate(config, result.best_net, test, max(train.label_max, test.label_max)),
        vali_selection=vali_score,
        train_selection=(
            train_selection_score(result.best_net, train) if vali_score is None else None
        ),
        best_epoch=result.best_epoch,
    )


def run_adversarial_fold(
    config: ExperimentConfig, splits: Splits, fold: int, directory: Path
) -> FoldResult:
    train, _vali, test = splits
    adv = config.adversarial
    logger.info("Fold %d: validation not used for model selection (adversarial run)", fold)
    d = train.feature_dim
    gen = build_scoring_net(adv.network, d, derive_seed(config.seed, "init", fold, "generator"))
    disc_seed = derive_seed(config.seed, "init", fold, "discriminator")
    disc = build_scoring_net(adv.network, d, disc_seed)
    base = config.seed if adv.seed is None else adv.seed
    gen_optimizer = make_optimizer(config)
    disc_optimizer = make_optimizer(config)
    train_adversarial(
        adv,
        gen,
        disc,
        train,
        config.epochs,
        gen_optimizer,
        disc_optimizer,
        test=test,
        seed=derive_seed(base, "adversarial", fold),
        log_path=directory / TRAIN_LOG_NAME,
    )
    label_max = max(train.label_max, test.label_max)
    players = {
        "generator": _evaluate(config, gen, test, label_max),
        "discriminator": _evaluate(config, disc, test, label_max),
    }
    reported = disc if adv.player == "discriminator" else gen
    save_checkpoint(
        directory / CHECKPOINT_NAME,
        reported,
        disc_optimizer if adv.player == "discriminator" else gen_optimizer,
    )
    return FoldResult(
        fold=fold,
        test=players[adv.player],
        train_selection=train_selection_score(reported, train),
        players=players,
    )


def run_fold(
    config: ExperimentConfig,
    splits: Splits,
    fold: int,
    run_root: Path,
    mask_ratio: float | None = None,
) -> FoldResult:
    """Train and evaluate one fold, writing its artifacts under ``fold<k>/``."""
    directory = fold_dir(run_root, fold)
    directory.mkdir(parents=True, exist_ok=True)
    clear_failure_marker(directory)
    train, vali, test = splits
    _check_unmasked(fold, vali, test)
    train = prepare_train_split(config, train, fold, mask_ratio)
    logger.info(
        "Fold %d start: %d train / %d vali / %d test queries",
        fold,
        len(train),
        len(vali),
        len(test),
    )
    if config.framework == "adversarial":
        result = run_adversarial_fold(config, (train, vali, test), fold, directory)
    else:
        result = run_erm_fold(config, (train, vali, test), fold, directory)
    _write_metrics(directory, fold, result)
    logger.info("Fold %d finish: test nDCG@5=%.6f", fold, _safe_mean(result.test, SELECTION_KEY))
    return result


def _safe_mean(report: MetricReport, key: tuple[str, int]) -> float:
    return report.mean(*key) if key in report.values else float("nan")


def _guarded_fold(
    config: ExperimentConfig,
    splits: Splits,
    fold: int,
    run_root: Path,
    mask_ratio: float | None,
) -> FoldResult | FoldFailure:
    try:
        return run_fold(config, splits, fold, run_root, mask_ratio)
    except CancelledRunError:
        raise
    except Exception as exc:  # noqa: BLE001
        write_failure_marker(fold_dir(run_root, fold), exc)
        logger.warning("Fold %d failed: %s", fold, exc)
        if isinstance(exc, LTRError):
            return FoldFailure(detail=f"fold {fold}: {exc}", fold=fold, cause=exc.error)
        return FoldFailure(detail=f"fold {fold}: {type(exc).__name__}: {exc}", fold=fold)


def fold_splits(config: ExperimentConfig, data: Dataset | Splits) -> list[Splits]:
    if isinstance(data, tuple):
        return [data]
    plan = make_folds(data, config.evaluation.num_folds, derive_seed(config.seed, "folds"))
    return [plan.splits(data, i) for i in range(plan.num_folds)]


def summary_rows(result: CrossValidationResult) -> list[dict[str, str | int]]:
    rows: list[dict[str, str | int]] = []
    for f in result.folds:
        rows.extend(f.test.to_rows(str(f.fold), "test"))
    if result.folds:
        rows.extend(result.report.to_rows("mean", "test"))
    return rows


def run_cross_validation(
    config: ExperimentConfig,
    dataset: Dataset | Splits | None = None,
    out_dir: str | Path | None = None,
    mask_ratio: float | None = None,
    workers: int = 1,
) -> CrossValidationResult:
    """Run every fold of ``config`` and write ``summary.csv``; failed folds are recorded."""
    data = load_experiment_data(config) if dataset is None else dataset
    out = Path(config.output_dir if out_dir is None else out_dir)
    run_root = prepare_run_dir(out, config)
    splits = fold_splits(config, data)
    result = CrossValidationResult(config=config, run_dir=run_root)
    logger.info("Run %s: %s, %d folds", run_root.name, config.label(), len(splits))

    outcomes: list[FoldResult | FoldFailure]
    if workers > 1 and len(splits) > 1:
        outcomes = _run_parallel(config, splits, run_root, mask_ratio, workers)
    else:
        outcomes = []
        for fold, split in enumerate(splits):
            if cancel_event.is_set():
                raise CancelledRunError(fold=fold)
            outcomes.append(_guarded_fold(config, split, fold, run_root, mask_ratio))

    for fold, outcome in enumerate(outcomes):
        if isinstance(outcome, FoldFailure):
            result.failures[fold] = str(outcome)
        else:
            result.folds.append(outcome)
    write_report_csv(run_root / SUMMARY_NAME, summary_rows(result))
    if result.failures:
        logger.warning(
            "Run %s: %d of %d folds failed", run_root.name, len(result.failures), len(splits)
        )
    return result


def _run_parallel(
    config: ExperimentConfig,
    splits: Sequence[Splits],
    run_root: Path,
    mask_ratio: float | None,
    workers: int,
) -> list[FoldResult | FoldFailure]:
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(_guarded_fold, config, split, fold, run_root, mask_ratio)
            for fold, split in enumerate(splits)
        ]
        outcomes: list[FoldResult | FoldFailure] = []
        for fold, future in enumerate(futures):
            if cancel_event.is_set():
                for pending in futures[fold:]:
                    pending.cancel()
                raise CancelledRunError(fold=fold)
            outcomes.append(future.result())
    return outcomes
