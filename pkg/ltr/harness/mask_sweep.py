"""Robustness to unlabelled training documents: nDCG@1 as the masking ratio grows."""

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ltr.config import with_overrides
from ltr.errors import CancelledRunError, ConfigError
from ltr.models.data import Dataset
from ltr.models.experiment import ExperimentConfig
from ltr.state import cancel_event

from .cross_validation import (
    CrossValidationResult,
    Splits,
    load_experiment_data,
    run_cross_validation,
)
from .runs import write_csv

logger = logging.getLogger(__name__)

MASK_SWEEP_NAME = "mask_sweep.csv"
PLAYER_SUFFIX = {"discriminator": "D", "generator": "G"}


@dataclass
class MaskSweepResult:
    ratios: list[float]
    values: dict[str, list[float]] = field(default_factory=dict)
    runs: dict[tuple[str, float], CrossValidationResult] = field(default_factory=dict)

    def drop(self, row: str) -> float:
        """nDCG@1 lost between the first and the last ratio."""
        series = self.values[row]
        return series[0] - series[-1]


def _ndcg1(result: CrossValidationResult, player: str | None) -> float:
    report = result.report if player is None else result.player_report(player)
    if ("nDCG", 1) not in report.values:
        raise ConfigError(detail="mask sweep needs cutoff 1", key="evaluation.cutoffs")
    return report.mean("nDCG", 1)


def mask_sweep(
    ratios: Sequence[float],
    base: ExperimentConfig,
    variants: Mapping[str, Mapping[str, Any]] | None = None,
    dataset: Dataset | Splits | None = None,
    out_dir: str | Path | None = None,
    workers: int = 1,
    include_generator: bool = True,
) -> MaskSweepResult:
    """Cross-validate each variant at each ratio; only training splits are masked.

    ``variants`` maps a row label to dotted overrides of ``base``. Adversarial
    variants contribute a ``(D)`` row and, with ``include_generator``, a ``(G)`` row.
    """
    if any(not 0.0 <= r <= 1.0 for r in ratios):
        raise ConfigError(detail="mask ratios must lie in [0, 1]", key="evaluation.mask_ratios")
    variants = variants or {base.label(): {}}
    out = Path(base.output_dir if out_dir is None else out_dir)
    data = load_experiment_data(base) if dataset is None else dataset
    result = MaskSweepResult(ratios=list(ratios))

    for name, overrides in variants.items():
        for ratio in ratios:
            if cancel_event.is_set():
                raise CancelledRunError(variant=name, ratio=ratio)
            config = with_overrides(base, {**overrides, "data.mask_ratio": ratio})
            logger.info("Mask sweep %s at ratio %g", name, ratio)
            run = run_cross_validation(config, data, out, workers=workers)
            result.runs[(name, ratio)] = run
            if config.framework == "adversarial":
                players = ["discriminator", "generator"] if include_generator else ["discriminator"]
                for player in players:
                    row = f"{name} ({PLAYER_SUFFIX[player]})"
                    result.values.setdefault(row, []).append(_ndcg1(run, player))
            else:
                result.values.setdefault(name, []).append(_ndcg1(run, None))

    write_mask_sweep_csv(out / MASK_SWEEP_NAME, result)
    return result


def write_mask_sweep_csv(path: Path, result: MaskSweepResult) -> Path:
    ratio_columns = [f"{r:g}" for r in result.ratios]
    rows = (
        {"ranker": row, **{c: f"{v:.6f}" for c, v in zip(ratio_columns, series, strict=True)}}
        for row, series in result.values.items()
    )
    return write_csv(path, ["ranker", *ratio_columns], rows)
