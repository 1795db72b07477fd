"""Exhaustive grid search over dotted config keys, ranked by validation nDCG@5."""

import json
import logging
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from ltr.config import config_hash, with_overrides
from ltr.errors import CancelledRunError, ConfigError
from ltr.models.data import Dataset
from ltr.models.experiment import ExperimentConfig, GridSpec
from ltr.state import cancel_event

from .cross_validation import (
    CrossValidationResult,
    Splits,
    load_experiment_data,
    run_cross_validation,
)
from .runs import GRID_NAME, write_csv, write_curve_csv

logger = logging.getLogger(__name__)

RESULT_COLUMNS = (
    "config_hash",
    "label",
    "selection_ndcg@5",
    "test_ndcg@1",
    "test_ndcg@5",
    "failed_folds",
    "best",
)


@dataclass
class GridRow:
    rank: int
    cell: dict[str, Any]
    result: CrossValidationResult
    best: bool = False

    @property
    def config(self) -> ExperimentConfig:
        return self.result.config

    def test_mean(self, metric: str, cutoff: int) -> float | None:
        report = self.result.report
        if (metric, cutoff) not in report.values or not len(report):
            return None
        return report.mean(metric, cutoff)


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.6f}"


def _cell_value(value: Any) -> str:
    return value if isinstance(value, str) else json.dumps(value)


def grid_configs(
    grid: GridSpec, base: ExperimentConfig
) -> list[tuple[dict[str, Any], ExperimentConfig]]:
    """Validate every cell before anything runs."""
    if grid.size > grid.max_cells:
        raise ConfigError(
            detail="grid exceeds max_cells",
            key="grid.max_cells",
            size=grid.size,
            limit=grid.max_cells,
        )
    return [(cell, with_overrides(base, cell)) for cell in grid.cells()]


def _touches_data(grid: GridSpec) -> bool:
    return any(key == "data" or key.startswith("data.") or key == "seed" for key in grid.axes)


def grid_search(
    grid: GridSpec,
    base: ExperimentConfig,
    dataset: Dataset | Splits | None = None,
    out_dir: str | Path | None = None,
    workers: int = 1,
) -> list[GridRow]:
    """Cross-validate every cell and rank them; ties keep grid order."""
    cells = grid_configs(grid, base)
    out = Path(base.output_dir if out_dir is None else out_dir)
    shared = dataset
    if shared is None and not _touches_data(grid):
        shared = load_experiment_data(base)
    logger.info("Grid search over %d cells (%s)", len(cells), ", ".join(grid.axes))

    evaluated: list[tuple[dict[str, Any], CrossValidationResult]] = []
    for i, (cell, config) in enumerate(cells):
        if cancel_event.is_set():
            raise CancelledRunError(cell=i)
        logger.info("Grid cell %d/%d: %s", i + 1, len(cells), cell)
        evaluated.append((cell, run_cross_validation(config, shared, out, workers=workers)))

    unvalidated = [i for i, (_, r) in enumerate(evaluated) if r.selection_split == "train"]
    if unvalidated:
        logger.info("Cells %s have no validation score; ranked by train nDCG@5", unvalidated)
    order = sorted(range(len(evaluated)), key=lambda i: -evaluated[i][1].selection_score)
    rows = [
        GridRow(rank=rank + 1, cell=evaluated[i][0], result=evaluated[i][1], best=rank == 0)
        for rank, i in enumerate(order)
    ]
    write_grid_csv(out / GRID_NAME, grid, rows)
    if rows:
        best = rows[0]
        logger.info("Best cell: %s (selection nDCG@5=%.6f)", best.cell, best.result.selection_score)
    return rows


def write_grid_csv(path: Path, grid: GridSpec, rows: Sequence[GridRow]) -> Path:
    axes = list(grid.axes)
    columns = ["rank", *axes, *RESULT_COLUMNS]
    records = []
    for row in rows:
        record: dict[str, object] = {"rank": row.rank}
        record.update({key: _cell_value(row.cell[key]) for key in axes})
        record.update(
            {
                "config_hash": config_hash(row.config),
                "label": row.config.label(),
                "selection_ndcg@5": _fmt(row.result.selection_score if row.result.folds else None),
                "test_ndcg@1": _fmt(row.test_mean("nDCG", 1)),
                "test_ndcg@5": _fmt(row.test_mean("nDCG", 5)),
                "failed_folds": len(row.result.failures),
                "best": int(row.best),
            }
        )
        records.append(record)
    return write_csv(path, columns, records)


def layer_key(base: ExperimentConfig) -> str:
    if base.framework == "adversarial":
        return "adversarial.network.num_layers"
    return "network.num_layers"


def layer_sweep(
    base: ExperimentConfig,
    layers: Sequence[int] = tuple(range(2, 21)),
    dataset: Dataset | Splits | None = None,
    out_dir: str | Path | None = None,
    workers: int = 1,
) -> list[GridRow]:
    """Grid over the layer count; also writes ``layers_curve.csv`` (layers, test nDCG@5)."""
    key = layer_key(base)
    grid = GridSpec(axes={key: list(layers)}, max_cells=max(len(layers), 1))
    rows = grid_search(grid, base, dataset, out_dir, workers)
    by_layers = sorted(rows, key=lambda r: r.cell[key])
    out = Path(base.output_dir if out_dir is None else out_dir)
    write_curve_csv(
        out / "layers_curve.csv",
        [r.cell[key] for r in by_layers],
        [r.test_mean("nDCG", 5) or 0.0 for r in by_layers],
    )
    return rows
