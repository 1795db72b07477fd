"""On-disk layout of experiment runs.

    <out>/runs/<config-hash>/resolved_config.json
    <out>/runs/<config-hash>/fold<k>/{train_log.csv, checkpoint.npz, test_metrics.csv}
    <out>/runs/<config-hash>/fold<k>/FAILED          (only when the fold failed)
    <out>/runs/<config-hash>/summary.csv
    <out>/grid.csv, <out>/mask_sweep.csv, <out>/*_curve.csv
"""

import csv
import json
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path

from ltr.config import config_hash, write_resolved_config
from ltr.errors import error_record
from ltr.models.experiment import ExperimentConfig
from ltr.models.report import REPORT_COLUMNS

TRAIN_LOG_NAME = "train_log.csv"
CHECKPOINT_NAME = "checkpoint.npz"
TEST_METRICS_NAME = "test_metrics.csv"
SUMMARY_NAME = "summary.csv"
GRID_NAME = "grid.csv"
FAILED_MARKER = "FAILED"


def run_dir(out_dir: Path, config: ExperimentConfig) -> Path:
    return out_dir / "runs" / config_hash(config)


def fold_dir(run_root: Path, fold: int) -> Path:
    return run_root / f"fold{fold}"


def prepare_run_dir(out_dir: Path, config: ExperimentConfig) -> Path:
    root = run_dir(out_dir, config)
    root.mkdir(parents=True, exist_ok=True)
    write_resolved_config(config, root)
    return root


def write_csv(
    path: Path, columns: Sequence[str], rows: Iterable[Mapping[str, object]]
) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    return path


def read_csv(path: Path) -> list[dict[str, str]]:
    with path.open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def write_report_csv(path: Path, rows: Iterable[Mapping[str, object]]) -> Path:
    return write_csv(path, REPORT_COLUMNS, rows)


def write_curve_csv(path: Path, xs: Sequence[float], ys: Sequence[float]) -> Path:
    """Two-column ``x,y`` plot data."""
    rows = ({"x": x, "y": f"{y:.6f}"} for x, y in zip(xs, ys, strict=True))
    return write_csv(path, ("x", "y"), rows)


def write_failure_marker(directory: Path, exc: BaseException) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    marker = directory / FAILED_MARKER
    marker.write_text(
        json.dumps(error_record(exc).model_dump(exclude_none=True), default=str) + "\n",
        encoding="utf-8",
    )
    return marker


def clear_failure_marker(directory: Path) -> None:
    (directory / FAILED_MARKER).unlink(missing_ok=True)
