"""Command-line entry point.

    python -m ltr datastats --data train.txt
    python -m ltr train --config exp.json --set optimizer.lr=0.01 --out out/
    python -m ltr evaluate --config exp.json --checkpoint out/runs/<hash>/fold0/checkpoint.npz
    python -m ltr gridsearch --config exp.json --axis network.activation='["ReLU","ELU"]'
    python -m ltr masksweep --config adv.json --variant 'IRGAN-Point={"adversarial.k": 1}'

Exit status: 0 success, 1 partial fold failure or runtime error, 2 config/parse error.
"""

import argparse
import json
import logging
import signal
import sys
from collections.abc import Sequence
from pathlib import Path
from types import FrameType
from typing import Any

from pydantic import ValidationError

from ltr import state
from ltr.config import get_settings, parse_config, with_overrides, write_resolved_config
from ltr.data.letor import load_dataset
from ltr.data.preprocess import dataset_stats
from ltr.errors import EXIT_OK, EXIT_PARTIAL_FAILURE, ConfigError, handle_error
from ltr.harness.cross_validation import (
    CrossValidationResult,
    load_experiment_data,
    run_cross_validation,
)
from ltr.harness.grid import grid_search, layer_sweep
from ltr.harness.mask_sweep import mask_sweep
from ltr.harness.runs import TEST_METRICS_NAME, write_report_csv
from ltr.logging_setup import configure_logging, level_from_flags
from ltr.metrics import evaluate_net
from ltr.models.experiment import ExperimentConfig, GridSpec
from ltr.models.report import metric_label
from ltr.nn.checkpoint import load_checkpoint

logger = logging.getLogger(__name__)

COMMANDS = ("datastats", "train", "evaluate", "gridsearch", "masksweep")


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON experiment config")
    common.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Dotted-key override, repeatable (value parsed as JSON when possible)",
    )
    common.add_argument("--out", type=Path, help="Output directory (default: $LTR_OUT_DIR)")
    common.add_argument("--workers", type=int, help="Parallel fold workers")
    common.add_argument("--seed", type=int, help="Top-level seed")
    common.add_argument("--data", help="LETOR file to use instead of the configured source")
    common.add_argument("-v", "--verbose", action="count", default=0)
    common.add_argument("-q", "--quiet", action="count", default=0)
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="ltr", description="Neural learning-to-rank toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("datastats", parents=[common], help="Query/document/label counts")
    sub.add_parser("train", parents=[common], help="Cross-validated training run")

    evaluate = sub.add_parser(
        "evaluate", parents=[common], help="Score a dataset with a checkpoint"
    )
    evaluate.add_argument("--checkpoint", type=Path, required=True)

    grid = sub.add_parser("gridsearch", parents=[common], help="Exhaustive grid search")
    grid.add_argument("--grid", type=Path, help="JSON grid spec {\"axes\": {...}}")
    grid.add_argument(
        "--axis",
        action="append",
        default=[],
        metavar="KEY=JSON_LIST",
        help="Grid axis, repeatable",
    )
    grid.add_argument(
        "--layer-sweep",
        action="store_true",
        help="Sweep the layer count 2..20 and write layers_curve.csv",
    )

    sweep = sub.add_parser("masksweep", parents=[common], help="nDCG@1 against masking ratio")
    sweep.add_argument(
        "--variant",
        action="append",
        default=[],
        metavar="NAME=JSON_OVERRIDES",
        help="Row label and dotted overrides, repeatable",
    )
    sweep.add_argument("--ratios", help="Comma-separated ratios (default: evaluation.mask_ratios)")
    return parser


def _install_signal_handlers() -> dict[int, Any]:
    def _request_stop(signum: int, _frame: FrameType | None) -> None:
        logger.warning("Received signal %d, stopping at the next fold boundary", signum)
        state.request_cancel()

    previous = {}
    for signum in (signal.SIGINT, signal.SIGTERM):
        previous[signum] = signal.getsignal(signum)
        signal.signal(signum, _request_stop)
    return previous


def _output_dir(args: argparse.Namespace) -> Path:
    if args.out is not None:
        return Path(args.out)
    settings = get_settings()
    return Path(settings.out_dir) if settings.out_dir else Path("out")


def load_config(args: argparse.Namespace, out_dir: Path) -> ExperimentConfig:
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    config = parse_config(args.config, overrides)
    extra: dict[str, Any] = {"output_dir": str(out_dir)}
    if args.data is not None:
        extra.update({"data.path": args.data, "data.fold_dir": None, "data.synthetic": None})
    config = with_overrides(config, extra)
    write_resolved_config(config, out_dir)
    return config


def _parse_json_pair(raw: str, what: str) -> tuple[str, Any]:
    if "=" not in raw:
        raise ConfigError(detail=f"{what} must look like NAME=JSON", value=raw)
    name, _, text = raw.partition("=")
    try:
        return name.strip(), json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(detail=f"{what} value is not valid JSON", value=raw) from exc


def load_grid(args: argparse.Namespace) -> GridSpec:
    axes: dict[str, list[Any]] = {}
    max_cells = GridSpec.model_fields["max_cells"].default
    if args.grid is not None:
        try:
            raw = json.loads(Path(args.grid).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(detail="grid file not readable", path=str(args.grid)) from exc
        axes.update(raw.get("axes", {}))
        max_cells = raw.get("max_cells", max_cells)
    for raw_axis in args.axis:
        key, values = _parse_json_pair(raw_axis, "--axis")
        if not isinstance(values, list):
            raise ConfigError(detail="--axis values must be a JSON list", key=key)
        axes[key] = values
    try:
        return GridSpec(axes=axes, max_cells=max_cells)
    except ValueError as exc:
        raise ConfigError(detail=str(exc), key="grid") from exc


def _print_report(label: str, result: CrossValidationResult) -> None:
    report = result.report
    print(f"{label}: {len(result.folds)} folds, run {result.run_dir}")
    for metric, cutoff in report.keys():
        print(f"  {metric_label(metric, cutoff):<10} {report.mean(metric, cutoff):.6f}")
    for fold, message in sorted(result.failures.items()):
        print(f"  fold {fold} FAILED: {message}")


def cmd_datastats(args: argparse.Namespace, out_dir: Path) -> int:
    if args.data is not None and args.config is None:
        print(dataset_stats(load_dataset(args.data)).format())
        return EXIT_OK
    config = load_config(args, out_dir)
    data = load_experiment_data(config)
    if isinstance(data, tuple):
        for name, split in zip(("train", "vali", "test"), data, strict=True):
            print(f"{name}: {dataset_stats(split).format()}")
    else:
        print(dataset_stats(data).format())
    return EXIT_OK


def cmd_train(args: argparse.Namespace, out_dir: Path) -> int:
    config = load_config(args, out_dir)
    workers = args.workers or get_settings().workers
    result = run_cross_validation(config, out_dir=out_dir, workers=workers)
    _print_report(config.label(), result)
    return EXIT_PARTIAL_FAILURE if result.partial_failure else EXIT_OK


def cmd_evaluate(args: argparse.Namespace, out_dir: Path) -> int:
    config = load_config(args, out_dir)
    net, _ = load_checkpoint(args.checkpoint)
    data = load_experiment_data(config)
    dataset = data[2] if isinstance(data, tuple) else data
    e = config.evaluation
    report = evaluate_net(
        net,
        dataset.groups,
        dataset.label_max,
        e.cutoffs,
        e.metrics,
        e.relevance_threshold,
        e.skip_zero_relevance,
    )
    path = write_report_csv(out_dir / TEST_METRICS_NAME, report.to_rows("checkpoint", "test"))
    for metric, cutoff in report.keys():
        print(f"{metric_label(metric, cutoff):<10} {report.mean(metric, cutoff):.6f}")
    logger.info("Metrics written to %s", path)
    return EXIT_OK


def cmd_gridsearch(args: argparse.Namespace, out_dir: Path) -> int:
    config = load_config(args, out_dir)
    workers = args.workers or get_settings().workers
    if args.layer_sweep:
        rows = layer_sweep(config, out_dir=out_dir, workers=workers)
    else:
        rows = grid_search(load_grid(args), config, out_dir=out_dir, workers=workers)
    for row in rows:
        marker = "*" if row.best else " "
        print(f"{marker} {row.rank:>3} {row.cell} selection={row.result.selection_score:.6f}")
    failed = any(row.result.partial_failure for row in rows)
    return EXIT_PARTIAL_FAILURE if failed else EXIT_OK


def cmd_masksweep(args: argparse.Namespace, out_dir: Path) -> int:
    config = load_config(args, out_dir)
    if args.ratios:
        try:
            ratios = [float(r) for r in args.ratios.split(",")]
        except ValueError as exc:
            raise ConfigError(detail="--ratios must be comma-separated numbers") from exc
    else:
        ratios = list(config.evaluation.mask_ratios)
    variants: dict[str, dict[str, Any]] = {}
    for raw in args.variant:
        name, overrides = _parse_json_pair(raw, "--variant")
        if not isinstance(overrides, dict):
            raise ConfigError(detail="--variant overrides must be a JSON object", variant=name)
        variants[name] = overrides
    workers = args.workers or get_settings().workers
    result = mask_sweep(ratios, config, variants or None, out_dir=out_dir, workers=workers)
    print("ranker," + ",".join(f"{r:g}" for r in result.ratios))
    for row, series in result.values.items():
        print(row + "," + ",".join(f"{v:.6f}" for v in series))
    failed = any(run.partial_failure for run in result.runs.values())
    return EXIT_PARTIAL_FAILURE if failed else EXIT_OK


HANDLERS = {
    "datastats": cmd_datastats,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "gridsearch": cmd_gridsearch,
    "masksweep": cmd_masksweep,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = get_settings()
    except ValidationError as exc:
        configure_logging()
        return handle_error(ConfigError(detail=f"invalid LTR_* environment: {exc}"))
    out_dir = _output_dir(args)
    configure_logging(
        level_from_flags(args.verbose, args.quiet, settings.log_level), out_dir / "ltr.log"
    )
    previous = _install_signal_handlers()
    state.reset()
    try:
        return HANDLERS[args.command](args, out_dir)
    except Exception as exc:  # noqa: BLE001
        return handle_error(exc, out_dir / "errors.log")
    finally:
        for signum, handler in previous.items():
            signal.signal(signum, handler)


if __name__ == "__main__":
    sys.exit(main())
