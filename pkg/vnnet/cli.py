"""Command-line entry point: ``vnnet {synth,ingest,train,eval,ablate,attribute}``."""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from collections.abc import Sequence
from dataclasses import dataclass, field
from datetime import UTC, datetime
from pathlib import Path
from typing import Any, Final

from . import __version__
from .config import REGIONS, TrainConfig, VisionBranch, data_root, load_config
from .data import SYNTHETIC_PRESETS, DatasetInfo, DatasetLayout, ingest_dataset, prepare_data, synthesize_dataset
from .errors import MissingInputError, VNNetError
from .interpret import (
    AttributionReport,
    attribute_split,
    contribution_report,
    modal_delta,
    plot_contributions,
    write_report_csv,
    write_report_json,
)
from .training import evaluate_checkpoint, load_checkpoint, run_ablation, train
from .variables import TARGET_FACTORS

logger = logging.getLogger(__name__)

MANIFEST_FILE: Final[str] = "manifest.json"
TRAIN_REPORT: Final[str] = "report.json"
HASH_CHUNK: Final[int] = 1 << 20
COMMANDS: Final[tuple[str, ...]] = ("synth", "ingest", "train", "eval", "ablate", "attribute")
EXIT_OK: Final[int] = 0
EXIT_FAILURE: Final[int] = 1


@dataclass(slots=True)
class RunManifest:
    """Everything needed to repeat one CLI run."""

    command: str
    argv: list[str]
    seed: int | None
    config: dict[str, Any] | None = None
    input_hash: str | None = None
    outputs: list[str] = field(default_factory=list)
    started: str = field(default_factory=lambda: datetime.now(UTC).isoformat())
    seconds: float = 0.0

    def write(self, directory: Path) -> Path:
        """Atomically replace ``directory/manifest.json``."""
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / MANIFEST_FILE
        staging = directory / f".{MANIFEST_FILE}.tmp"
        payload = {
            "version": __version__,
            "command": self.command,
            "argv": self.argv,
            "seed": self.seed,
            "config": self.config,
            "input_hash": self.input_hash,
            "outputs": self.outputs,
            "started": self.started,
            "seconds": round(self.seconds, 3),
        }
        staging.write_text(json.dumps(payload, indent=2) + "\n")
        os.replace(staging, path)
        return path


def content_hash(root: Path) -> str:
    """Git-style tree hash: blob digests of every file (manifests excluded), hashed with their paths."""
    tree = hashlib.sha1()
    paths = sorted(path for path in root.rglob("*") if path.is_file() and path.name != MANIFEST_FILE)
    for path in paths:
        blob = hashlib.sha1(b"blob %d\0" % path.stat().st_size)
        with path.open("rb") as handle:
            while chunk := handle.read(HASH_CHUNK):
                blob.update(chunk)
        tree.update(f"{path.relative_to(root).as_posix()} {blob.hexdigest()}\n".encode())
    return tree.hexdigest()


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vnnet",
        description="Multi-modal station + satellite weather forecasting.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=("DEBUG", "INFO", "WARNING", "ERROR"),
        help="Root logger level (default: %(default)s).",
    )
    commands = parser.add_subparsers(dest="command", required=True, metavar="{" + ",".join(COMMANDS) + "}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML file with TrainConfig keys.")
    common.add_argument("--seed", type=int, help="Root seed for every random stream.")
    common.add_argument("--region", choices=REGIONS, help="Study region (default: synthetic).")
    common.add_argument("--factor", choices=sorted(TARGET_FACTORS), help="Forecast target.")
    common.add_argument("--out", type=Path, help="Run directory (default: runs/<command>).")
    common.add_argument(
        "--data",
        "--dataset",
        dest="data",
        help=f"Dataset directory or a synthetic preset ({', '.join(SYNTHETIC_PRESETS)}); "
        "falls back to $VNNET_DATA_ROOT/<region>.",
    )

    synth = commands.add_parser("synth", parents=[common], help="Write a seeded synthetic dataset.")
    synth.add_argument("--preset", choices=sorted(SYNTHETIC_PRESETS), default="synthetic-micro")

    commands.add_parser("ingest", parents=[common], help="Convert raw tiles and station CSV into NPY arrays.")

    for name, help_text in (("train", "Train one model."), ("ablate", "Train the five-row ablation ladder.")):
        sub = commands.add_parser(name, parents=[common], help=help_text)
        sub.add_argument("--epochs", type=int, help="Override the number of epochs.")

    evaluate = commands.add_parser("eval", parents=[common], help="Score a checkpoint on one split.")
    evaluate.add_argument("--checkpoint", type=Path, help="Checkpoint written by `train`.")
    evaluate.add_argument("--split", default="test", choices=("train", "validation", "test"))

    attribute = commands.add_parser("attribute", parents=[common], help="Integrated-gradients factor report.")
    attribute.add_argument("--checkpoint", type=Path, help="Checkpoint to explain.")
    attribute.add_argument("--compare", type=Path, help="Numerical-only checkpoint for the modal delta.")
    attribute.add_argument("--split", default="test", choices=("train", "validation", "test"))
    attribute.add_argument("--steps", type=int, help="Path points (default: config ig_steps).")
    attribute.add_argument("--windows", type=int, default=8, help="Windows to average (default: %(default)s).")
    attribute.add_argument("--l1-over-outputs", action="store_true", help="Take |.| per forecast output.")
    attribute.add_argument("--figure", action="store_true", help="Also write a stacked-bar PNG.")
    return parser


def _configure_logging(level: str) -> None:
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _out_dir(args: argparse.Namespace) -> Path:
    if args.out is not None:
        return args.out
    return Path("data") / "synthetic" if args.command == "synth" else Path("runs") / args.command


def _config(args: argparse.Namespace) -> TrainConfig:
    return load_config(
        args.config,
        seed=args.seed,
        region=args.region,
        target=args.factor,
        epochs=getattr(args, "epochs", None),
    )


def _dataset_root(args: argparse.Namespace, config: TrainConfig, out: Path) -> Path:
    if args.data in SYNTHETIC_PRESETS:
        root = out / "data"
        if not DatasetLayout(root).info_path.exists():
            synthesize_dataset(root, SYNTHETIC_PRESETS[args.data], config.seed)
        return root
    if args.data is not None:
        return Path(args.data)
    root = data_root()
    if root is None:
        raise MissingInputError("no dataset: pass --data/--dataset or set VNNET_DATA_ROOT")
    return root / config.region


def _require(value: Path | None, flag: str) -> Path:
    if value is None:
        raise MissingInputError(f"missing required flag {flag}")
    if not value.exists():
        raise MissingInputError(f"{flag} {value} does not exist")
    return value


def _synth(args: argparse.Namespace, manifest: RunManifest) -> None:
    out = _out_dir(args)
    seed = args.seed if args.seed is not None else load_config(args.config).seed
    summary = synthesize_dataset(out, SYNTHETIC_PRESETS[args.preset], seed)
    manifest.seed = seed
    manifest.input_hash = content_hash(out)
    manifest.outputs = [str(out)]
    print(f"{out}: {summary.stations} stations, {summary.hours} hours, {summary.frames} satellite frames")


def _ingest(args: argparse.Namespace, manifest: RunManifest) -> None:
    config = _config(args)
    root = _dataset_root(args, config, _out_dir(args))
    layout = DatasetLayout(root)
    info = None
    if not layout.info_path.exists():
        if config.region == "synthetic":
            raise MissingInputError(f"{layout.info_path} not found; synthetic datasets come from `vnnet synth`")
        info = DatasetInfo.for_region(config.region)
    summary = ingest_dataset(root, info)
    manifest.input_hash = content_hash(root)
    manifest.outputs = [str(layout.numerical_npy), str(layout.vision_dir)]
    print(f"{root}: {summary.hours} hours, {summary.frames} frames, {summary.skipped_hours} hours without tiles")


def _train(args: argparse.Namespace, manifest: RunManifest) -> None:
    config = _config(args)
    out = _out_dir(args)
    root = _dataset_root(args, config, out)
    result = train(config, prepare_data(root, config), out)
    report = out / TRAIN_REPORT
    report.write_text(
        json.dumps({"validation": result.validation.to_dict(), "test": result.test.to_dict()}, indent=2) + "\n"
    )
    manifest.config = config.to_dict()
    manifest.seed = config.seed
    manifest.input_hash = content_hash(root)
    manifest.outputs = [str(result.checkpoint_path), str(result.metric_log), str(report)]
    print(
        f"best epoch {result.best_epoch}: validation MAE {result.validation.mae:.4f}, "
        f"test MAE {result.test.mae:.4f} RMSE {result.test.rmse:.4f}"
    )


def _eval(args: argparse.Namespace, manifest: RunManifest) -> None:
    path = _require(args.checkpoint, "--checkpoint")
    config = load_checkpoint(path).config
    out = _out_dir(args)
    root = _dataset_root(args, config, out)
    report = evaluate_checkpoint(path, prepare_data(root, config), args.split)
    target = out / f"eval-{args.split}.json"
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    manifest.config = config.to_dict()
    manifest.seed = config.seed
    manifest.input_hash = content_hash(root)
    manifest.outputs = [str(target)]
    print(f"{args.split}: MAE {report.mae:.4f} RMSE {report.rmse:.4f} over {report.windows} windows")


def _ablate(args: argparse.Namespace, manifest: RunManifest) -> None:
    config = _config(args)
    out = _out_dir(args)
    root = _dataset_root(args, config, out)
    # Rows 3-5 need the frames whatever the base configuration says.
    data = prepare_data(root, config.replace(vision_branch=VisionBranch.V_LSTM))
    table = run_ablation(config, data, out)
    manifest.config = config.to_dict()
    manifest.seed = config.seed
    manifest.input_hash = content_hash(root)
    manifest.outputs = [str(out / "ablation.csv")]
    print(table[["configuration", "parameters", "test_mae", "test_rmse"]].to_string(index=False))


def _report_for(
    path: Path,
    args: argparse.Namespace,
    root: Path,
    steps: int | None,
) -> tuple[AttributionReport, TrainConfig]:
    checkpoint = load_checkpoint(path)
    data = prepare_data(root, checkpoint.config)
    ig = attribute_split(
        checkpoint.restore_model(),
        data.split(args.split),
        steps or checkpoint.config.ig_steps,
        limit=args.windows,
        l1_over_outputs=args.l1_over_outputs,
    )
    return contribution_report(ig, data.schema.channels, data.schema.static_indices), checkpoint.config


def _attribute(args: argparse.Namespace, manifest: RunManifest) -> None:
    path = _require(args.checkpoint, "--checkpoint")
    out = _out_dir(args)
    root = _dataset_root(args, load_checkpoint(path).config, out)
    report, config = _report_for(path, args, root, args.steps)
    extra: dict[str, Any] = {}
    if args.compare is not None:
        baseline, _ = _report_for(_require(args.compare, "--compare"), args, root, args.steps)
        delta_top5, delta_sic = modal_delta(baseline, report)
        extra["modal_delta"] = {"top5_mfc": delta_top5, "sic": delta_sic}
    outputs = [out / "attribution.json", out / "attribution.csv"]
    write_report_json(report, outputs[0], **extra)
    write_report_csv(report, outputs[1])
    if args.figure:
        outputs.append(plot_contributions(report, out / "attribution.png", title=config.target))
    manifest.config = config.to_dict()
    manifest.seed = config.seed
    manifest.input_hash = content_hash(root)
    manifest.outputs = [str(item) for item in outputs]
    print(f"Top-5 MFC {report.top5_mfc:.2f}% ({', '.join(report.top5)}), SIC {report.sic:.2f}%")


def dispatch(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.log_level)
    manifest = RunManifest(args.command, list(sys.argv[1:] if argv is None else argv), args.seed)
    started = time.perf_counter()
    try:
        match args.command:
            case "synth":
                _synth(args, manifest)
            case "ingest":
                _ingest(args, manifest)
            case "train":
                _train(args, manifest)
            case "eval":
                _eval(args, manifest)
            case "ablate":
                _ablate(args, manifest)
            case "attribute":
                _attribute(args, manifest)
            case _:  # pragma: no cover - argparse restricts the choices
                parser.error(f"unknown command {args.command!r}")
    except (VNNetError, OSError) as exc:
        logger.debug("Run failed", exc_info=True)
        print(f"vnnet {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    manifest.seconds = time.perf_counter() - started
    manifest.write(_out_dir(args))
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    return dispatch(argv)


__all__ = [
    "COMMANDS",
    "MANIFEST_FILE",
    "MissingInputError",
    "RunManifest",
    "TRAIN_REPORT",
    "content_hash",
    "dispatch",
    "main",
]


if __name__ == "__main__":
    raise SystemExit(main())
