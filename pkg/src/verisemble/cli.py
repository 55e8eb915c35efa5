"""Command-line interface.

Four subcommands cover the operational surface: ``run`` executes the
full pipeline over a frame directory, ``eval`` scores a detections file
against ground truth, ``bench`` measures inference latency and model
sizes, and ``simulate`` drives the fusion stage with synthetic
classifier outputs to study error rates without trained weights.

Exit codes are a stable contract: 0 success, 2 usage or input error,
1 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import traceback
from pathlib import Path
from time import perf_counter
from typing import Sequence

from .config import PipelineConfig, load_config
from .ensemble import FusionConfig, PredictionSeries, fuse_video
from .errors import ValidationError, VerisembleError
from .evaluate import (
    BenchReport,
    DetectionEvent,
    ScoreReport,
    SplitMix64,
    frame_metrics,
    match_score,
    simulate_predictor,
)
from .frameio import (
    Frame,
    load_detections,
    load_ground_truth,
    load_manifest,
    load_sequence,
    write_detections,
)
from .nn import count_params
from .pipeline import CnnModel, build_stage_models, run_pipeline
from .preprocess import extract_features, resize_aa

__all__ = ["main", "build_parser"]

logger = logging.getLogger(__name__)


def _score_report_obj(report: ScoreReport) -> dict:
    return {
        "video": report.video,
        "precision": report.precision,
        "recall": report.recall,
        "f1": report.f1,
        "events": report.events,
        "matched": report.matched_events,
        "intervals": report.intervals,
        "intervals_matched": report.matched_intervals,
    }


def _dump_json(obj: object) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# -- run -------------------------------------------------------------------


def _resolve_fps(config: PipelineConfig, manifest_fps: float) -> float:
    return config.fps if config.fps is not None else manifest_fps


def _write_predictions_csv(
    path: Path,
    config: PipelineConfig,
    stage_series: Sequence[PredictionSeries],
    fused: PredictionSeries,
) -> None:
    columns = ["frame_index"]
    for k, stage in enumerate(config.stages):
        columns.append(f"stage{k}_{stage.channels.value}_label")
        columns.append(f"stage{k}_{stage.channels.value}_score")
    columns += ["final_label", "final_score"]
    lines = [",".join(columns)]
    for i in range(len(fused)):
        row = [str(i)]
        for series in stage_series:
            row.append(str(int(series.labels[i])))
            row.append(repr(series.scores[i]))
        row.append(str(int(fused.labels[i])))
        row.append(repr(fused.scores[i]))
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")


def cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    frames_dir = Path(args.frames)
    manifest_path = Path(args.manifest) if args.manifest else frames_dir / "manifest.json"
    manifest = load_manifest(manifest_path)
    frames = load_sequence(frames_dir, manifest_path=manifest_path, workers=args.workers)
    fps = _resolve_fps(config, manifest.fps)

    result = run_pipeline(config, frames, fps=fps, workers=args.workers)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_detections(
        [(event.timestamp_s, event.peak_score) for event in result.events],
        out_dir / "detections.csv",
    )
    _write_predictions_csv(
        out_dir / "predictions.csv", config, result.stage_series, result.fused
    )

    if args.gt is not None:
        gt = load_ground_truth(args.gt)
        report = match_score(result.events, gt, tolerance_s=args.tol, video=frames_dir.name)
        (out_dir / "report.json").write_text(_dump_json(_score_report_obj(report)))
    return 0


# -- eval ------------------------------------------------------------------


def cmd_eval(args: argparse.Namespace) -> int:
    rows = load_detections(args.detections)
    gt = load_ground_truth(args.gt)
    events = []
    for t, score in rows:
        frame = int(round(t * args.fps))
        events.append(
            DetectionEvent(
                start_frame=frame, end_frame=frame, timestamp_s=t, peak_score=score
            )
        )
    report = match_score(events, gt, tolerance_s=args.tol)
    sys.stdout.write(_dump_json(_score_report_obj(report)))
    return 0


# -- bench -----------------------------------------------------------------


def _stage_features(config: PipelineConfig, frames: Sequence[Frame]) -> list[list]:
    """Per-frame, per-stage feature tensors, resizing each frame once."""
    prepared: list[list] = []
    for frame in frames:
        resized = resize_aa(frame, config.input_width, config.input_height)
        prepared.append(
            [
                extract_features(resized, stage.channels, config.luma_coefficients)
                for stage in config.stages
            ]
        )
    return prepared


def _bench_once(
    models: Sequence[object],
    prepared: Sequence[Sequence],
    warmup: int,
    params: Sequence[int],
) -> BenchReport:
    for k in range(warmup):
        for model, features in zip(models, prepared[k % len(prepared)]):
            model.score(features)  # type: ignore[attr-defined]
    samples = []
    for per_stage in prepared:
        t0 = perf_counter()
        for model, features in zip(models, per_stage):
            model.score(features)  # type: ignore[attr-defined]
        samples.append((perf_counter() - t0) * 1e3)
    return BenchReport.from_samples(samples, params_per_model=params)


def cmd_bench(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    frames = load_sequence(Path(args.frames), manifest_path=args.manifest, workers=1)
    if not frames:
        raise ValidationError("bench needs at least one frame")
    if args.repeats < 1:
        raise ValidationError(f"repeats must be >= 1, got {args.repeats}")
    models = build_stage_models(config)
    params = tuple(
        count_params(model.spec) if isinstance(model, CnnModel) else 0
        for model in models
    )
    prepared = _stage_features(config, frames)

    reports = []
    for _ in range(args.repeats):
        report = _bench_once(models, prepared, args.warmup, params)
        reports.append(
            {
                "stages": [
                    {"channels": stage.channels.value, "params": n}
                    for stage, n in zip(config.stages, params)
                ],
                "params_total": report.params_total,
                "frames": len(frames),
                "warmup": args.warmup,
                "latency_ms": {
                    "mean": report.mean_ms,
                    "median": report.median_ms,
                    "p95": report.p95_ms,
                },
            }
        )

    out: dict = {"reports": reports}
    if args.throughput_workers is not None:
        if args.throughput_workers < 1:
            raise ValidationError(
                f"throughput workers must be >= 1, got {args.throughput_workers}"
            )
        t0 = perf_counter()
        run_pipeline(config, frames, fps=1.0, workers=args.throughput_workers)
        wall_s = perf_counter() - t0
        out["throughput"] = {
            "workers": args.throughput_workers,
            "frames": len(frames),
            "wall_ms": wall_s * 1e3,
            "frames_per_s": len(frames) / wall_s if wall_s > 0 else None,
        }
    sys.stdout.write(_dump_json(out))
    return 0


# -- simulate --------------------------------------------------------------


def _load_labels(path: str | Path) -> tuple[bool, ...]:
    labels: list[bool] = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line == "0":
            labels.append(False)
        elif line == "1":
            labels.append(True)
        else:
            raise ValidationError(f"{path} row {lineno}: labels must be 0 or 1, got {line!r}")
    return tuple(labels)


def _simulate_fusion_config(args: argparse.Namespace) -> FusionConfig:
    base = load_config(args.config).fusion if args.config else FusionConfig()
    pack_size = args.pack_size if args.pack_size is not None else base.pack_size
    window = (
        args.neighbor_window if args.neighbor_window is not None else base.neighbor_window
    )
    if args.packing == "on":
        packing = True
    elif args.packing == "off":
        packing = False
    else:
        packing = base.packing_enabled
    return FusionConfig(
        pack_size=pack_size, neighbor_window=window, packing_enabled=packing
    )


def cmd_simulate(args: argparse.Namespace) -> int:
    truth = _load_labels(args.labels)
    fusion = _simulate_fusion_config(args)
    rng = SplitMix64(args.seed)
    primary = simulate_predictor(truth, args.primary_tpr, args.primary_fpr, rng.spawn())
    verifier = simulate_predictor(truth, args.verifier_tpr, args.verifier_fpr, rng.spawn())
    fused = fuse_video(primary, verifier, fusion)

    out = {
        "frames": len(truth),
        "positives": sum(truth),
        "seed": args.seed,
        "before": frame_metrics(truth, primary.labels).to_json_obj(),
        "after": frame_metrics(truth, fused.labels).to_json_obj(),
    }
    sys.stdout.write(_dump_json(out))
    return 0


# -- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="verisemble",
        description="Verification-based two-stage frame classification ensemble.",
    )
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="log progress to stderr"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the pipeline over a frame directory")
    run.add_argument("--config", required=True, help="pipeline config JSON")
    run.add_argument("--frames", required=True, help="directory of frames + manifest")
    run.add_argument("--manifest", default=None, help="manifest path (default: <frames>/manifest.json)")
    run.add_argument("--gt", default=None, help="ground-truth CSV; enables report.json")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--workers", type=int, default=1, help="frame-scoring threads")
    run.add_argument("--tol", type=float, default=1.0, help="match tolerance in seconds")
    run.set_defaults(func=cmd_run)

    ev = sub.add_parser("eval", help="score a detections CSV against ground truth")
    ev.add_argument("--detections", required=True, help="detections CSV")
    ev.add_argument("--gt", required=True, help="ground-truth CSV")
    ev.add_argument("--fps", type=float, default=25.0, help="frame rate for frame indices")
    ev.add_argument("--tol", type=float, default=1.0, help="match tolerance in seconds")
    ev.set_defaults(func=cmd_eval)

    bench = sub.add_parser("bench", help="measure inference latency and model size")
    bench.add_argument("--config", required=True, help="pipeline config JSON")
    bench.add_argument("--frames", required=True, help="directory of frames + manifest")
    bench.add_argument("--manifest", default=None, help="manifest path")
    bench.add_argument("--warmup", type=int, default=5, help="untimed warmup passes")
    bench.add_argument("--repeats", type=int, default=1, help="independent report count")
    bench.add_argument(
        "--throughput-workers",
        type=int,
        default=None,
        help="also measure multi-worker wall clock with this many threads",
    )
    bench.set_defaults(func=cmd_bench)

    sim = sub.add_parser("simulate", help="fuse synthetic classifier outputs")
    sim.add_argument("--labels", required=True, help="per-frame truth file, one 0/1 per line")
    sim.add_argument("--primary-tpr", type=float, required=True)
    sim.add_argument("--primary-fpr", type=float, required=True)
    sim.add_argument("--verifier-tpr", type=float, required=True)
    sim.add_argument("--verifier-fpr", type=float, required=True)
    sim.add_argument("--config", default=None, help="pipeline config JSON (fusion block)")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--pack-size", type=int, default=None, help="override pack size")
    sim.add_argument(
        "--neighbor-window", type=int, default=None, help="override verifier window"
    )
    sim.add_argument(
        "--packing", choices=("on", "off"), default=None, help="override packing"
    )
    sim.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.basicConfig(
            level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
        )
    try:
        return args.func(args)
    except (VerisembleError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
