"""End-to-end pipeline: frames in, fused detection events out.

Each frame is resized once to the model input size, then every stage
extracts its channel subset and scores it. Per-stage label streams are
fused by the verification chain and the surviving positives collapse
into timestamped events.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .config import CnnModelConfig, MeanIntensityModelConfig, PipelineConfig
from .ensemble import PredictionSeries, chain_fuse
from .errors import LoadError, ValidationError
from .evaluate import DetectionEvent, events_from_series
from .frameio import Frame
from .nn import ModelSpec, WeightStore, classify, forward, load_weights
from .preprocess import extract_features, resize_aa

__all__ = [
    "StageModel",
    "CnnModel",
    "MeanIntensityModel",
    "build_stage_models",
    "PipelineResult",
    "run_pipeline",
]

logger = logging.getLogger(__name__)


class StageModel(Protocol):
    """Anything that turns a feature tensor into a probability."""

    def score(self, features: np.ndarray) -> float: ...


@dataclass(frozen=True)
class CnnModel:
    """Stage model backed by a loaded network."""

    spec: ModelSpec
    weights: WeightStore

    def score(self, features: np.ndarray) -> float:
        return forward(self.spec, self.weights, features)


@dataclass(frozen=True)
class MeanIntensityModel:
    """Weightless stage model: the score is the mean feature value.

    With features in [0, 1] the score is too, so it plugs into the same
    thresholding as a real network.
    """

    def score(self, features: np.ndarray) -> float:
        return float(np.asarray(features, dtype=np.float64).mean())


def build_stage_models(config: PipelineConfig) -> tuple[StageModel, ...]:
    """Instantiate one model per configured stage.

    CNN stages load their weight container and must match the pipeline's
    input geometry and the stage's channel count.
    """
    models: list[StageModel] = []
    for position, stage in enumerate(config.stages):
        if isinstance(stage.model, MeanIntensityModelConfig):
            models.append(MeanIntensityModel())
            continue
        assert isinstance(stage.model, CnnModelConfig)
        path = Path(stage.model.weights)
        if not path.is_file():
            raise LoadError(f"stage {position}: weights file not found: {path}")
        spec, weights = load_weights(path)
        expected = (config.input_height, config.input_width, stage.channels.cardinality)
        if spec.input_shape != expected:
            raise ValidationError(
                f"stage {position}: weights expect input {spec.input_shape}, "
                f"pipeline provides {expected}"
            )
        models.append(CnnModel(spec=spec, weights=weights))
    return tuple(models)


@dataclass(frozen=True)
class PipelineResult:
    """Everything the pipeline produced for one sequence.

    ``stage_series[k][i]`` is stage ``k``'s raw output for the ``i``-th
    frame of the input order; ``fused`` is the chained decision stream
    over the same positions.
    """

    stage_series: tuple[PredictionSeries, ...]
    fused: PredictionSeries
    events: tuple[DetectionEvent, ...]
    fps: float


def _frame_scores(
    frame: Frame,
    config: PipelineConfig,
    models: Sequence[StageModel],
) -> tuple[float, ...]:
    resized = resize_aa(frame, config.input_width, config.input_height)
    scores = []
    for stage, model in zip(config.stages, models):
        features = extract_features(resized, stage.channels, config.luma_coefficients)
        scores.append(model.score(features))
    return tuple(scores)


def run_pipeline(
    config: PipelineConfig,
    frames: Sequence[Frame],
    fps: float,
    workers: int = 1,
) -> PipelineResult:
    """Run all stages over a frame sequence and fuse the results.

    ``workers`` > 1 scores frames in a thread pool; output order and
    values are identical to the sequential run because each frame is
    scored independently and results are collected in input order.
    """
    if not (fps > 0):
        raise ValidationError(f"fps must be positive, got {fps}")
    if workers < 1:
        raise ValidationError(f"workers must be >= 1, got {workers}")
    models = build_stage_models(config)
    logger.info(
        "scoring %d frames with %d stages (%d workers)",
        len(frames), len(models), workers,
    )

    if workers == 1 or len(frames) <= 1:
        per_frame = [_frame_scores(frame, config, models) for frame in frames]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_frame = list(
                pool.map(lambda frame: _frame_scores(frame, config, models), frames)
            )

    stage_series = []
    for k in range(len(config.stages)):
        scores = tuple(scores_for_frame[k] for scores_for_frame in per_frame)
        labels = tuple(classify(s, config.threshold) for s in scores)
        stage_series.append(PredictionSeries(labels=labels, scores=scores))

    fused = chain_fuse(stage_series, config.fusion)
    events = events_from_series(fused, fps)
    logger.info("fused %d positive frames into %d events", fused.positive_count(), len(events))
    return PipelineResult(
        stage_series=tuple(stage_series),
        fused=fused,
        events=events,
        fps=fps,
    )
