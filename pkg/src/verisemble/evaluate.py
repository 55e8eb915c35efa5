"""Event extraction, timestamp-based scoring, simulation, benchmarking.

Detections are compared to ground truth at event granularity: each
maximal run of positive frames becomes one event stamped at its first
frame, and an event counts as correct when its timestamp falls within a
tolerance (default one second) of a ground-truth interval. Per-sequence
precision/recall/F1 aggregate across sequences by median, which keeps a
single degenerate sequence from dominating the summary.

The simulation helpers drive the fusion pipeline with synthetic
classifier outputs from a deterministic PRNG so that statistical claims
about fused false-positive rates can be tested without trained models.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from time import perf_counter
from typing import Iterable, Sequence

import numpy as np

from .ensemble import PredictionSeries, _series
from .errors import ValidationError
from .nn import ModelSpec, WeightStore, count_params, forward

__all__ = [
    "SplitMix64",
    "simulate_predictor",
    "DetectionEvent",
    "events_from_series",
    "ScoreReport",
    "match_score",
    "median_report",
    "frame_labels",
    "FrameMetrics",
    "frame_metrics",
    "BenchReport",
    "bench_inference",
]

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 PRNG; tiny, seedable, identical output on every platform.

    Used wherever reproducibility across runs and machines matters more
    than statistical sophistication.
    """

    __slots__ = ("_state",)

    GOLDEN_GAMMA = 0x9E3779B97F4A7C15

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + self.GOLDEN_GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def next_float(self) -> float:
        """Uniform in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def spawn(self) -> "SplitMix64":
        """Derive an independent child generator.

        Seeding the child from a fresh output (rather than an offset of
        the parent seed) avoids correlated parent/child streams.
        """
        return SplitMix64(self.next_u64())


def simulate_predictor(
    truth: Sequence[bool],
    tpr: float,
    fpr: float,
    rng: SplitMix64 | int,
) -> PredictionSeries:
    """Synthesize per-frame classifier output with given error rates.

    ``rng`` is a generator or a plain integer seed. Each frame consumes
    exactly two draws, label then score, so the stream position after
    ``n`` frames is independent of the outcomes. Scores land in [0.5, 1)
    for predicted positives and [0, 0.5) for negatives, consistent with
    a 0.5 decision threshold.
    """
    for name, rate in (("tpr", tpr), ("fpr", fpr)):
        if not (0.0 <= rate <= 1.0):
            raise ValidationError(f"{name} must be in [0, 1], got {rate}")
    if isinstance(rng, int):
        rng = SplitMix64(rng)
    labels: list[bool] = []
    scores: list[float] = []
    for is_positive in truth:
        fire_p = tpr if is_positive else fpr
        label = rng.next_float() < fire_p
        v = rng.next_float()
        labels.append(label)
        scores.append(0.5 + v / 2.0 if label else v / 2.0)
    return _series(tuple(labels), tuple(scores))


@dataclass(frozen=True)
class DetectionEvent:
    """One maximal run of positive frames, stamped at its first frame."""

    start_frame: int
    end_frame: int
    timestamp_s: float
    peak_score: float

    def __post_init__(self) -> None:
        if self.start_frame < 0 or self.end_frame < self.start_frame:
            raise ValidationError(
                f"bad event frame range [{self.start_frame}, {self.end_frame}]"
            )
        if self.timestamp_s < 0:
            raise ValidationError(f"event timestamp must be >= 0, got {self.timestamp_s}")
        if not (0.0 <= self.peak_score <= 1.0):
            raise ValidationError(f"event peak score outside [0, 1]: {self.peak_score}")


def events_from_series(series: PredictionSeries, fps: float) -> tuple[DetectionEvent, ...]:
    """Collapse positive runs into events; timestamp = start_frame / fps."""
    if not (fps > 0):
        raise ValidationError(f"fps must be positive, got {fps}")
    events: list[DetectionEvent] = []
    labels = series.labels
    scores = series.scores
    n = len(labels)
    i = 0
    while i < n:
        if not labels[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and labels[j + 1]:
            j += 1
        events.append(
            DetectionEvent(
                start_frame=i,
                end_frame=j,
                timestamp_s=i / fps,
                peak_score=max(scores[i : j + 1]),
            )
        )
        i = j + 1
    return tuple(events)


@dataclass(frozen=True)
class ScoreReport:
    """Event-level scoring of one sequence against its ground truth.

    Metrics are ``None`` where the denominator is empty: precision with
    no detections, recall with no ground-truth intervals. Undefined
    metrics are skipped by :func:`median_report` rather than counted as
    zero.
    """

    precision: float | None
    recall: float | None
    f1: float | None
    events: int
    matched_events: int
    intervals: int
    matched_intervals: int
    video: str | None = None


def _interval_list(intervals: object) -> tuple[tuple[float, float], ...]:
    inner = getattr(intervals, "intervals", intervals)
    return tuple((float(a), float(b)) for a, b in inner)  # type: ignore[union-attr]


def _distance(t: float, start: float, end: float) -> float:
    if start <= t <= end:
        return 0.0
    return min(abs(t - start), abs(t - end))


def match_score(
    events: Sequence[DetectionEvent],
    intervals: object,
    tolerance_s: float = 1.0,
    video: str | None = None,
) -> ScoreReport:
    """Score detected events against ground-truth intervals.

    An event matches an interval when its timestamp lies inside it or
    within ``tolerance_s`` of either endpoint. Precision counts matched
    events, recall counts covered intervals; both sides of the matching
    are independent, so one event can cover several adjacent intervals
    and vice versa.
    """
    if tolerance_s < 0:
        raise ValidationError(f"tolerance must be >= 0, got {tolerance_s}")
    spans = _interval_list(intervals)
    matched_events = sum(
        1
        for event in events
        if any(_distance(event.timestamp_s, a, b) <= tolerance_s for a, b in spans)
    )
    matched_intervals = sum(
        1
        for a, b in spans
        if any(_distance(event.timestamp_s, a, b) <= tolerance_s for event in events)
    )
    precision = matched_events / len(events) if events else None
    recall = matched_intervals / len(spans) if spans else None
    if precision is None or recall is None:
        f1 = None
    elif precision + recall == 0:
        f1 = 0.0
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    return ScoreReport(
        precision=precision,
        recall=recall,
        f1=f1,
        events=len(events),
        matched_events=matched_events,
        intervals=len(spans),
        matched_intervals=matched_intervals,
        video=video,
    )


def median_report(reports: Sequence[ScoreReport]) -> ScoreReport:
    """Aggregate per-sequence reports: median metrics, summed counts.

    Each metric's median is taken over the sequences where it is
    defined; if it is defined nowhere the aggregate is ``None`` too.
    """
    if not reports:
        raise ValidationError("median_report needs at least one report")

    def med(values: Iterable[float | None]) -> float | None:
        defined = [v for v in values if v is not None]
        return statistics.median(defined) if defined else None

    return ScoreReport(
        precision=med(r.precision for r in reports),
        recall=med(r.recall for r in reports),
        f1=med(r.f1 for r in reports),
        events=sum(r.events for r in reports),
        matched_events=sum(r.matched_events for r in reports),
        intervals=sum(r.intervals for r in reports),
        matched_intervals=sum(r.matched_intervals for r in reports),
        video=None,
    )


def frame_labels(intervals: object, frame_count: int, fps: float) -> tuple[bool, ...]:
    """Per-frame truth: frame ``i`` is positive iff ``i / fps`` lies in
    some ground-truth interval (endpoints inclusive)."""
    if frame_count < 0:
        raise ValidationError(f"frame_count must be >= 0, got {frame_count}")
    if not (fps > 0):
        raise ValidationError(f"fps must be positive, got {fps}")
    spans = _interval_list(intervals)
    return tuple(
        any(a <= i / fps <= b for a, b in spans) for i in range(frame_count)
    )


@dataclass(frozen=True)
class FrameMetrics:
    """Frame-level confusion counts and the usual derived rates.

    Rates are ``None`` when their denominator is zero.
    """

    true_positives: int
    false_positives: int
    false_negatives: int
    true_negatives: int

    @property
    def precision(self) -> float | None:
        fired = self.true_positives + self.false_positives
        return self.true_positives / fired if fired else None

    @property
    def recall(self) -> float | None:
        actual = self.true_positives + self.false_negatives
        return self.true_positives / actual if actual else None

    @property
    def f1(self) -> float | None:
        p, r = self.precision, self.recall
        if p is None or r is None:
            return None
        return 2.0 * p * r / (p + r) if p + r else 0.0

    @property
    def false_positive_rate(self) -> float | None:
        negatives = self.false_positives + self.true_negatives
        return self.false_positives / negatives if negatives else None

    def to_json_obj(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "fpr": self.false_positive_rate,
        }


def frame_metrics(truth: Sequence[bool], predicted: Sequence[bool]) -> FrameMetrics:
    """Confusion counts of a predicted label stream against frame truth."""
    if len(truth) != len(predicted):
        raise ValidationError(
            f"truth and prediction lengths differ: {len(truth)} vs {len(predicted)}"
        )
    tp = fp = fn = tn = 0
    for t, p in zip(truth, predicted):
        if p:
            if t:
                tp += 1
            else:
                fp += 1
        elif t:
            fn += 1
        else:
            tn += 1
    return FrameMetrics(
        true_positives=tp, false_positives=fp, false_negatives=fn, true_negatives=tn
    )


@dataclass(frozen=True)
class BenchReport:
    """Per-inference wall-clock latencies plus model sizes.

    ``params_per_model`` holds one count per benched model in order;
    ``params_total`` is their sum. Latency is in milliseconds.
    """

    samples_ms: tuple[float, ...]
    mean_ms: float
    median_ms: float
    p95_ms: float
    params_per_model: tuple[int, ...] = ()
    params_total: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "samples_ms", tuple(float(v) for v in self.samples_ms))
        object.__setattr__(
            self, "params_per_model", tuple(int(v) for v in self.params_per_model)
        )
        if not self.samples_ms:
            raise ValidationError("benchmark needs at least one sample")
        if any(v < 0 for v in self.samples_ms):
            raise ValidationError("latency samples must be non-negative")
        if self.p95_ms < self.median_ms:
            raise ValidationError(
                f"p95 {self.p95_ms} below median {self.median_ms}; "
                "percentiles must be monotone"
            )
        if any(v < 0 for v in self.params_per_model):
            raise ValidationError("parameter counts must be non-negative")
        if self.params_total != sum(self.params_per_model):
            raise ValidationError(
                f"params_total {self.params_total} does not equal the sum of "
                f"per-model counts {self.params_per_model}"
            )

    @classmethod
    def from_samples(
        cls,
        samples_ms: Sequence[float],
        params_per_model: Sequence[int] = (),
    ) -> "BenchReport":
        arr = np.asarray(samples_ms, dtype=np.float64)
        if arr.size == 0:
            raise ValidationError("benchmark needs at least one sample")
        params = tuple(int(v) for v in params_per_model)
        return cls(
            samples_ms=tuple(arr.tolist()),
            mean_ms=float(arr.mean()),
            median_ms=float(np.percentile(arr, 50)),
            p95_ms=float(np.percentile(arr, 95)),
            params_per_model=params,
            params_total=sum(params),
        )


def bench_inference(
    spec: ModelSpec,
    weights: WeightStore,
    inputs: Sequence[np.ndarray],
    warmup: int = 5,
) -> BenchReport:
    """Time single-input forward passes; warmup runs are not recorded.

    Runs single-threaded so samples reflect per-frame latency rather
    than scheduler behavior.
    """
    if not inputs:
        raise ValidationError("bench_inference needs at least one input")
    if warmup < 0:
        raise ValidationError(f"warmup must be >= 0, got {warmup}")
    for k in range(warmup):
        forward(spec, weights, inputs[k % len(inputs)])
    samples: list[float] = []
    for x in inputs:
        t0 = perf_counter()
        forward(spec, weights, x)
        samples.append((perf_counter() - t0) * 1e3)
    return BenchReport.from_samples(samples, params_per_model=(count_params(spec),))
