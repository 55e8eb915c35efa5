"""Two-stage decision fusion for per-frame classifier outputs.

A primary classifier proposes positives; a verifier can only confirm or
veto them, never add new ones. Because every surviving positive needs
both stages to fire, the combined false-positive rate can never exceed
that of either stage alone. Three refinements sit on top:

* ``verify_combine``: strict per-frame AND of the two stages.
* ``pack_mode``: majority vote over non-overlapping packs of consecutive
  frames, smoothing single-frame flicker in the primary stream.
* ``neighbor_validate``: a primary positive survives if the verifier
  fired anywhere inside a small centered window, tolerating off-by-a-few
  frame misalignment between the stages.

``fuse_video`` wires these into the standard two-stage pipeline and
``chain_fuse`` generalizes it to any number of verifier stages.

All operations are pure: series are immutable value objects and every
function returns a new series.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import ValidationError

__all__ = [
    "FusionConfig",
    "PredictionSeries",
    "verify_combine",
    "pack_mode",
    "neighbor_validate",
    "fuse_video",
    "chain_fuse",
]


@dataclass(frozen=True)
class FusionConfig:
    """Knobs for the fusion pipeline.

    ``pack_size`` frames form one majority-vote pack; ``neighbor_window``
    is the total width (centered, odd) of the verifier search window.
    With ``packing_enabled`` False both refinements are skipped and
    fusion degenerates to the per-frame AND.
    """

    pack_size: int = 3
    neighbor_window: int = 3
    packing_enabled: bool = True

    def __post_init__(self) -> None:
        if not isinstance(self.pack_size, int) or self.pack_size < 1:
            raise ValidationError(f"pack_size must be a positive int, got {self.pack_size!r}")
        if self.pack_size % 2 == 0:
            raise ValidationError(
                f"pack_size must be odd so a full pack cannot tie, got {self.pack_size}"
            )
        if not isinstance(self.neighbor_window, int) or self.neighbor_window < 1:
            raise ValidationError(
                f"neighbor_window must be a positive int, got {self.neighbor_window!r}"
            )
        if self.neighbor_window % 2 == 0:
            raise ValidationError(
                f"neighbor_window must be odd so the window is centered, "
                f"got {self.neighbor_window}"
            )


@dataclass(frozen=True)
class PredictionSeries:
    """Per-frame labels and scores from one classifier over one sequence.

    ``labels[i]`` is the binary decision for frame ``i``; ``scores[i]``
    the probability behind it. Both tuples always have equal length.
    """

    labels: tuple[bool, ...]
    scores: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", tuple(bool(v) for v in self.labels))
        object.__setattr__(self, "scores", tuple(float(v) for v in self.scores))
        if len(self.labels) != len(self.scores):
            raise ValidationError(
                f"labels and scores differ in length: "
                f"{len(self.labels)} vs {len(self.scores)}"
            )
        for i, score in enumerate(self.scores):
            if not (0.0 <= score <= 1.0):
                raise ValidationError(f"score at frame {i} outside [0, 1]: {score}")

    def __len__(self) -> int:
        return len(self.labels)

    def positive_indices(self) -> tuple[int, ...]:
        return tuple(i for i, label in enumerate(self.labels) if label)

    def positive_count(self) -> int:
        return sum(self.labels)


def _series(labels: tuple[bool, ...], scores: tuple[float, ...]) -> PredictionSeries:
    # Fast path for internally produced values that are valid by
    # construction; skips __post_init__ re-validation in hot loops.
    out = object.__new__(PredictionSeries)
    object.__setattr__(out, "labels", labels)
    object.__setattr__(out, "scores", scores)
    return out


def _check_same_length(primary: PredictionSeries, verifier: PredictionSeries) -> None:
    if len(primary.labels) != len(verifier.labels):
        raise ValidationError(
            f"series lengths differ: primary {len(primary.labels)}, "
            f"verifier {len(verifier.labels)}"
        )


def verify_combine(primary: PredictionSeries, verifier: PredictionSeries) -> PredictionSeries:
    """Per-frame AND of two aligned series.

    A frame stays positive only if both stages agree; the fused score is
    the weaker (minimum) of the two, so it never overstates confidence.
    """
    _check_same_length(primary, verifier)
    labels = tuple(a and b for a, b in zip(primary.labels, verifier.labels))
    scores = tuple(a if a < b else b for a, b in zip(primary.scores, verifier.scores))
    return _series(labels, scores)


def pack_mode(series: PredictionSeries, pack_size: int = 3) -> PredictionSeries:
    """Majority vote over non-overlapping packs of consecutive frames.

    Every frame in a pack takes the pack's majority label. A trailing
    short pack votes over its own members; an exact tie (possible only
    in a partial pack, since full packs are odd) counts as negative.
    Scores pass through unchanged, only labels are smoothed.
    """
    if pack_size < 1 or pack_size % 2 == 0:
        raise ValidationError(f"pack_size must be a positive odd int, got {pack_size}")
    labels = series.labels
    n = len(labels)
    if pack_size == 1 or n == 0:
        return series
    out: list[bool] = []
    for start in range(0, n, pack_size):
        chunk = labels[start : start + pack_size]
        majority = sum(chunk) * 2 > len(chunk)
        out.extend([majority] * len(chunk))
    return _series(tuple(out), series.scores)


def neighbor_validate(
    primary: PredictionSeries,
    verifier: PredictionSeries,
    window: int = 3,
) -> PredictionSeries:
    """Confirm primary positives against a centered verifier window.

    Frame ``i`` stays positive iff the primary marked it and the verifier
    fired anywhere in ``[i - r, i + r]`` with ``r = (window - 1) // 2``,
    clipped at the sequence boundaries. The fused score is the minimum of
    the primary score and the best verifier score in the window, which
    makes ``window=1`` coincide exactly with :func:`verify_combine`.
    """
    if window < 1 or window % 2 == 0:
        raise ValidationError(f"window must be a positive odd int, got {window}")
    _check_same_length(primary, verifier)
    radius = (window - 1) // 2
    p_labels = primary.labels
    p_scores = primary.scores
    v_labels = verifier.labels
    v_scores = verifier.scores
    n = len(p_labels)
    out_labels: list[bool] = []
    out_scores: list[float] = []
    for i in range(n):
        lo = i - radius
        if lo < 0:
            lo = 0
        hi = i + radius + 1
        if hi > n:
            hi = n
        out_labels.append(p_labels[i] and (True in v_labels[lo:hi]))
        best = max(v_scores[lo:hi])
        mine = p_scores[i]
        out_scores.append(mine if mine < best else best)
    return _series(tuple(out_labels), tuple(out_scores))


def fuse_video(
    primary: PredictionSeries,
    verifier: PredictionSeries,
    config: FusionConfig | None = None,
) -> PredictionSeries:
    """Standard two-stage fusion.

    With packing enabled the primary stream is majority-packed first and
    each surviving positive must find verifier support inside the
    neighbor window. With packing disabled this is the plain per-frame
    AND of the two stages.
    """
    if config is None:
        config = FusionConfig()
    _check_same_length(primary, verifier)
    if not config.packing_enabled:
        return verify_combine(primary, verifier)
    packed = pack_mode(primary, config.pack_size)
    return neighbor_validate(packed, verifier, config.neighbor_window)


def chain_fuse(
    stages: Sequence[PredictionSeries],
    config: FusionConfig | None = None,
) -> PredictionSeries:
    """Fold any number of stages into one decision stream.

    The first stage proposes; every later stage acts as a verifier in
    order, each able only to veto. A single stage is the fold's base
    case and passes through unchanged. With two or more stages the
    proposer is majority-packed first (when packing is enabled) and each
    verification step searches the neighbor window; with packing
    disabled each step is the plain per-frame AND. With exactly two
    stages the result is identical to :func:`fuse_video`.
    """
    if config is None:
        config = FusionConfig()
    if not stages:
        raise ValidationError("chain_fuse needs at least one stage")
    first = stages[0]
    for stage in stages[1:]:
        _check_same_length(first, stage)
    if len(stages) == 1:
        return first
    if config.packing_enabled:
        fused = pack_mode(first, config.pack_size)
        window = config.neighbor_window
    else:
        fused = first
        window = 1
    for stage in stages[1:]:
        fused = neighbor_validate(fused, stage, window)
    return fused
