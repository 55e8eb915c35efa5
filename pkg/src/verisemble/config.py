"""Pipeline configuration: typed model, strict JSON loading.

A configuration describes the whole detection pipeline: the ordered
classifier stages (channel subset plus model backing each), fusion
parameters, input geometry and decision threshold. Parsing is strict on
purpose: unknown keys and missing required keys are errors, so a typo in
a config file fails loudly instead of silently running with defaults.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Union

from .ensemble import FusionConfig
from .errors import FormatError, LoadError, ValidationError
from .preprocess import BT601_LUMA, ChannelSubset

__all__ = [
    "CONFIG_VERSION",
    "CnnModelConfig",
    "MeanIntensityModelConfig",
    "ModelConfig",
    "StageConfig",
    "PipelineConfig",
    "load_config",
    "parse_config",
]

CONFIG_VERSION = 1


@dataclass(frozen=True)
class CnnModelConfig:
    """A stage backed by a trained network stored in a weight container."""

    weights: str

    def __post_init__(self) -> None:
        if not self.weights:
            raise ValidationError("cnn model config needs a weights path")

    def to_json_obj(self) -> dict:
        return {"type": "cnn", "weights": self.weights}


@dataclass(frozen=True)
class MeanIntensityModelConfig:
    """A weightless stage scoring each frame by its mean feature value.

    Deterministic and model-free; useful for pipeline plumbing tests and
    synthetic demos where real weights would add nothing.
    """

    def to_json_obj(self) -> dict:
        return {"type": "mean_intensity"}


ModelConfig = Union[CnnModelConfig, MeanIntensityModelConfig]


@dataclass(frozen=True)
class StageConfig:
    """One classifier stage: which channels it sees and what scores them."""

    channels: ChannelSubset
    model: ModelConfig

    def __post_init__(self) -> None:
        if not isinstance(self.channels, ChannelSubset):
            raise ValidationError(f"channels must be a ChannelSubset, got {self.channels!r}")
        if not isinstance(self.model, (CnnModelConfig, MeanIntensityModelConfig)):
            raise ValidationError(f"unsupported stage model: {self.model!r}")

    def to_json_obj(self) -> dict:
        return {"channels": self.channels.value, "model": self.model.to_json_obj()}


@dataclass(frozen=True)
class PipelineConfig:
    """Everything needed to run the detection pipeline on a sequence.

    Stages run in order: the first proposes, the rest verify. Channel
    cardinality must not increase along the chain, matching the idea
    that each verifier sees a reduced view of the same frame.
    """

    stages: tuple[StageConfig, ...]
    fusion: FusionConfig = field(default_factory=FusionConfig)
    input_width: int = 300
    input_height: int = 300
    luma_coefficients: tuple[float, float, float] = BT601_LUMA
    threshold: float = 0.5
    fps: float | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "stages", tuple(self.stages))
        object.__setattr__(
            self, "luma_coefficients", tuple(float(v) for v in self.luma_coefficients)
        )
        if not self.stages:
            raise ValidationError("pipeline needs at least one stage")
        cards = [stage.channels.cardinality for stage in self.stages]
        for earlier, later in zip(cards, cards[1:]):
            if later > earlier:
                raise ValidationError(
                    f"stage channel cardinality must not increase along the "
                    f"chain, got {cards}"
                )
        if self.input_width < 1 or self.input_height < 1:
            raise ValidationError(
                f"bad input size {self.input_width}x{self.input_height}"
            )
        if len(self.luma_coefficients) != 3 or not all(
            math.isfinite(v) and v >= 0 for v in self.luma_coefficients
        ):
            raise ValidationError(
                f"luma coefficients must be 3 non-negative finite values, "
                f"got {self.luma_coefficients}"
            )
        if not (0.0 < self.threshold < 1.0):
            raise ValidationError(
                f"threshold must be strictly between 0 and 1, got {self.threshold}"
            )
        if self.fps is not None and not (self.fps > 0):
            raise ValidationError(f"fps must be positive when set, got {self.fps}")
        if not isinstance(self.seed, int):
            raise ValidationError(f"seed must be an int, got {self.seed!r}")

    def to_json_obj(self) -> dict:
        obj: dict = {
            "config_version": CONFIG_VERSION,
            "input": {"width": self.input_width, "height": self.input_height},
            "threshold": self.threshold,
            "seed": self.seed,
            "luma": list(self.luma_coefficients),
            "fusion": {
                "pack_size": self.fusion.pack_size,
                "neighbor_window": self.fusion.neighbor_window,
                "packing_enabled": self.fusion.packing_enabled,
            },
            "stages": [stage.to_json_obj() for stage in self.stages],
        }
        if self.fps is not None:
            obj["fps"] = self.fps
        return obj


def _require_keys(obj: Mapping, allowed: set[str], required: set[str], where: str) -> None:
    if not isinstance(obj, Mapping):
        raise FormatError(f"{where} must be a JSON object, got {type(obj).__name__}")
    unknown = set(obj) - allowed
    if unknown:
        raise FormatError(f"{where}: unknown keys {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise FormatError(f"{where}: missing keys {sorted(missing)}")


def _parse_model(obj: Mapping, base_dir: Path) -> ModelConfig:
    _require_keys(obj, {"type", "weights"}, {"type"}, "stage model")
    kind = obj["type"]
    if kind == "cnn":
        if "weights" not in obj:
            raise FormatError("cnn stage model: missing 'weights'")
        weights = obj["weights"]
        if not isinstance(weights, str) or not weights:
            raise FormatError(f"cnn stage model: bad weights path {weights!r}")
        resolved = Path(weights)
        if not resolved.is_absolute():
            resolved = base_dir / resolved
        return CnnModelConfig(weights=str(resolved))
    if kind == "mean_intensity":
        if "weights" in obj:
            raise FormatError("mean_intensity stage model takes no 'weights'")
        return MeanIntensityModelConfig()
    raise FormatError(f"stage model: unknown type {kind!r}")


def _parse_stage(obj: Mapping, base_dir: Path, position: int) -> StageConfig:
    where = f"stage {position}"
    _require_keys(obj, {"channels", "model"}, {"channels", "model"}, where)
    try:
        channels = ChannelSubset.parse(obj["channels"])
    except (ValueError, ValidationError) as exc:
        raise FormatError(f"{where}: {exc}") from exc
    return StageConfig(channels=channels, model=_parse_model(obj["model"], base_dir))


def _parse_fusion(obj: Mapping) -> FusionConfig:
    _require_keys(
        obj, {"pack_size", "neighbor_window", "packing_enabled"}, set(), "fusion"
    )
    defaults = FusionConfig()
    try:
        return FusionConfig(
            pack_size=obj.get("pack_size", defaults.pack_size),
            neighbor_window=obj.get("neighbor_window", defaults.neighbor_window),
            packing_enabled=obj.get("packing_enabled", defaults.packing_enabled),
        )
    except ValidationError as exc:
        raise FormatError(f"fusion: {exc}") from exc


def parse_config(obj: Mapping, base_dir: str | Path = ".") -> PipelineConfig:
    """Build a :class:`PipelineConfig` from a parsed JSON object.

    Relative weight paths are resolved against ``base_dir`` (normally the
    config file's directory) so a config bundle can be moved as a unit.
    """
    base_dir = Path(base_dir)
    allowed = {
        "config_version", "input", "threshold", "fps", "seed", "luma",
        "fusion", "stages",
    }
    _require_keys(obj, allowed, {"config_version", "stages"}, "config")
    if obj["config_version"] != CONFIG_VERSION:
        raise FormatError(
            f"unsupported config_version {obj['config_version']!r}, "
            f"expected {CONFIG_VERSION}"
        )

    width, height = 300, 300
    if "input" in obj:
        _require_keys(obj["input"], {"width", "height"}, {"width", "height"}, "input")
        width, height = obj["input"]["width"], obj["input"]["height"]

    if not isinstance(obj["stages"], list) or not obj["stages"]:
        raise FormatError("config: 'stages' must be a non-empty list")
    stages = tuple(
        _parse_stage(entry, base_dir, i) for i, entry in enumerate(obj["stages"])
    )

    fusion = _parse_fusion(obj["fusion"]) if "fusion" in obj else FusionConfig()

    luma = BT601_LUMA
    if "luma" in obj:
        if not isinstance(obj["luma"], list) or len(obj["luma"]) != 3:
            raise FormatError(f"config: 'luma' must be a list of 3 numbers, got {obj['luma']!r}")
        luma = tuple(obj["luma"])

    try:
        return PipelineConfig(
            stages=stages,
            fusion=fusion,
            input_width=width,
            input_height=height,
            luma_coefficients=luma,
            threshold=obj.get("threshold", 0.5),
            fps=obj.get("fps"),
            seed=obj.get("seed", 0),
        )
    except ValidationError as exc:
        raise FormatError(f"config: {exc}") from exc


def load_config(path: str | Path) -> PipelineConfig:
    """Read and parse a config file; relative paths resolve against it."""
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError as exc:
        raise LoadError(f"config file not found: {path}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON: {exc}") from exc
    return parse_config(obj, base_dir=path.parent)
