"""Minimal CNN inference engine.

Runs a data-driven layer graph (conv / maxpool / batchnorm / dense /
dropout / flatten / activation) over channel-last float tensors, counts
parameters, and reads/writes the binary weight container.

Inference is deterministic and purely functional: specs and weight stores
are immutable after load and may be shared across threads; dropout is an
identity at inference time.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping

import numpy as np

from .errors import FormatError, LoadError, ShapeError, ValidationError

__all__ = [
    "LayerSpec",
    "ModelSpec",
    "WeightStore",
    "conv2d",
    "maxpool2",
    "batchnorm_infer",
    "dense",
    "flatten",
    "relu",
    "sigmoid",
    "forward",
    "classify",
    "count_params",
    "default_model_spec",
    "random_weights",
    "validate_weights",
    "save_weights",
    "load_weights",
]

_ACTIVATIONS = ("relu", "sigmoid")
_KINDS = ("conv2d", "maxpool2", "batchnorm", "flatten", "dense", "dropout", "activation")

# Weight array names per layer kind, in container serialization order.
_PARAM_ORDER: dict[str, tuple[str, ...]] = {
    "conv2d": ("kernel", "bias"),
    "batchnorm": ("gamma", "beta", "mean", "var"),
    "dense": ("kernel", "bias"),
    "maxpool2": (),
    "flatten": (),
    "dropout": (),
    "activation": (),
}

WEIGHTS_MAGIC = b"TSTM"
WEIGHTS_VERSION = 1


@dataclass(frozen=True)
class LayerSpec:
    """One layer of the model graph; fields are kind-specific."""

    kind: str
    name: str
    filters: int | None = None
    kernel: tuple[int, int] | None = None
    stride: int = 1
    padding: str = "same"
    pool: int | None = None
    units: int | None = None
    rate: float | None = None
    activation: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValidationError(f"unknown layer kind {self.kind!r}")
        if not self.name:
            raise ValidationError("layer name must be non-empty")
        check = getattr(self, f"_check_{self.kind}")
        check()

    def _require(self, wanted: tuple[str, ...], optional: tuple[str, ...] = ()) -> None:
        for fname in ("filters", "kernel", "pool", "units", "rate", "activation"):
            value = getattr(self, fname)
            if fname in wanted:
                if value is None:
                    raise ValidationError(f"layer {self.name}: {self.kind} requires {fname}")
            elif value is not None and fname not in optional:
                raise ValidationError(
                    f"layer {self.name}: {self.kind} does not take {fname}"
                )

    def _check_conv2d(self) -> None:
        self._require(("filters", "kernel"), optional=("activation",))
        assert self.filters is not None and self.kernel is not None
        if self.filters < 1:
            raise ValidationError(f"layer {self.name}: filters must be >= 1")
        if len(self.kernel) != 2 or min(self.kernel) < 1:
            raise ValidationError(f"layer {self.name}: bad kernel {self.kernel}")
        if self.stride < 1:
            raise ValidationError(f"layer {self.name}: stride must be >= 1")
        if self.padding not in ("same", "valid"):
            raise ValidationError(f"layer {self.name}: padding must be same or valid")
        if self.activation is not None and self.activation not in _ACTIVATIONS:
            raise ValidationError(f"layer {self.name}: unknown activation {self.activation!r}")

    def _check_maxpool2(self) -> None:
        self._require((), optional=("pool",))
        if self.pool is not None and self.pool < 2:
            raise ValidationError(f"layer {self.name}: pool size must be >= 2")

    def _check_batchnorm(self) -> None:
        self._require(())

    def _check_flatten(self) -> None:
        self._require(())

    def _check_dense(self) -> None:
        self._require(("units",), optional=("activation",))
        assert self.units is not None
        if self.units < 1:
            raise ValidationError(f"layer {self.name}: units must be >= 1")
        if self.activation is not None and self.activation not in _ACTIVATIONS:
            raise ValidationError(f"layer {self.name}: unknown activation {self.activation!r}")

    def _check_dropout(self) -> None:
        self._require(("rate",))
        assert self.rate is not None
        if not (0.0 <= self.rate < 1.0):
            raise ValidationError(f"layer {self.name}: dropout rate must be in [0, 1)")

    def _check_activation(self) -> None:
        self._require(("activation",))
        if self.activation not in _ACTIVATIONS:
            raise ValidationError(f"layer {self.name}: unknown activation {self.activation!r}")

    # -- constructors ------------------------------------------------------

    @classmethod
    def conv(
        cls,
        name: str,
        filters: int,
        kernel: tuple[int, int] = (3, 3),
        stride: int = 1,
        padding: str = "same",
        activation: str | None = None,
    ) -> "LayerSpec":
        return cls(
            kind="conv2d", name=name, filters=filters, kernel=tuple(kernel),
            stride=stride, padding=padding, activation=activation,
        )

    @classmethod
    def maxpool(cls, name: str, pool: int = 2) -> "LayerSpec":
        return cls(kind="maxpool2", name=name, pool=pool)

    @classmethod
    def batchnorm(cls, name: str) -> "LayerSpec":
        return cls(kind="batchnorm", name=name)

    @classmethod
    def flatten(cls, name: str = "flatten") -> "LayerSpec":
        return cls(kind="flatten", name=name)

    @classmethod
    def dense(cls, name: str, units: int, activation: str | None = None) -> "LayerSpec":
        return cls(kind="dense", name=name, units=units, activation=activation)

    @classmethod
    def dropout(cls, name: str, rate: float) -> "LayerSpec":
        return cls(kind="dropout", name=name, rate=rate)

    @classmethod
    def act(cls, name: str, activation: str) -> "LayerSpec":
        return cls(kind="activation", name=name, activation=activation)

    # -- serialization -----------------------------------------------------

    def to_json_obj(self) -> dict:
        obj: dict = {"kind": self.kind, "name": self.name}
        if self.kind == "conv2d":
            obj.update(
                filters=self.filters, kernel=list(self.kernel or ()),
                stride=self.stride, padding=self.padding,
            )
            if self.activation is not None:
                obj["activation"] = self.activation
        elif self.kind == "maxpool2":
            obj["pool"] = self.pool if self.pool is not None else 2
        elif self.kind == "dense":
            obj["units"] = self.units
            if self.activation is not None:
                obj["activation"] = self.activation
        elif self.kind == "dropout":
            obj["rate"] = self.rate
        elif self.kind == "activation":
            obj["activation"] = self.activation
        return obj

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "LayerSpec":
        if not isinstance(obj, Mapping) or "kind" not in obj or "name" not in obj:
            raise FormatError(f"bad layer spec entry: {obj!r}")
        kind, name = obj["kind"], obj["name"]
        allowed = {
            "conv2d": {"filters", "kernel", "stride", "padding", "activation"},
            "maxpool2": {"pool"},
            "batchnorm": set(),
            "flatten": set(),
            "dense": {"units", "activation"},
            "dropout": {"rate"},
            "activation": {"activation"},
        }
        if kind not in allowed:
            raise FormatError(f"layer {name!r}: unknown kind {kind!r}")
        unknown = set(obj) - allowed[kind] - {"kind", "name"}
        if unknown:
            raise FormatError(f"layer {name!r}: unknown keys {sorted(unknown)}")
        fields: dict = {k: obj[k] for k in allowed[kind] if k in obj}
        if "kernel" in fields:
            fields["kernel"] = tuple(fields["kernel"])
        try:
            return cls(kind=kind, name=name, **fields)
        except ValidationError as exc:
            raise FormatError(str(exc)) from exc


@dataclass(frozen=True)
class ModelSpec:
    """Input geometry plus an ordered layer list, shape-checked end to end.

    The chain must terminate in a single sigmoid unit so that the forward
    pass yields a probability.
    """

    input_shape: tuple[int, int, int]
    layers: tuple[LayerSpec, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "input_shape", tuple(int(v) for v in self.input_shape))
        object.__setattr__(self, "layers", tuple(self.layers))
        h, w, c = self.input_shape
        if h < 1 or w < 1 or c < 1:
            raise ValidationError(f"bad input shape {self.input_shape}")
        names = [layer.name for layer in self.layers]
        if len(set(names)) != len(names):
            raise ValidationError("layer names must be unique")
        shapes = self.output_shapes()
        final = shapes[-1] if shapes else self.input_shape
        if final != (1,):
            raise ValidationError(
                f"model must end in a single output unit, final shape is {final}"
            )
        if self._final_activation() != "sigmoid":
            raise ValidationError("model must end with a sigmoid activation")

    def _final_activation(self) -> str | None:
        for layer in reversed(self.layers):
            if layer.kind == "dropout":
                continue
            if layer.kind in ("dense", "conv2d", "activation"):
                return layer.activation
            return None
        return None

    def output_shapes(self) -> list[tuple[int, ...]]:
        """Shape after each layer; raises if any step is inconsistent."""
        shape: tuple[int, ...] = self.input_shape
        shapes: list[tuple[int, ...]] = []
        for layer in self.layers:
            shape = _layer_output_shape(layer, shape)
            shapes.append(shape)
        return shapes

    def layer_input_shapes(self) -> list[tuple[int, ...]]:
        return [self.input_shape] + self.output_shapes()[:-1]

    def to_json_obj(self) -> dict:
        return {
            "input": list(self.input_shape),
            "layers": [layer.to_json_obj() for layer in self.layers],
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "ModelSpec":
        if not isinstance(obj, Mapping):
            raise FormatError("model spec must be a JSON object")
        unknown = set(obj) - {"input", "layers"}
        if unknown:
            raise FormatError(f"model spec: unknown keys {sorted(unknown)}")
        if "input" not in obj or "layers" not in obj:
            raise FormatError("model spec: missing 'input' or 'layers'")
        shape = obj["input"]
        if not isinstance(shape, list) or len(shape) != 3:
            raise FormatError(f"model spec: bad input shape {shape!r}")
        layers = tuple(LayerSpec.from_json_obj(entry) for entry in obj["layers"])
        try:
            return cls(input_shape=tuple(shape), layers=layers)
        except ValidationError as exc:
            raise FormatError(str(exc)) from exc


def _layer_output_shape(layer: LayerSpec, shape: tuple[int, ...]) -> tuple[int, ...]:
    kind = layer.kind
    if kind == "conv2d":
        if len(shape) != 3:
            raise ValidationError(f"layer {layer.name}: conv2d needs a 3-D input, got {shape}")
        h, w, _ = shape
        kh, kw = layer.kernel  # type: ignore[misc]
        if layer.padding == "same":
            out_h = -(-h // layer.stride)
            out_w = -(-w // layer.stride)
        else:
            if h < kh or w < kw:
                raise ValidationError(
                    f"layer {layer.name}: input {h}x{w} smaller than kernel {kh}x{kw}"
                )
            out_h = (h - kh) // layer.stride + 1
            out_w = (w - kw) // layer.stride + 1
        return (out_h, out_w, layer.filters)  # type: ignore[return-value]
    if kind == "maxpool2":
        if len(shape) != 3:
            raise ValidationError(f"layer {layer.name}: maxpool needs a 3-D input, got {shape}")
        pool = layer.pool or 2
        h, w, c = shape
        if h < pool or w < pool:
            raise ValidationError(f"layer {layer.name}: input {h}x{w} smaller than pool {pool}")
        return (h // pool, w // pool, c)
    if kind == "batchnorm":
        if len(shape) != 3:
            raise ValidationError(f"layer {layer.name}: batchnorm needs a 3-D input, got {shape}")
        return shape
    if kind == "flatten":
        n = 1
        for dim in shape:
            n *= dim
        return (n,)
    if kind == "dense":
        if len(shape) != 1:
            raise ValidationError(f"layer {layer.name}: dense needs a flat input, got {shape}")
        return (layer.units,)  # type: ignore[return-value]
    # dropout / activation
    return shape


# Weight stores map layer name -> param name -> float32 array.
WeightStore = Mapping[str, Mapping[str, np.ndarray]]


def expected_weight_shapes(spec: ModelSpec) -> dict[str, dict[str, tuple[int, ...]]]:
    """Shapes every weight array must have for the given spec."""
    shapes: dict[str, dict[str, tuple[int, ...]]] = {}
    for layer, in_shape in zip(spec.layers, spec.layer_input_shapes()):
        if layer.kind == "conv2d":
            kh, kw = layer.kernel  # type: ignore[misc]
            shapes[layer.name] = {
                "kernel": (kh, kw, in_shape[2], layer.filters),  # type: ignore[index]
                "bias": (layer.filters,),  # type: ignore[dict-item]
            }
        elif layer.kind == "batchnorm":
            c = in_shape[2]
            shapes[layer.name] = {name: (c,) for name in _PARAM_ORDER["batchnorm"]}
        elif layer.kind == "dense":
            shapes[layer.name] = {
                "kernel": (in_shape[0], layer.units),  # type: ignore[dict-item]
                "bias": (layer.units,),  # type: ignore[dict-item]
            }
    return shapes


def validate_weights(spec: ModelSpec, weights: WeightStore) -> None:
    """Check a weight store against a spec: names, shapes, finite variances."""
    expected = expected_weight_shapes(spec)
    for layer_name, params in expected.items():
        if layer_name not in weights:
            raise ValidationError(f"missing weights for layer {layer_name}")
        for param_name, shape in params.items():
            if param_name not in weights[layer_name]:
                raise ValidationError(f"layer {layer_name}: missing array {param_name!r}")
            arr = np.asarray(weights[layer_name][param_name])
            if arr.shape != shape:
                raise ValidationError(
                    f"layer {layer_name}: array {param_name!r} has shape "
                    f"{arr.shape}, expected {shape}"
                )
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"layer {layer_name}: {param_name!r} has non-finite values")
        if "var" in params and np.any(np.asarray(weights[layer_name]["var"]) < 0):
            raise ValidationError(f"layer {layer_name}: negative moving variance")
    for layer_name in weights:
        if layer_name not in expected:
            raise ValidationError(f"unexpected weights for layer {layer_name!r}")


# -- layer operations ------------------------------------------------------


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def sigmoid(x: np.ndarray) -> np.ndarray:
    # Split by sign to stay finite for large |x|.
    out = np.empty_like(x, dtype=np.float64)
    positive = x >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-x[positive]))
    expx = np.exp(x[~positive])
    out[~positive] = expx / (1.0 + expx)
    return out


def _apply_activation(x: np.ndarray, activation: str | None) -> np.ndarray:
    if activation is None:
        return x
    if activation == "relu":
        return relu(x)
    if activation == "sigmoid":
        return sigmoid(x)
    raise ValidationError(f"unknown activation {activation!r}")


def conv2d(
    x: np.ndarray,
    kernel: np.ndarray,
    bias: np.ndarray,
    stride: int = 1,
    padding: str = "same",
) -> np.ndarray:
    """2-D cross-correlation over a channel-last tensor.

    ``kernel`` is ``(kh, kw, in_channels, filters)``; "same" zero-pads so
    that stride-1 output keeps the input height and width.
    """
    x = np.asarray(x, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    if x.ndim != 3:
        raise ShapeError(f"conv2d input must be 3-D, got shape {x.shape}")
    if kernel.ndim != 4:
        raise ShapeError(f"conv2d kernel must be 4-D, got shape {kernel.shape}")
    kh, kw, in_ch, filters = kernel.shape
    if x.shape[2] != in_ch:
        raise ShapeError(
            f"conv2d channel mismatch: input has {x.shape[2]}, kernel expects {in_ch}"
        )
    if bias.shape != (filters,):
        raise ShapeError(f"conv2d bias must have shape ({filters},), got {bias.shape}")
    if stride < 1:
        raise ValueError(f"conv2d stride must be >= 1, got {stride}")

    h, w, _ = x.shape
    if padding == "same":
        out_h = -(-h // stride)
        out_w = -(-w // stride)
        pad_h = max((out_h - 1) * stride + kh - h, 0)
        pad_w = max((out_w - 1) * stride + kw - w, 0)
        x = np.pad(
            x,
            ((pad_h // 2, pad_h - pad_h // 2), (pad_w // 2, pad_w - pad_w // 2), (0, 0)),
        )
    elif padding == "valid":
        if h < kh or w < kw:
            raise ShapeError(f"conv2d: input {h}x{w} smaller than kernel {kh}x{kw}")
    else:
        raise ValueError(f"conv2d padding must be 'same' or 'valid', got {padding!r}")

    windows = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(0, 1))
    windows = windows[::stride, ::stride]  # (out_h, out_w, c, kh, kw)
    out = np.tensordot(windows, kernel, axes=([3, 4, 2], [0, 1, 2]))
    return out + bias


def maxpool2(x: np.ndarray, pool: int = 2) -> np.ndarray:
    """Max pooling with window = stride = ``pool``; trailing rows/cols drop."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ShapeError(f"maxpool input must be 3-D, got shape {x.shape}")
    if pool < 2:
        raise ValueError(f"pool size must be >= 2, got {pool}")
    h, w, _ = x.shape
    if h < pool or w < pool:
        raise ShapeError(f"maxpool: input {h}x{w} smaller than pool window {pool}")
    windows = np.lib.stride_tricks.sliding_window_view(x, (pool, pool), axis=(0, 1))
    windows = windows[::pool, ::pool]
    return windows.max(axis=(3, 4))


def batchnorm_infer(
    x: np.ndarray,
    gamma: np.ndarray,
    beta: np.ndarray,
    mean: np.ndarray,
    var: np.ndarray,
    eps: float = 1e-3,
) -> np.ndarray:
    """Inference-time batch normalization with per-channel statistics."""
    x = np.asarray(x, dtype=np.float64)
    channels = x.shape[-1]
    params = {}
    for name, arr in (("gamma", gamma), ("beta", beta), ("mean", mean), ("var", var)):
        arr = np.asarray(arr, dtype=np.float64)
        if arr.shape != (channels,):
            raise ShapeError(
                f"batchnorm {name} must have shape ({channels},), got {arr.shape}"
            )
        params[name] = arr
    if np.any(params["var"] < 0):
        raise ValidationError("batchnorm variance must be non-negative")
    scale = params["gamma"] / np.sqrt(params["var"] + eps)
    return (x - params["mean"]) * scale + params["beta"]


def dense(
    x: np.ndarray,
    weights: np.ndarray,
    bias: np.ndarray,
    activation: str | None = None,
) -> np.ndarray:
    """Fully connected layer: ``act(x @ W + b)`` with ``W`` of shape (in, out)."""
    x = np.asarray(x, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError(f"dense input must be a flat vector, got shape {x.shape}")
    if weights.ndim != 2 or weights.shape[0] != x.shape[0]:
        raise ShapeError(
            f"dense weights must have shape ({x.shape[0]}, out), got {weights.shape}"
        )
    if bias.shape != (weights.shape[1],):
        raise ShapeError(
            f"dense bias must have shape ({weights.shape[1]},), got {bias.shape}"
        )
    return _apply_activation(x @ weights + bias, activation)


def flatten(x: np.ndarray) -> np.ndarray:
    """Flatten to 1-D in row-major, channel-last order."""
    return np.asarray(x).reshape(-1)


def forward(spec: ModelSpec, weights: WeightStore, x: np.ndarray) -> float:
    """Run the full layer chain and return the output probability.

    Pure function of (spec, weights, input); any shape failure aborts with
    the offending layer's name.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != spec.input_shape:
        raise ShapeError(f"input shape {x.shape} does not match spec {spec.input_shape}")
    for layer in spec.layers:
        try:
            x = _forward_layer(layer, weights, x)
        except (ShapeError, ValidationError, KeyError) as exc:
            raise ShapeError(f"layer {layer.name}: {exc}") from exc
    return float(x[0])


def _forward_layer(layer: LayerSpec, weights: WeightStore, x: np.ndarray) -> np.ndarray:
    kind = layer.kind
    if kind == "conv2d":
        params = weights[layer.name]
        out = conv2d(x, params["kernel"], params["bias"], layer.stride, layer.padding)
        return _apply_activation(out, layer.activation)
    if kind == "maxpool2":
        return maxpool2(x, layer.pool or 2)
    if kind == "batchnorm":
        params = weights[layer.name]
        return batchnorm_infer(x, params["gamma"], params["beta"], params["mean"], params["var"])
    if kind == "flatten":
        return flatten(x)
    if kind == "dense":
        params = weights[layer.name]
        return dense(x, params["kernel"], params["bias"], layer.activation)
    if kind == "dropout":
        return x  # inference no-op
    if kind == "activation":
        return _apply_activation(x, layer.activation)
    raise ValidationError(f"unknown layer kind {kind!r}")


def classify(score: float, threshold: float = 0.5) -> bool:
    """Binary decision: positive iff the probability reaches the threshold."""
    return score >= threshold


def count_params(spec: ModelSpec) -> int:
    """Total number of stored parameters: conv/dense weights+biases, 4 per
    batchnorm channel; pooling, flatten, dropout and activations carry none."""
    total = 0
    for params in expected_weight_shapes(spec).values():
        for shape in params.values():
            n = 1
            for dim in shape:
                n *= dim
            total += n
    return total


def default_model_spec(channels: int = 3, height: int = 300, width: int = 300) -> ModelSpec:
    """The stock architecture used by both ensemble stages.

    Five conv blocks (3x3 same-padding conv with relu, 2x2 maxpool,
    batchnorm) with filter counts 16/32/64/128/128, then dropout 0.2,
    flatten, dense 64 relu, dropout 0.2, dense 16 relu, dense 1 sigmoid.
    The two stages differ only in the first conv's input channel count.
    """
    layers: list[LayerSpec] = []
    for i, filters in enumerate((16, 32, 64, 128, 128), start=1):
        layers.append(LayerSpec.conv(f"conv{i}", filters, (3, 3), activation="relu"))
        layers.append(LayerSpec.maxpool(f"pool{i}"))
        layers.append(LayerSpec.batchnorm(f"bn{i}"))
    layers.append(LayerSpec.dropout("dropout1", 0.2))
    layers.append(LayerSpec.flatten())
    layers.append(LayerSpec.dense("dense1", 64, activation="relu"))
    layers.append(LayerSpec.dropout("dropout2", 0.2))
    layers.append(LayerSpec.dense("dense2", 16, activation="relu"))
    layers.append(LayerSpec.dense("dense3", 1, activation="sigmoid"))
    return ModelSpec(input_shape=(height, width, channels), layers=tuple(layers))


def random_weights(spec: ModelSpec, seed: int) -> dict[str, dict[str, np.ndarray]]:
    """Seeded random weight store matching ``spec`` (for tests and benchmarks)."""
    rng = np.random.default_rng(seed)
    store: dict[str, dict[str, np.ndarray]] = {}
    for layer_name, params in expected_weight_shapes(spec).items():
        arrays: dict[str, np.ndarray] = {}
        for param_name, shape in params.items():
            if param_name == "kernel":
                fan_in = 1
                for dim in shape[:-1]:
                    fan_in *= dim
                arr = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)
            elif param_name == "bias":
                arr = np.zeros(shape)
            elif param_name == "gamma":
                arr = rng.uniform(0.8, 1.2, size=shape)
            elif param_name == "var":
                arr = rng.uniform(0.5, 1.5, size=shape)
            else:  # beta, mean
                arr = rng.normal(0.0, 0.05, size=shape)
            arrays[param_name] = arr.astype(np.float32)
            arrays[param_name].setflags(write=False)
        store[layer_name] = arrays
    return store


# -- weight container ------------------------------------------------------


def _spec_json_bytes(spec: ModelSpec) -> bytes:
    return json.dumps(spec.to_json_obj(), sort_keys=True, separators=(",", ":")).encode()


def save_weights(path: str | Path, spec: ModelSpec, weights: WeightStore) -> None:
    """Serialize a (spec, weights) pair to the binary weight container.

    Layout: magic ``TSTM``, u32 version, u32-length-prefixed JSON spec,
    then one record per weight array: u16 name length + UTF-8 name
    (``layer/param``), u8 rank, u32 dims, float32 data. All integers and
    floats little-endian; arrays row-major.
    """
    validate_weights(spec, weights)
    spec_json = _spec_json_bytes(spec)
    chunks = [WEIGHTS_MAGIC, struct.pack("<I", WEIGHTS_VERSION)]
    chunks.append(struct.pack("<I", len(spec_json)))
    chunks.append(spec_json)
    for layer in spec.layers:
        for param_name in _PARAM_ORDER[layer.kind]:
            arr = np.ascontiguousarray(weights[layer.name][param_name], dtype="<f4")
            name = f"{layer.name}/{param_name}".encode()
            chunks.append(struct.pack("<H", len(name)))
            chunks.append(name)
            chunks.append(struct.pack("<B", arr.ndim))
            chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
            chunks.append(arr.tobytes(order="C"))
    Path(path).write_bytes(b"".join(chunks))


class _RecordReader:
    def __init__(self, data: bytes, pos: int) -> None:
        self.data = data
        self.pos = pos

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError(f"weight container truncated while reading {what}")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def records(self) -> Iterator[tuple[str, np.ndarray]]:
        while self.pos < len(self.data):
            (name_len,) = struct.unpack("<H", self.take(2, "record name length"))
            name = self.take(name_len, "record name").decode()
            (rank,) = struct.unpack("<B", self.take(1, f"rank of {name}"))
            dims = struct.unpack(f"<{rank}I", self.take(4 * rank, f"dims of {name}"))
            count = 1
            for dim in dims:
                count *= dim
            payload = self.take(4 * count, f"data of {name}")
            arr = np.frombuffer(payload, dtype="<f4").reshape(dims)
            yield name, arr


def load_weights(path: str | Path) -> tuple[ModelSpec, dict[str, dict[str, np.ndarray]]]:
    """Load a weight container; the inverse of :func:`save_weights`.

    Round-trips bit-exactly. Validates magic, version, the embedded spec,
    and every array's shape; failures raise before any partial state is
    returned.
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except FileNotFoundError as exc:
        raise LoadError(f"weights file not found: {path}") from exc
    if data[:4] != WEIGHTS_MAGIC:
        raise FormatError(f"{path}: bad magic {data[:4]!r}, expected {WEIGHTS_MAGIC!r}")
    reader = _RecordReader(data, 4)
    (version,) = struct.unpack("<I", reader.take(4, "version"))
    if version != WEIGHTS_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    (spec_len,) = struct.unpack("<I", reader.take(4, "spec length"))
    spec_json = reader.take(spec_len, "spec JSON")
    try:
        spec = ModelSpec.from_json_obj(json.loads(spec_json))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: bad spec JSON: {exc}") from exc

    store: dict[str, dict[str, np.ndarray]] = {}
    for name, arr in reader.records():
        if "/" not in name:
            raise FormatError(f"{path}: bad record name {name!r}")
        layer_name, param_name = name.rsplit("/", 1)
        layer_store = store.setdefault(layer_name, {})
        if param_name in layer_store:
            raise FormatError(f"{path}: duplicate record {name!r}")
        arr.setflags(write=False)
        layer_store[param_name] = arr

    expected = expected_weight_shapes(spec)
    for layer_name, params in expected.items():
        for param_name in params:
            if layer_name not in store or param_name not in store[layer_name]:
                raise FormatError(f"{path}: missing weights for layer {layer_name}")
    try:
        validate_weights(spec, store)
    except ValidationError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    return spec, store
