"""Frame-sequence and annotation I/O.

Covers the on-disk surface of the pipeline: binary PPM (P6) frames with an
optional PNG path, the JSON sequence manifest, ground-truth interval CSVs,
and the detections CSV emitted by the pipeline.

All types here are immutable after construction and safe to share between
threads.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import FormatError, LoadError, ValidationError

__all__ = [
    "Frame",
    "SequenceManifest",
    "GroundTruth",
    "decode_ppm",
    "encode_ppm",
    "load_manifest",
    "load_sequence",
    "load_ground_truth",
    "write_ground_truth",
    "write_detections",
    "load_detections",
]

_PPM_WHITESPACE = b" \t\n\r\x0b\x0c"


@dataclass(frozen=True, eq=False)
class Frame:
    """A single 8-bit image frame and its position in the sequence.

    Attributes:
        index: Zero-based position of the frame in its sequence.
        pixels: ``(height, width, channels)`` uint8 array, row-major,
            channel-last. Marked read-only after construction.
    """

    index: int
    pixels: np.ndarray

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValidationError(f"frame index must be non-negative, got {self.index}")
        px = np.asarray(self.pixels)
        if px.dtype != np.uint8:
            raise ValidationError(f"frame pixels must be uint8, got {px.dtype}")
        if px.ndim != 3 or px.shape[2] not in (1, 3):
            raise ValidationError(
                f"frame pixels must be (height, width, channels) with 1 or 3 "
                f"channels, got shape {px.shape}"
            )
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValidationError(f"frame must be at least 1x1, got shape {px.shape}")
        object.__setattr__(self, "pixels", px)
        px.setflags(write=False)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Frame):
            return NotImplemented
        return self.index == other.index and np.array_equal(self.pixels, other.pixels)

    def __hash__(self) -> int:
        return hash((self.index, self.pixels.shape, self.pixels.tobytes()))

    def __repr__(self) -> str:
        return (
            f"Frame(index={self.index}, width={self.width}, "
            f"height={self.height}, channels={self.channels})"
        )


@dataclass(frozen=True)
class SequenceManifest:
    """Describes a directory of extracted frames.

    Attributes:
        frame_count: Number of frames in the sequence.
        fps: Frames per second of the original capture; drives
            frame-index to timestamp conversion downstream.
        pattern: Printf-style file name pattern, e.g. ``frame_%06d.ppm``.
    """

    frame_count: int
    fps: float
    pattern: str

    def __post_init__(self) -> None:
        if self.frame_count < 0:
            raise ValidationError(f"frame_count must be >= 0, got {self.frame_count}")
        if not (self.fps > 0):
            raise ValidationError(f"fps must be > 0, got {self.fps}")
        try:
            first = self.pattern % 0
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"bad frame file pattern {self.pattern!r}: {exc}") from exc
        if first == self.pattern % 1 and self.frame_count > 1:
            raise ValidationError(
                f"frame file pattern {self.pattern!r} does not vary with the index"
            )

    def frame_path(self, directory: Path, index: int) -> Path:
        return Path(directory) / (self.pattern % index)


@dataclass(frozen=True)
class GroundTruth:
    """Ground-truth positive intervals in seconds, sorted by start time."""

    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        normalized = tuple(sorted((float(a), float(b)) for a, b in self.intervals))
        for start, end in normalized:
            if not (np.isfinite(start) and np.isfinite(end)):
                raise ValidationError(f"interval ({start}, {end}) is not finite")
            if start < 0 or end < 0:
                raise ValidationError(f"interval ({start}, {end}) has negative bounds")
            if start > end:
                raise ValidationError(f"interval start {start} exceeds end {end}")
        object.__setattr__(self, "intervals", normalized)

    def __len__(self) -> int:
        return len(self.intervals)


class _ByteScanner:
    """Cursor over PPM header bytes, skipping whitespace and # comments."""

    def __init__(self, data: bytes) -> None:
        self.data = data
        self.pos = 0

    def skip_separators(self) -> int:
        """Skip whitespace/comments; returns how many bytes were skipped."""
        start = self.pos
        while self.pos < len(self.data):
            byte = self.data[self.pos : self.pos + 1]
            if byte in (b"#",):
                while self.pos < len(self.data) and self.data[self.pos] not in b"\n":
                    self.pos += 1
            elif byte and byte in _PPM_WHITESPACE:
                self.pos += 1
            else:
                break
        return self.pos - start

    def read_token(self) -> bytes:
        start = self.pos
        while self.pos < len(self.data):
            byte = self.data[self.pos : self.pos + 1]
            if byte in _PPM_WHITESPACE or byte == b"#":
                break
            self.pos += 1
        return self.data[start : self.pos]

    def read_int(self, what: str) -> int:
        if self.skip_separators() == 0:
            raise FormatError(f"PPM header: expected separator before {what}")
        token = self.read_token()
        if not token.isdigit():
            raise FormatError(f"PPM header: bad {what} {token!r}")
        return int(token)


def decode_ppm(data: bytes, index: int = 0) -> Frame:
    """Decode a binary PPM (magic ``P6``, maxval 255) byte string.

    Pixels come back exactly as stored: row-major RGB. Raises
    :class:`FormatError` for a wrong magic, an unsupported maxval, a
    truncated payload, or trailing bytes after the payload.
    """
    scanner = _ByteScanner(data)
    if data[:2] != b"P6":
        raise FormatError(f"not a binary PPM: magic {data[:2]!r}, expected b'P6'")
    scanner.pos = 2
    width = scanner.read_int("width")
    height = scanner.read_int("height")
    maxval = scanner.read_int("maxval")
    if width < 1 or height < 1:
        raise FormatError(f"PPM header: bad dimensions {width}x{height}")
    if maxval != 255:
        raise FormatError(f"PPM maxval must be 255, got {maxval}")
    # Exactly one whitespace byte separates the header from the payload.
    if scanner.pos >= len(data) or data[scanner.pos] not in _PPM_WHITESPACE:
        raise FormatError("PPM header: missing whitespace before payload")
    scanner.pos += 1
    payload = data[scanner.pos :]
    expected = width * height * 3
    if len(payload) < expected:
        raise FormatError(
            f"PPM payload truncated: expected {expected} bytes, got {len(payload)}"
        )
    if len(payload) > expected:
        raise FormatError(
            f"PPM payload has {len(payload) - expected} trailing bytes"
        )
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)
    return Frame(index=index, pixels=pixels)


def encode_ppm(frame: Frame) -> bytes:
    """Encode a 3-channel frame as canonical binary PPM (P6, maxval 255)."""
    if frame.channels != 3:
        raise ValueError(f"PPM encoding requires 3 channels, got {frame.channels}")
    header = b"P6\n%d %d\n255\n" % (frame.width, frame.height)
    return header + np.ascontiguousarray(frame.pixels).tobytes()


def _decode_png(data: bytes, index: int) -> Frame:
    try:
        from PIL import Image
    except ImportError as exc:  # pragma: no cover - depends on environment
        raise LoadError(
            "PNG support requires Pillow; install the [png] extra"
        ) from exc
    import io

    try:
        image = Image.open(io.BytesIO(data))
        image.load()
    except Exception as exc:
        raise FormatError(f"bad PNG data: {exc}") from exc
    if image.mode not in ("L", "RGB"):
        image = image.convert("RGB")
    pixels = np.asarray(image, dtype=np.uint8)
    if pixels.ndim == 2:
        pixels = pixels[:, :, np.newaxis]
    return Frame(index=index, pixels=pixels)


def _decode_frame_file(path: Path, index: int) -> Frame:
    data = path.read_bytes()
    suffix = path.suffix.lower()
    if suffix == ".png":
        return _decode_png(data, index)
    try:
        return decode_ppm(data, index=index)
    except FormatError as exc:
        raise FormatError(f"frame {index} ({path.name}): {exc}") from exc


def load_manifest(path: str | Path) -> SequenceManifest:
    """Load and validate a sequence manifest JSON file."""
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise LoadError(f"manifest not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"manifest {path}: invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise FormatError(f"manifest {path}: expected a JSON object")
    expected = {"frame_count", "fps", "pattern"}
    unknown = set(obj) - expected
    if unknown:
        raise FormatError(f"manifest {path}: unknown keys {sorted(unknown)}")
    missing = expected - set(obj)
    if missing:
        raise FormatError(f"manifest {path}: missing keys {sorted(missing)}")
    if not isinstance(obj["frame_count"], int) or isinstance(obj["frame_count"], bool):
        raise FormatError(f"manifest {path}: frame_count must be an integer")
    if not isinstance(obj["fps"], (int, float)) or isinstance(obj["fps"], bool):
        raise FormatError(f"manifest {path}: fps must be a number")
    if not isinstance(obj["pattern"], str):
        raise FormatError(f"manifest {path}: pattern must be a string")
    return SequenceManifest(
        frame_count=obj["frame_count"], fps=float(obj["fps"]), pattern=obj["pattern"]
    )


def load_sequence(
    directory: str | Path,
    manifest_path: str | Path | None = None,
    workers: int = 1,
) -> list[Frame]:
    """Load a frame sequence in index order 0..frame_count-1.

    The manifest defaults to ``<directory>/manifest.json``. Decoding may run
    on a thread pool (``workers`` > 1); the returned order is by index
    regardless. All frames must share one geometry; mismatches raise
    :class:`FormatError` naming the offending index.
    """
    directory = Path(directory)
    manifest = load_manifest(manifest_path or directory / "manifest.json")
    paths = [manifest.frame_path(directory, i) for i in range(manifest.frame_count)]
    for i, path in enumerate(paths):
        if not path.is_file():
            raise LoadError(f"frame {i} missing: {path}")

    if workers > 1 and len(paths) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            frames = list(pool.map(_decode_frame_file, paths, range(len(paths))))
    else:
        frames = [_decode_frame_file(path, i) for i, path in enumerate(paths)]

    for frame in frames[1:]:
        if frame.pixels.shape != frames[0].pixels.shape:
            raise FormatError(
                f"frame {frame.index} has shape {frame.pixels.shape}, "
                f"expected {frames[0].pixels.shape} like frame 0"
            )
    return frames


def load_ground_truth(path: str | Path) -> GroundTruth:
    """Parse a ground-truth CSV of ``start_s,end_s`` rows (header optional)."""
    path = Path(path)
    intervals: list[tuple[float, float]] = []
    lines = path.read_text().splitlines()
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        if lineno == 1 and line.replace(" ", "") == "start_s,end_s":
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise FormatError(f"{path} row {lineno}: expected 'start_s,end_s', got {line!r}")
        try:
            start, end = float(parts[0]), float(parts[1])
        except ValueError as exc:
            raise FormatError(f"{path} row {lineno}: non-numeric value: {exc}") from exc
        if start > end:
            raise ValidationError(f"{path} row {lineno}: start {start} exceeds end {end}")
        if start < 0 or end < 0:
            raise ValidationError(f"{path} row {lineno}: negative interval ({start}, {end})")
        intervals.append((start, end))
    return GroundTruth(intervals=tuple(intervals))


def write_ground_truth(gt: GroundTruth, path: str | Path) -> None:
    """Write a ground-truth CSV that :func:`load_ground_truth` round-trips."""
    lines = ["start_s,end_s"]
    lines += [f"{repr(start)},{repr(end)}" for start, end in gt.intervals]
    Path(path).write_text("\n".join(lines) + "\n")


def write_detections(
    events: Sequence[tuple[float, float]] | Iterable[tuple[float, float]],
    path: str | Path,
) -> None:
    """Write detection events as a ``timestamp_s,score`` CSV.

    Events must already be sorted by timestamp; an unsorted input raises
    :class:`ValidationError` before anything is written. Timestamps are
    formatted with 3 decimal places, scores with the shortest round-trip
    representation.
    """
    events = list(events)
    for prev, cur in zip(events, events[1:]):
        if cur[0] < prev[0]:
            raise ValidationError(
                f"detections must be sorted by timestamp: {cur[0]} after {prev[0]}"
            )
    lines = ["timestamp_s,score"]
    lines += [f"{t:.3f},{repr(float(score))}" for t, score in events]
    Path(path).write_text("\n".join(lines) + "\n")


def load_detections(path: str | Path) -> tuple[tuple[float, float], ...]:
    """Parse a detections CSV back into ``(timestamp_s, score)`` pairs.

    Accepts the ``timestamp_s,score`` header as optional; rows must be
    sorted by timestamp, mirroring :func:`write_detections`.
    """
    path = Path(path)
    rows: list[tuple[float, float]] = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if lineno == 1 and line.replace(" ", "") == "timestamp_s,score":
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise FormatError(
                f"{path} row {lineno}: expected 'timestamp_s,score', got {line!r}"
            )
        try:
            t, score = float(parts[0]), float(parts[1])
        except ValueError as exc:
            raise FormatError(f"{path} row {lineno}: non-numeric value: {exc}") from exc
        if t < 0:
            raise ValidationError(f"{path} row {lineno}: negative timestamp {t}")
        if rows and t < rows[-1][0]:
            raise ValidationError(
                f"{path} row {lineno}: timestamps not sorted ({t} after {rows[-1][0]})"
            )
        rows.append((t, score))
    return tuple(rows)
