"""Frame preprocessing: anti-aliased resizing and color-feature extraction.

The resize suppresses aliasing noise by area-averaging on downscale (every
source pixel contributes in proportion to its coverage of the target cell)
and falls back to bilinear interpolation on upscale. Feature extraction
selects channel subsets, or a derived luma channel, scaled into [0, 1].

All functions are pure and safe to run data-parallel across frames.
"""

from __future__ import annotations

import enum
import math

import numpy as np

from .errors import ValidationError
from .frameio import Frame

__all__ = [
    "BT601_LUMA",
    "ChannelSubset",
    "resize_aa",
    "to_grayscale",
    "extract_features",
]

# ITU-R BT.601 luma weights; overridable through the pipeline config.
BT601_LUMA = (0.299, 0.587, 0.114)


class ChannelSubset(enum.Enum):
    """Color channels a classification stage operates on.

    ``LUMA`` is a derived brightness channel, not a stored one; the others
    select stored RGB channels in the order their name declares.
    """

    RGB = "RGB"
    RG = "RG"
    GB = "GB"
    BR = "BR"
    R = "R"
    G = "G"
    B = "B"
    LUMA = "L"

    @property
    def cardinality(self) -> int:
        return 1 if self is ChannelSubset.LUMA else len(self.value)

    @property
    def channel_indices(self) -> tuple[int, ...] | None:
        """Stored-channel indices in declared order; None for the luma path."""
        if self is ChannelSubset.LUMA:
            return None
        return tuple("RGB".index(ch) for ch in self.value)

    @classmethod
    def parse(cls, text: str) -> "ChannelSubset":
        for member in cls:
            if member.value == text:
                return member
        valid = ", ".join(m.value for m in cls)
        raise ValidationError(f"unknown channel subset {text!r}; expected one of {valid}")


def _round_half_up_u8(values: np.ndarray) -> np.ndarray:
    return np.clip(np.floor(values + 0.5), 0, 255).astype(np.uint8)


def _area_weights(in_n: int, out_n: int) -> np.ndarray:
    """Rows of box-filter coverage weights for an in_n -> out_n downscale."""
    weights = np.zeros((out_n, in_n), dtype=np.float64)
    for j in range(out_n):
        lo = j * in_n / out_n
        hi = min((j + 1) * in_n / out_n, float(in_n))
        first = int(math.floor(lo))
        last = min(int(math.ceil(hi)), in_n)
        for i in range(first, last):
            overlap = min(hi, i + 1.0) - max(lo, float(i))
            if overlap > 0:
                weights[j, i] = overlap
        weights[j] /= weights[j].sum()
    return weights


def _bilinear_weights(in_n: int, out_n: int) -> np.ndarray:
    """Rows of bilinear weights (half-pixel centers) for an upscale."""
    weights = np.zeros((out_n, in_n), dtype=np.float64)
    for j in range(out_n):
        src = (j + 0.5) * in_n / out_n - 0.5
        src = min(max(src, 0.0), float(in_n - 1))
        i0 = int(math.floor(src))
        i1 = min(i0 + 1, in_n - 1)
        frac = src - i0
        weights[j, i0] += 1.0 - frac
        weights[j, i1] += frac
    return weights


def _axis_weights(in_n: int, out_n: int) -> np.ndarray | None:
    if out_n == in_n:
        return None
    if out_n < in_n:
        return _area_weights(in_n, out_n)
    return _bilinear_weights(in_n, out_n)


def resize_aa(frame: Frame, out_w: int, out_h: int) -> Frame:
    """Resize a frame to exactly ``out_w`` x ``out_h``.

    Downscaled axes use area-average resampling (the anti-aliasing box
    filter); upscaled axes use bilinear interpolation. Each output value is
    the round-half-up of the real-valued resample, clamped to [0, 255].
    Same-size requests return the input byte-identically.
    """
    if out_w < 1 or out_h < 1:
        raise ValueError(f"resize target must be at least 1x1, got {out_w}x{out_h}")
    if out_w == frame.width and out_h == frame.height:
        return frame

    values = frame.pixels.astype(np.float64)
    w_y = _axis_weights(frame.height, out_h)
    if w_y is not None:
        h, w, c = values.shape
        values = (w_y @ values.reshape(h, w * c)).reshape(out_h, w, c)
    w_x = _axis_weights(frame.width, out_w)
    if w_x is not None:
        # Contract over the width axis: (h, w, c) -> (h, c, w) @ (w, out_w).
        values = np.ascontiguousarray(values.transpose(0, 2, 1)) @ w_x.T
        values = values.transpose(0, 2, 1)

    return Frame(index=frame.index, pixels=_round_half_up_u8(values))


def to_grayscale(
    frame: Frame, coefficients: tuple[float, float, float] = BT601_LUMA
) -> Frame:
    """Collapse a 3-channel frame to a single luma channel.

    Per pixel: ``round_half_up(c_r*R + c_g*G + c_b*B)`` clamped to [0, 255].
    """
    if frame.channels != 3:
        raise ValueError(f"grayscale conversion requires 3 channels, got {frame.channels}")
    coeffs = np.asarray(coefficients, dtype=np.float64)
    if coeffs.shape != (3,) or not np.all(np.isfinite(coeffs)) or np.any(coeffs < 0):
        raise ValidationError(f"luma coefficients must be 3 finite non-negatives, got {coefficients}")
    luma = frame.pixels.astype(np.float64) @ coeffs
    return Frame(index=frame.index, pixels=_round_half_up_u8(luma)[:, :, np.newaxis])


def extract_features(
    frame: Frame,
    subset: ChannelSubset,
    luma_coefficients: tuple[float, float, float] = BT601_LUMA,
) -> np.ndarray:
    """Extract the feature tensor a classification stage consumes.

    Selects the subset's channels in declared order (or derives luma for
    ``LUMA``) and scales 8-bit values by 1/255 into [0, 1]. Returns a
    ``(height, width, channels)`` float64 array.
    """
    if not isinstance(subset, ChannelSubset):
        raise ValueError(f"subset must be a ChannelSubset, got {subset!r}")
    if frame.channels != 3:
        raise ValueError(
            f"feature extraction requires a 3-channel frame, got {frame.channels}"
        )
    if subset is ChannelSubset.LUMA:
        gray = to_grayscale(frame, coefficients=luma_coefficients)
        return gray.pixels.astype(np.float64) / 255.0
    indices = subset.channel_indices
    assert indices is not None
    return frame.pixels[:, :, list(indices)].astype(np.float64) / 255.0
