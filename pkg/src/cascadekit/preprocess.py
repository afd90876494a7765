"""Frame preparation: anti-aliased resizing, channel projections, tensors.

All operations are pure functions; 8-bit outputs use round-half-up.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigMismatchError, InputError

# BT.601 luminance weights; they sum to 1 so achromatic pixels are fixed points.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)

# projection kind -> output channel count
PROJECTION_CHANNELS = {
    "identity_rgb": 3,
    "grayscale": 1,
    "pair_rg": 2,
    "pair_gb": 2,
    "pair_br": 2,
    "single_r": 1,
    "single_g": 1,
    "single_b": 1,
}

_PROJECTION_PICKS = {
    "pair_rg": (0, 1),
    "pair_gb": (1, 2),
    "pair_br": (2, 0),
    "single_r": (0,),
    "single_g": (1,),
    "single_b": (2,),
}


def round_half_up(x: np.ndarray) -> np.ndarray:
    """Nearest integer, ties away from zero for non-negative input."""
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5)


def clip_to_u8(x: np.ndarray) -> np.ndarray:
    return np.clip(round_half_up(x), 0, 255).astype(np.uint8)


@dataclass(frozen=True)
class ChannelProjection:
    """Named channel subset applied before a model; see PROJECTION_CHANNELS."""

    kind: str

    def __post_init__(self):
        if self.kind not in PROJECTION_CHANNELS:
            raise InputError(f"unknown projection kind {self.kind!r}")

    @property
    def output_channels(self) -> int:
        return PROJECTION_CHANNELS[self.kind]


IDENTITY_RGB = ChannelProjection("identity_rgb")
GRAYSCALE = ChannelProjection("grayscale")


@dataclass(eq=False)
class Frame:
    """8-bit image: data is (height, width, channels) uint8, C-contiguous."""

    data: np.ndarray
    timestamp_index: int = 0

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim == 2:
            data = data[:, :, None]
        if data.ndim != 3 or data.dtype != np.uint8:
            raise InputError("frame data must be a (h, w, c) uint8 array")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise InputError("frame has a zero dimension")
        if data.shape[2] not in (1, 2, 3):
            raise InputError(f"unsupported channel count {data.shape[2]}")
        if self.timestamp_index < 0:
            raise InputError("timestamp_index must be non-negative")
        object.__setattr__(self, "data", np.ascontiguousarray(data))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


def _axis_weights(src: int, dst: int) -> np.ndarray:
    """(dst, src) resampling matrix with rows summing to 1.

    Downscale rows hold the fractional overlap of each source cell with the
    output cell's footprint (area averaging); upscale rows pick the nearest
    source cell.
    """
    w = np.zeros((dst, src))
    if src >= dst:
        scale = src / dst
        for i in range(dst):
            lo = i * scale
            hi = (i + 1) * scale
            j0 = int(np.floor(lo))
            j1 = min(int(np.ceil(hi)), src)
            for j in range(j0, j1):
                w[i, j] = min(hi, j + 1) - max(lo, j)
        w /= w.sum(axis=1, keepdims=True)
    else:
        idx = (np.arange(dst) * src) // dst
        w[np.arange(dst), idx] = 1.0
    return w


def resize_antialiased(frame: Frame, target_side: int) -> Frame:
    """Resize to target_side x target_side. Downscaling is a box filter over
    the source footprint; the identity resize returns a bitwise copy."""
    if target_side < 1:
        raise InputError("target_side must be positive")
    if frame.height == target_side and frame.width == target_side:
        return Frame(frame.data.copy(), frame.timestamp_index)
    wrow = _axis_weights(frame.height, target_side)
    wcol = _axis_weights(frame.width, target_side)
    src = frame.data.astype(np.float64)
    tmp = np.tensordot(wrow, src, axes=([1], [0]))
    out = np.tensordot(tmp, wcol, axes=([1], [1])).transpose(0, 2, 1)
    return Frame(clip_to_u8(out), frame.timestamp_index)


def project(frame: Frame, proj: ChannelProjection) -> Frame:
    """Apply a channel projection; every kind is defined on RGB input."""
    if frame.channels != 3:
        raise ConfigMismatchError(
            f"projection {proj.kind!r} needs a 3-channel frame, got {frame.channels}")
    if proj.kind == "identity_rgb":
        return Frame(frame.data.copy(), frame.timestamp_index)
    if proj.kind == "grayscale":
        rgb = frame.data.astype(np.float64)
        y = (LUMA_WEIGHTS[0] * rgb[:, :, 0]
             + LUMA_WEIGHTS[1] * rgb[:, :, 1]
             + LUMA_WEIGHTS[2] * rgb[:, :, 2])
        return Frame(clip_to_u8(y)[:, :, None], frame.timestamp_index)
    picks = _PROJECTION_PICKS[proj.kind]
    return Frame(np.ascontiguousarray(frame.data[:, :, picks]), frame.timestamp_index)


def to_tensor(frame: Frame) -> np.ndarray:
    """(h, w, c) float64 in [0, 1]."""
    return frame.data.astype(np.float64) / 255.0


def from_tensor(tensor: np.ndarray, timestamp_index: int = 0) -> Frame:
    """Inverse of to_tensor up to 8-bit rounding."""
    return Frame(clip_to_u8(np.asarray(tensor, dtype=np.float64) * 255.0), timestamp_index)
