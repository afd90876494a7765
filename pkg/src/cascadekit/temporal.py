"""Video-track post-processing: majority smoothing, neighbor validation,
their composition, and run-to-event conversion.

The label operations accept stacked tracks: any (..., n) boolean array is
processed along its last axis, so exhaustive pattern checks run vectorized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigMismatchError, InputError


@dataclass
class PredictionTrack:
    """Per-frame labels and scores for one stage over one sequence."""

    labels: np.ndarray
    scores: np.ndarray
    fps_effective: float = 1.0

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=bool)
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if self.labels.ndim != 1 or self.scores.ndim != 1:
            raise InputError("track labels and scores must be 1-d")
        if len(self.labels) != len(self.scores):
            raise InputError("track labels and scores differ in length")
        if not self.fps_effective > 0:
            raise InputError("fps_effective must be positive")

    def __len__(self) -> int:
        return len(self.labels)


def _window_counts(labels: np.ndarray, radius: int) -> tuple[np.ndarray, np.ndarray]:
    """Positive counts and window sizes over [i-radius, i+radius] clipped to
    the track, along the last axis."""
    n = labels.shape[-1]
    cs = np.zeros(labels.shape[:-1] + (n + 1,), dtype=np.int64)
    np.cumsum(labels, axis=-1, out=cs[..., 1:])
    idx = np.arange(n)
    lo = np.maximum(idx - radius, 0)
    hi = np.minimum(idx + radius + 1, n)
    return cs[..., hi] - cs[..., lo], hi - lo


def majority_vote_labels(labels: np.ndarray, window: int = 3) -> np.ndarray:
    """Centered majority vote: index i is positive iff >= ceil(window/2) of
    the window's in-range labels are positive; windows truncated below
    ceil(window/2) frames pass the raw label through."""
    if window < 1 or window % 2 == 0:
        raise InputError("window must be a positive odd integer")
    labels = np.asarray(labels, dtype=bool)
    if labels.shape[-1] == 0:
        raise InputError("empty track")
    required = (window + 1) // 2
    counts, sizes = _window_counts(labels, window // 2)
    return np.where(sizes < required, labels, counts >= required)


def neighbor_any_labels(labels: np.ndarray, radius: int) -> np.ndarray:
    """True at i iff any label in [i-radius, i+radius] (clipped) is True."""
    if radius < 0:
        raise InputError("radius must be non-negative")
    labels = np.asarray(labels, dtype=bool)
    counts, _ = _window_counts(labels, radius)
    return counts > 0


def neighbor_validate_labels(labels_c: np.ndarray, labels_l: np.ndarray,
                             radius: int = 1) -> np.ndarray:
    """final[i] = C[i] and any(L[i-radius ... i+radius])."""
    labels_c = np.asarray(labels_c, dtype=bool)
    labels_l = np.asarray(labels_l, dtype=bool)
    if labels_c.shape != labels_l.shape:
        raise InputError("track length mismatch")
    return labels_c & neighbor_any_labels(labels_l, radius)


def _check_aligned(track_c: PredictionTrack, track_l: PredictionTrack) -> None:
    if len(track_c) != len(track_l):
        raise InputError(
            f"track length mismatch: {len(track_c)} vs {len(track_l)}")
    if track_c.fps_effective != track_l.fps_effective:
        raise ConfigMismatchError("tracks carry different fps_effective")


def majority_vote(track: PredictionTrack, window: int = 3) -> PredictionTrack:
    """Smooth a track's labels; scores and fps pass through unchanged."""
    return PredictionTrack(majority_vote_labels(track.labels, window),
                           track.scores.copy(), track.fps_effective)


def neighbor_validate(track_c: PredictionTrack, track_l: PredictionTrack,
                      radius: int = 1) -> PredictionTrack:
    """Fuse: a C-positive stands iff some L label within `radius` agrees.
    The fused track keeps the C scores (L only gates)."""
    _check_aligned(track_c, track_l)
    labels = neighbor_validate_labels(track_c.labels, track_l.labels, radius)
    return PredictionTrack(labels, track_c.scores.copy(), track_c.fps_effective)


def pipeline_video(track_c: PredictionTrack, track_l: PredictionTrack,
                   window: int = 3, radius: int = 1) -> PredictionTrack:
    """Majority vote on C first, then L-validation. The order is normative;
    the operations do not commute."""
    _check_aligned(track_c, track_l)
    return neighbor_validate(majority_vote(track_c, window), track_l, radius)


def track_to_events(track: PredictionTrack) -> list[tuple[float, float]]:
    """Maximal positive runs as (start_s, end_s); frame i spans
    [i, i+1) / fps."""
    fps = track.fps_effective
    padded = np.concatenate(([False], track.labels, [False]))
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    starts, ends = edges[0::2], edges[1::2]
    return [(s / fps, e / fps) for s, e in zip(starts, ends)]
