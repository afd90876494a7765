"""Verification cascade: an ordered stack of thresholded classifiers where
any stage's negative is final and positives continue to the next stage.

The two-stage instance pairs an RGB model with a grayscale verifier; the
general form allows k stages over non-increasing channel counts. Invocation
counters expose the short-circuit savings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigMismatchError, InputError
from .nn.network import Network
from .nn.spec import NetworkSpec, standard_network
from .nn.weights import WeightBundle
from .preprocess import (
    GRAYSCALE,
    IDENTITY_RGB,
    ChannelProjection,
    Frame,
    project,
    to_tensor,
)
from .temporal import PredictionTrack, neighbor_any_labels

DEFAULT_THRESHOLD = 0.9


@dataclass(frozen=True)
class Prediction:
    """Outcome for one sample. `score` is from the last stage that ran;
    positive requires every executed stage to clear its threshold."""

    score: float
    label: bool
    stage_reached: int


@dataclass
class CascadeStage:
    projection: ChannelProjection
    spec: NetworkSpec
    bundle: WeightBundle
    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self):
        if not 0.0 < self.threshold < 1.0:
            raise InputError("threshold must lie in (0, 1)")
        want = self.projection.output_channels
        got = self.spec.input_dims[2]
        if want != got:
            raise ConfigMismatchError(
                f"projection {self.projection.kind!r} yields {want} channels "
                f"but the model expects {got}")


@dataclass
class CascadeSpec:
    stages: list[CascadeStage]

    def __post_init__(self):
        if not self.stages:
            raise InputError("cascade needs at least one stage")
        sides = {s.spec.input_dims[0] for s in self.stages}
        if len(sides) != 1:
            raise ConfigMismatchError(f"stages disagree on input side: {sorted(sides)}")
        chans = [s.spec.input_dims[2] for s in self.stages]
        if any(a < b for a, b in zip(chans, chans[1:])):
            raise ConfigMismatchError(
                f"stage channel counts must be non-increasing, got {chans}")

    @property
    def input_side(self) -> int:
        return self.stages[0].spec.input_dims[0]


def standard_cascade(bundle_rgb: WeightBundle, bundle_gray: WeightBundle,
                     threshold: float = DEFAULT_THRESHOLD,
                     input_side: int = 300) -> CascadeSpec:
    """The canonical instance: RGB classifier verified by a grayscale model,
    one shared threshold."""
    return CascadeSpec([
        CascadeStage(IDENTITY_RGB, standard_network(3, input_side), bundle_rgb, threshold),
        CascadeStage(GRAYSCALE, standard_network(1, input_side), bundle_gray, threshold),
    ])


def lazy_distance_for(window: int, radius: int) -> int:
    """Smallest neighborhood of the raw C-positives whose L labels can
    influence pipeline_video(window, radius).

    Majority smoothing marks i only when ceil(window/2) of its <=window
    in-range neighbors are positive, which pins a raw positive within
    max(radius, window//2 - radius) of every consulted L index.
    """
    if window < 1 or window % 2 == 0:
        raise InputError("window must be a positive odd integer")
    if radius < 0:
        raise InputError("radius must be non-negative")
    return max(radius, window // 2 - radius)


class Cascade:
    """Runtime for a CascadeSpec: compiled networks plus invocation counters.

    Counters accumulate across calls; reset_counters() starts a fresh
    measurement. Classification itself is stateless and deterministic.
    """

    def __init__(self, spec: CascadeSpec):
        self.spec = spec
        self.networks = [Network(s.spec, s.bundle) for s in spec.stages]
        self.counters = [0] * len(spec.stages)

    def reset_counters(self) -> None:
        self.counters = [0] * len(self.spec.stages)

    def invocation_stats(self) -> list[int]:
        """Forward passes per stage since the last reset."""
        return list(self.counters)

    def _stage_scores(self, stage_idx: int, frames: list[Frame]) -> np.ndarray:
        stage = self.spec.stages[stage_idx]
        x = np.stack([to_tensor(project(f, stage.projection)) for f in frames])
        scores = self.networks[stage_idx].predict_batch(x)
        self.counters[stage_idx] += len(frames)
        return scores

    def classify_frames(self, frames: list[Frame]) -> list[Prediction]:
        """Image mode over a batch: stages run in order and a sample stops at
        its first sub-threshold stage, so stage s only ever sees the samples
        all earlier stages accepted."""
        n = len(frames)
        last_score = np.full(n, np.nan)
        stage_reached = np.zeros(n, dtype=int)
        alive = np.arange(n)
        for s, stage in enumerate(self.spec.stages):
            if alive.size == 0:
                break
            scores = self._stage_scores(s, [frames[i] for i in alive])
            last_score[alive] = scores
            stage_reached[alive] = s + 1
            alive = alive[scores >= stage.threshold]
        label = np.zeros(n, dtype=bool)
        label[alive] = True
        return [Prediction(float(last_score[i]), bool(label[i]), int(stage_reached[i]))
                for i in range(n)]

    def classify_image(self, frame: Frame) -> Prediction:
        return self.classify_frames([frame])[0]

    def classify_sequence(self, frames: list[Frame], fps_effective: float = 1.0,
                          lazy: bool = False, lazy_distance: int = 1,
                          ) -> tuple[PredictionTrack, PredictionTrack]:
        """Video mode: per-frame tracks for both stages of a two-stage
        cascade; temporal fusion is the caller's step.

        Eager mode scores the verifier on every frame. Lazy mode scores it
        only within `lazy_distance` of a raw stage-1 positive, which leaves
        the fused result unchanged for any pipeline whose
        lazy_distance_for(window, radius) <= lazy_distance; unevaluated
        entries carry label negative and score NaN.
        """
        if len(self.spec.stages) != 2:
            raise ConfigMismatchError(
                f"sequence mode needs exactly 2 stages, got {len(self.spec.stages)}")
        if not frames:
            raise InputError("empty sequence")
        t_c = self.spec.stages[0].threshold
        t_l = self.spec.stages[1].threshold
        scores_c = self._stage_scores(0, frames)
        labels_c = scores_c >= t_c

        n = len(frames)
        if lazy:
            if lazy_distance < 0:
                raise InputError("lazy_distance must be non-negative")
            need = neighbor_any_labels(labels_c, lazy_distance)
            idx = np.flatnonzero(need)
            scores_l = np.full(n, np.nan)
            labels_l = np.zeros(n, dtype=bool)
            if idx.size:
                got = self._stage_scores(1, [frames[i] for i in idx])
                scores_l[idx] = got
                labels_l[idx] = got >= t_l
        else:
            scores_l = self._stage_scores(1, frames)
            labels_l = scores_l >= t_l

        track_c = PredictionTrack(labels_c, scores_c, fps_effective)
        track_l = PredictionTrack(labels_l, scores_l, fps_effective)
        return track_c, track_l
