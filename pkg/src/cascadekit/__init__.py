"""cascadekit: a verification cascade of small CNN classifiers.

A lightweight RGB classifier proposes positives and a grayscale verifier
re-checks them; any stage's negative is final. The package bundles the
from-scratch CNN engine, frame preprocessing, temporal post-processing for
video tracks, interval-based evaluation, a deterministic synthetic-scene
generator, and benchmarking, all behind one CLI.
"""

from . import bench, evalkit, kernels, manifests, nn, ppm, preprocess, synthcorpus, temporal
from .cascade import (
    Cascade,
    CascadeSpec,
    CascadeStage,
    Prediction,
    lazy_distance_for,
    standard_cascade,
)
from .errors import (
    CascadekitError,
    ConfigMismatchError,
    InputError,
    NumericError,
    TrainingDivergedError,
    WeightFormatError,
)
from .temporal import (
    PredictionTrack,
    majority_vote,
    neighbor_validate,
    pipeline_video,
    track_to_events,
)

__version__ = "1.0.0"

__all__ = [
    "Cascade", "CascadeSpec", "CascadeStage", "CascadekitError",
    "ConfigMismatchError", "InputError", "NumericError", "Prediction",
    "PredictionTrack", "TrainingDivergedError", "WeightFormatError",
    "bench", "evalkit", "kernels", "lazy_distance_for", "majority_vote",
    "manifests", "neighbor_validate", "nn", "pipeline_video", "ppm",
    "preprocess", "standard_cascade", "synthcorpus", "temporal",
    "track_to_events",
]
