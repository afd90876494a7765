"""Desk-scale efficiency measurements: parameter counts, per-stage latency,
cascade-vs-eager cost, and compute-backend comparison.

Latency numbers are absolute for this machine and the numbers here make no
claim of comparability with published hardware; the report banner says so.
"""

from __future__ import annotations

import platform
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .cascade import Cascade, CascadeSpec
from .errors import InputError
from .nn.network import Network
from .nn.spec import NetworkSpec, count_params
from .nn.weights import WeightBundle
from .preprocess import Frame

# torchvision's ResNet-50 (IMAGENET1K) parameter count, used as a documented
# external reference; it is a constant here, never computed.
RESNET50_PARAMS = 25_557_032

MIN_REPS = 30
MIN_WARMUPS = 3
MIN_STREAM = 100

BANNER = ("desk-scale measurements on this machine only; ratios compare "
          "cascade vs always-both-stages, not any external baseline")


def machine_info() -> dict:
    return {
        "platform": platform.platform(),
        "machine": platform.machine(),
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "backend": kernels.active_backend(),
        "available_backends": kernels.available_backends(),
    }


@dataclass
class BenchReport:
    kind: str
    data: dict
    machine: dict = field(default_factory=machine_info)
    banner: str = BANNER

    def to_json_dict(self) -> dict:
        return {"kind": self.kind, "banner": self.banner,
                "machine": self.machine, "data": self.data}


def _stats_ms(samples: list[float]) -> dict:
    arr = np.asarray(samples, dtype=np.float64)
    return {
        "mean_ms": float(arr.mean()),
        "median_ms": float(np.median(arr)),
        "p95_ms": float(np.percentile(arr, 95)),
        "reps": len(samples),
    }


def _timed_reps(fn, reps: int, warmups: int) -> list[float]:
    for _ in range(warmups):
        fn()
    out = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        out.append((time.perf_counter() - t0) * 1000.0)
    return out


def bench_params(specs: dict[str, NetworkSpec]) -> BenchReport:
    """Exact parameter counts plus the ratio of the ResNet-50 reference to
    the combined cascade size (2 decimals)."""
    counts = {name: count_params(spec)[0] for name, spec in specs.items()}
    combined = sum(counts.values())
    data = {
        "params_per_model": counts,
        "params_combined": combined,
        "resnet50_reference": RESNET50_PARAMS,
        "reference_over_combined": round(RESNET50_PARAMS / combined, 2) if combined else None,
    }
    return BenchReport("params", data)


def bench_latency(cascade_spec: CascadeSpec, frames: list[Frame],
                  reps: int = MIN_REPS, warmups: int = MIN_WARMUPS) -> BenchReport:
    """Median/mean/p95 per-frame latency for each stage alone and for the
    short-circuiting cascade over the same frames."""
    if len(frames) < MIN_STREAM:
        raise InputError(f"need at least {MIN_STREAM} frames, got {len(frames)}")
    if reps < MIN_REPS:
        raise InputError(f"reps must be >= {MIN_REPS}")
    if warmups < MIN_WARMUPS:
        raise InputError(f"warmups must be >= {MIN_WARMUPS}")
    n = len(frames)

    stage_stats = []
    for i in range(len(cascade_spec.stages)):
        solo = Cascade(CascadeSpec([cascade_spec.stages[i]]))
        samples = _timed_reps(lambda: solo.classify_frames(frames), reps, warmups)
        stage_stats.append(_stats_ms([s / n for s in samples]))

    full = Cascade(cascade_spec)
    samples = _timed_reps(lambda: full.classify_frames(frames), reps, warmups)
    end_to_end = _stats_ms([s / n for s in samples])

    full.reset_counters()
    predictions = full.classify_frames(frames)
    invocations = full.invocation_stats()
    positive_rate = (invocations[1] / n) if len(invocations) > 1 else None

    eager_median = sum(s["median_ms"] for s in stage_stats)
    data = {
        "n_frames": n,
        "per_stage": stage_stats,
        "end_to_end": end_to_end,
        "invocations": invocations,
        "observed_positive_rate": positive_rate,
        "final_positives": sum(p.label for p in predictions),
        "eager_median_ms": eager_median,
        "cascade_vs_eager": round(end_to_end["median_ms"] / eager_median, 4)
        if eager_median > 0 else None,
    }
    return BenchReport("latency", data)


def compare_backends(spec: NetworkSpec, bundle: WeightBundle, x: np.ndarray,
                     reps: int = MIN_REPS, warmups: int = MIN_WARMUPS) -> BenchReport:
    """Median forward latency of each available compute backend on the same
    batch, plus compiled-over-numpy speedup when both exist."""
    results = {}
    for name in kernels.available_backends():
        with kernels.use_backend(name):
            net = Network(spec, bundle)
            samples = _timed_reps(lambda: net.predict_batch(x), reps, warmups)
        results[name] = _stats_ms(samples)
    data = {"batch": list(x.shape), "backends": results}
    if {"numpy", "compiled"} <= results.keys():
        data["numpy_over_compiled"] = round(
            results["numpy"]["median_ms"] / results["compiled"]["median_ms"], 3)
    return BenchReport("backends", data)
