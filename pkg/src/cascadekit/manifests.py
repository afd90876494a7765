"""Text manifests and on-disk network artifacts.

Frame manifest: optional `fps=<real>` and `stride=<int>` header lines, then
one image path per line, `#` comments allowed. Paths resolve relative to the
manifest's directory. `stride=k` keeps every k-th listed frame and divides
fps accordingly.

Cascade manifest: one stage per line,
`projection=<kind> weights=<path> threshold=<real>`.

A weight file `w.cgw` pairs with a sidecar `w.cgw.spec.json` holding the
architecture, so a weights path alone identifies a loadable network.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from .cascade import CascadeSpec, CascadeStage
from .errors import InputError
from .nn.spec import NetworkSpec
from .nn.weights import WeightBundle, load_file, save_file
from .ppm import read_ppm
from .preprocess import ChannelProjection, Frame

SPEC_SIDECAR_SUFFIX = ".spec.json"


def save_network(weights_path: str, spec: NetworkSpec, bundle: WeightBundle) -> None:
    """Write the weight file and its architecture sidecar."""
    save_file(bundle, weights_path)
    with open(weights_path + SPEC_SIDECAR_SUFFIX, "w", encoding="utf-8") as fh:
        fh.write(spec.to_json() + "\n")


def load_network(weights_path: str) -> tuple[NetworkSpec, WeightBundle]:
    sidecar = weights_path + SPEC_SIDECAR_SUFFIX
    try:
        with open(sidecar, "r", encoding="utf-8") as fh:
            spec = NetworkSpec.from_json(fh.read())
    except OSError as exc:
        raise InputError(f"{sidecar}: {exc.strerror or exc}") from exc
    bundle = load_file(weights_path, spec)
    return spec, bundle


@dataclass
class FrameManifest:
    paths: list[str]
    fps: float | None = None
    stride: int = 1

    def __post_init__(self):
        if self.stride < 1:
            raise InputError("stride must be >= 1")
        if self.fps is not None and self.fps <= 0:
            raise InputError("fps must be positive")

    @property
    def fps_effective(self) -> float | None:
        return None if self.fps is None else self.fps / self.stride

    def sampled_paths(self) -> list[str]:
        return self.paths[::self.stride]


def parse_frame_manifest(path: str) -> FrameManifest:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    base = os.path.dirname(os.path.abspath(path))
    paths: list[str] = []
    fps: float | None = None
    stride = 1
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("fps="):
            try:
                fps = float(line[4:])
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: bad fps value") from exc
        elif line.startswith("stride="):
            try:
                stride = int(line[7:])
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: bad stride value") from exc
        else:
            paths.append(os.path.normpath(os.path.join(base, line)))
    if not paths:
        raise InputError(f"{path}: no frame paths listed")
    return FrameManifest(paths, fps, stride)


def write_frame_manifest(path: str, rel_paths: list[str], fps: float | None = None,
                         stride: int = 1) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if fps is not None:
            fh.write(f"fps={fps:g}\n")
        if stride != 1:
            fh.write(f"stride={stride}\n")
        for p in rel_paths:
            fh.write(p + "\n")


def load_frames(manifest: FrameManifest) -> list[Frame]:
    """Read the sampled frames; timestamp_index is the post-stride ordinal."""
    frames = []
    for i, p in enumerate(manifest.sampled_paths()):
        frame = read_ppm(p)
        frame.timestamp_index = i
        frames.append(frame)
    return frames


def parse_cascade_manifest(path: str) -> CascadeSpec:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    base = os.path.dirname(os.path.abspath(path))
    stages = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = {}
        for part in line.split():
            if "=" not in part:
                raise InputError(f"{path}:{lineno}: expected key=value, got {part!r}")
            key, value = part.split("=", 1)
            fields[key] = value
        missing = {"projection", "weights", "threshold"} - set(fields)
        if missing:
            raise InputError(f"{path}:{lineno}: missing {', '.join(sorted(missing))}")
        try:
            threshold = float(fields["threshold"])
        except ValueError as exc:
            raise InputError(f"{path}:{lineno}: bad threshold") from exc
        weights_path = os.path.normpath(os.path.join(base, fields["weights"]))
        spec, bundle = load_network(weights_path)
        stages.append(CascadeStage(ChannelProjection(fields["projection"]),
                                   spec, bundle, threshold))
    if not stages:
        raise InputError(f"{path}: no stages defined")
    return CascadeSpec(stages)


def write_cascade_manifest(path: str, stages: list[tuple[str, str, float]]) -> None:
    """stages: (projection kind, weights path as written, threshold)."""
    with open(path, "w", encoding="utf-8") as fh:
        for kind, weights, threshold in stages:
            fh.write(f"projection={kind} weights={weights} threshold={threshold:g}\n")
