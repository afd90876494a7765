"""Command-line surface: train, classify, evaluate, gen, bench.

Exit codes: 0 success, 2 input error, 3 numeric failure, 4 configuration
mismatch. All reports are deterministic for fixed inputs and seeds; latency
reports segregate the timing numbers under a bench-specific key.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import bench as benchmod
from . import manifests, ppm, synthcorpus
from .cascade import Cascade, lazy_distance_for
from .errors import ConfigMismatchError, InputError, NumericError
from .evalkit import evaluate_corpus, read_truth_csv, write_truth_csv
from .nn.gradcheck import random_bundle
from .nn.spec import small_network, standard_network
from .nn.train import TrainConfig, train
from .preprocess import GRAYSCALE, Frame, project, resize_antialiased, to_tensor
from .temporal import pipeline_video, track_to_events

_ARCH_BUILDERS = {"small": small_network, "standard": standard_network}

_ARCHETYPE_ALIASES = {
    "plain": synthcorpus.PLAIN,
    "light": synthcorpus.LIGHT_CONFUSER,
    "structure": synthcorpus.STRUCTURE_CONFUSER,
    "explosion": synthcorpus.EXPLOSION,
}


def _resolve_archetype(name: str) -> str:
    if name in synthcorpus.ARCHETYPES:
        return name
    if name in _ARCHETYPE_ALIASES:
        return _ARCHETYPE_ALIASES[name]
    raise InputError(f"unknown archetype {name!r}")


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _load_class_dir(path: str, size: int) -> list[Frame]:
    if not os.path.isdir(path):
        raise InputError(f"not a directory: {path}")
    names = sorted(n for n in os.listdir(path) if n.endswith((".ppm", ".pgm")))
    if not names:
        raise InputError(f"no PPM files in {path}")
    return [resize_antialiased(ppm.read_ppm(os.path.join(path, n)), size) for n in names]


def cmd_train(args) -> int:
    pos = _load_class_dir(os.path.join(args.data_dir, "pos"), args.size)
    neg = _load_class_dir(os.path.join(args.data_dir, "neg"), args.size)

    def prep(frame: Frame) -> np.ndarray:
        if args.channels == "gray":
            if frame.channels == 3:
                frame = project(frame, GRAYSCALE)
            return to_tensor(frame)
        return to_tensor(frame)

    x = np.stack([prep(f) for f in pos + neg])
    y = np.concatenate([np.ones(len(pos)), np.zeros(len(neg))])
    channels = 1 if args.channels == "gray" else 3
    if x.shape[-1] != channels:
        raise ConfigMismatchError(
            f"--channels {args.channels} expects {channels}-channel input, "
            f"files have {x.shape[-1]}")
    spec = _ARCH_BUILDERS[args.arch](channels, args.size)
    config = TrainConfig(epochs=args.epochs, batch_size=args.batch_size,
                         learning_rate=args.learning_rate,
                         val_fraction=args.val_fraction, seed=args.seed)
    result = train(spec, x, y, config)
    manifests.save_network(args.out, spec, result.bundle)
    hist = result.history
    print(f"trained {args.arch} ({args.channels}) on {len(x)} samples, "
          f"{config.epochs} epochs")
    print(f"best epoch {result.best_epoch}: "
          f"val_loss={hist['val_loss'][result.best_epoch]:.6f} "
          f"val_accuracy={hist['val_accuracy'][result.best_epoch]:.4f}")
    print(f"wrote {args.out}")
    return 0


def _score_or_none(value: float) -> float | None:
    return None if math.isnan(value) else float(value)


def _label(flag) -> str:
    return "positive" if flag else "negative"


def cmd_classify(args) -> int:
    cspec = manifests.parse_cascade_manifest(args.cascade)
    manifest = manifests.parse_frame_manifest(args.frames)
    frames = [resize_antialiased(f, cspec.input_side)
              for f in manifests.load_frames(manifest)]
    listed = manifest.sampled_paths()
    shown = [os.path.basename(p) for p in listed]
    cascade = Cascade(cspec)

    if args.mode == "image":
        preds = cascade.classify_frames(frames)
        report = {
            "mode": "image",
            "frames": [
                {"index": i, "path": shown[i], "score": p.score,
                 "label": _label(p.label), "stage_reached": p.stage_reached}
                for i, p in enumerate(preds)
            ],
            "positives": sum(p.label for p in preds),
            "invocations": cascade.invocation_stats(),
        }
        _emit(_json_text(report), args.report)
        return 0

    fps = manifest.fps_effective
    if fps is None:
        raise InputError("video mode requires fps=<real> in the frames manifest")
    distance = lazy_distance_for(args.window, args.radius)
    track_c, track_l = cascade.classify_sequence(
        frames, fps, lazy=args.lazy, lazy_distance=distance)
    final = pipeline_video(track_c, track_l, args.window, args.radius)
    events = track_to_events(final)
    report = {
        "mode": "video",
        "fps_effective": fps,
        "window": args.window,
        "radius": args.radius,
        "lazy": bool(args.lazy),
        "events": [[s, e] for s, e in events],
        "per_frame": [
            {"index": i, "path": shown[i],
             "score_c": _score_or_none(track_c.scores[i]),
             "label_c": _label(track_c.labels[i]),
             "score_l": _score_or_none(track_l.scores[i]),
             "label_l": _label(track_l.labels[i]),
             "final": _label(final.labels[i])}
            for i in range(len(frames))
        ],
        "invocations": cascade.invocation_stats(),
    }
    _emit(_json_text(report), args.report)
    if args.track_csv:
        with open(args.track_csv, "w", encoding="utf-8") as fh:
            fh.write("frame_index,score_C,label_C,score_L,label_L,final_label\n")
            for i in range(len(frames)):
                fh.write(f"{i},{track_c.scores[i]!r},{_label(track_c.labels[i])},"
                         f"{track_l.scores[i]!r},{_label(track_l.labels[i])},"
                         f"{_label(final.labels[i])}\n")
    return 0


def _read_events_json(path: str) -> list[tuple[float, float]]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc
    if isinstance(obj, dict):
        if "events" not in obj:
            raise InputError(f"{path}: no `events` key in report")
        obj = obj["events"]
    if not isinstance(obj, list):
        raise InputError(f"{path}: events must be a list of [start, end]")
    out = []
    for item in obj:
        if not (isinstance(item, (list, tuple)) and len(item) == 2):
            raise InputError(f"{path}: events must be [start, end] pairs")
        out.append((float(item[0]), float(item[1])))
    return out


def cmd_evaluate(args) -> int:
    if len(args.events) != len(args.truth):
        raise InputError(
            f"{len(args.events)} event files vs {len(args.truth)} truth files")
    corpus = {}
    for ev_path, tr_path in zip(args.events, args.truth):
        vid = os.path.basename(ev_path)
        if vid in corpus:
            vid = ev_path
        corpus[vid] = (_read_events_json(ev_path), read_truth_csv(tr_path))
    report = evaluate_corpus(corpus, args.tolerance)
    _emit(_json_text(report.to_json_dict()), args.out)
    return 0


def cmd_gen_dataset(args) -> int:
    archetypes = tuple(_resolve_archetype(a) for a in args.archetypes)
    split = synthcorpus.gen_dataset(args.n_per_class, args.val_fraction,
                                    args.seed, args.size, archetypes)
    sets = (("train", split.train_frames, split.train_recipes),
            ("val", split.val_frames, split.val_recipes))
    for part, frames, recipes in sets:
        for sub in ("pos", "neg"):
            os.makedirs(os.path.join(args.out, part, sub), exist_ok=True)
        counters: dict[str, int] = {}
        for frame, recipe in zip(frames, recipes):
            sub = "pos" if recipe.archetype == synthcorpus.EXPLOSION else "neg"
            k = counters.get(recipe.archetype, 0)
            counters[recipe.archetype] = k + 1
            name = f"{recipe.archetype}_{k:05d}.ppm"
            ppm.write_ppm(os.path.join(args.out, part, sub, name), frame)
    meta = {"command": "gen dataset", "n_per_class": args.n_per_class,
            "val_fraction": args.val_fraction, "seed": args.seed,
            "size": args.size, "archetypes": list(archetypes)}
    with open(os.path.join(args.out, "gen_meta.json"), "w", encoding="utf-8") as fh:
        fh.write(_json_text(meta))
    print(f"wrote dataset under {args.out}")
    return 0


def _parse_timeline(text: str) -> list[tuple[str, float]]:
    return [(_resolve_archetype(name), seconds)
            for name, seconds in synthcorpus.parse_timeline(text)]


def cmd_gen_sequence(args) -> int:
    timeline = _parse_timeline(args.timeline)
    frames, truth = synthcorpus.gen_sequence(timeline, args.fps, args.seed, args.size)
    frames_dir = os.path.join(args.out, "frames")
    os.makedirs(frames_dir, exist_ok=True)
    rel_paths = []
    for i, frame in enumerate(frames):
        rel = os.path.join("frames", f"frame_{i:05d}.ppm")
        ppm.write_ppm(os.path.join(args.out, rel), frame)
        rel_paths.append(rel)
    manifests.write_frame_manifest(os.path.join(args.out, "frames.manifest"),
                                   rel_paths, fps=args.fps)
    write_truth_csv(os.path.join(args.out, "truth.csv"), truth)
    meta = {"command": "gen sequence", "timeline": args.timeline,
            "fps": args.fps, "seed": args.seed, "size": args.size,
            "frame_count": len(frames)}
    with open(os.path.join(args.out, "gen_meta.json"), "w", encoding="utf-8") as fh:
        fh.write(_json_text(meta))
    print(f"wrote {len(frames)} frames under {args.out}")
    return 0


def cmd_bench_params(args) -> int:
    build = _ARCH_BUILDERS[args.arch]
    report = benchmod.bench_params({"rgb": build(3, args.input_side),
                                    "gray": build(1, args.input_side)})
    _emit(_json_text(report.to_json_dict()), args.out)
    return 0


def cmd_bench_latency(args) -> int:
    cspec = manifests.parse_cascade_manifest(args.cascade)
    manifest = manifests.parse_frame_manifest(args.frames)
    frames = [resize_antialiased(f, cspec.input_side)
              for f in manifests.load_frames(manifest)]
    report = benchmod.bench_latency(cspec, frames, args.reps, args.warmups)
    _emit(_json_text(report.to_json_dict()), args.out)
    return 0


def cmd_bench_backends(args) -> int:
    spec = small_network(args.channels, args.size)
    bundle = random_bundle(spec, args.seed)
    rng = np.random.default_rng(args.seed)
    x = rng.random((args.batch, args.size, args.size, args.channels))
    report = benchmod.compare_backends(spec, bundle, x, args.reps, args.warmups)
    _emit(_json_text(report.to_json_dict()), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cascadekit",
        description="Cascaded image/video classification toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one cascade stage")
    p.add_argument("--data-dir", required=True, help="directory with pos/ and neg/ PPMs")
    p.add_argument("--channels", choices=("rgb", "gray"), default="rgb")
    p.add_argument("--arch", choices=sorted(_ARCH_BUILDERS), default="small")
    p.add_argument("--size", type=int, default=64, help="model input side")
    p.add_argument("--epochs", type=int, default=400)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--learning-rate", type=float, default=0.01)
    p.add_argument("--val-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output weight file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", help="run a cascade over frames")
    p.add_argument("--cascade", required=True, help="cascade manifest")
    p.add_argument("--frames", required=True, help="frame manifest")
    p.add_argument("--mode", choices=("image", "video"), default="image")
    p.add_argument("--window", type=int, default=3, help="majority-vote window (video)")
    p.add_argument("--radius", type=int, default=1, help="neighbor-validation radius (video)")
    p.add_argument("--lazy", action="store_true",
                   help="evaluate the verifier only near primary positives (video)")
    p.add_argument("--report", help="write the JSON report here instead of stdout")
    p.add_argument("--track-csv", help="also dump the per-frame track CSV (video)")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("evaluate", help="score detected events against truth intervals")
    p.add_argument("--events", nargs="+", required=True,
                   help="classify reports or bare event-list JSON, one per video")
    p.add_argument("--truth", nargs="+", required=True,
                   help="truth CSVs, aligned with --events")
    p.add_argument("--tolerance", type=float, default=1.0)
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("gen", help="generate synthetic data")
    gsub = p.add_subparsers(dest="gen_command", required=True)

    g = gsub.add_parser("dataset", help="labeled train/val image directories")
    g.add_argument("--out", required=True)
    g.add_argument("--n-per-class", type=int, required=True)
    g.add_argument("--val-fraction", type=float, default=0.2)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--size", type=int, default=64)
    g.add_argument("--archetypes", nargs="+", default=list(synthcorpus.ARCHETYPES))
    g.set_defaults(func=cmd_gen_dataset)

    g = gsub.add_parser("sequence", help="frame sequence with truth intervals")
    g.add_argument("--out", required=True)
    g.add_argument("--timeline", required=True,
                   help='e.g. "plain:2,explosion:1,plain:2" (seconds per segment)')
    g.add_argument("--fps", type=float, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--size", type=int, default=64)
    g.set_defaults(func=cmd_gen_sequence)

    p = sub.add_parser("bench", help="efficiency measurements")
    bsub = p.add_subparsers(dest="bench_command", required=True)

    b = bsub.add_parser("params", help="parameter counts and reference ratio")
    b.add_argument("--arch", choices=sorted(_ARCH_BUILDERS), default="standard")
    b.add_argument("--input-side", type=int, default=300)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench_params)

    b = bsub.add_parser("latency", help="per-stage and cascade latency")
    b.add_argument("--cascade", required=True)
    b.add_argument("--frames", required=True)
    b.add_argument("--reps", type=int, default=benchmod.MIN_REPS)
    b.add_argument("--warmups", type=int, default=benchmod.MIN_WARMUPS)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench_latency)

    b = bsub.add_parser("backends", help="compare compute backends")
    b.add_argument("--channels", type=int, choices=(1, 3), default=3)
    b.add_argument("--size", type=int, default=64)
    b.add_argument("--batch", type=int, default=8)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--reps", type=int, default=benchmod.MIN_REPS)
    b.add_argument("--warmups", type=int, default=benchmod.MIN_WARMUPS)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench_backends)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConfigMismatchError as exc:
        print(f"configuration mismatch: {exc}", file=sys.stderr)
        return 4
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
