"""Event-against-interval evaluation: tolerance matching, per-video
precision/recall/F1, and corpus medians.

Counting is scene-level: a truth interval is one true positive no matter how
many events hit it, extra events on an already-hit interval are not penalized,
and only events hitting no interval count as false positives.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

Event = tuple[float, float]


@dataclass(frozen=True)
class GroundTruthInterval:
    start_s: float
    end_s: float
    label: str = "explosion"

    def __post_init__(self):
        if not 0.0 <= self.start_s <= self.end_s:
            raise InputError(
                f"interval must satisfy 0 <= start <= end, got ({self.start_s}, {self.end_s})")


def interval_distance(a: Event, b: Event) -> float:
    """Gap between two closed intervals; 0 when they overlap or touch."""
    return max(0.0, b[0] - a[1], a[0] - b[1])


@dataclass
class MatchResult:
    tp: int
    fp: int
    fn: int
    # one entry per event, in input order: index of the truth interval it
    # landed on, or None for a false positive
    matches: list[int | None]


def _check_ordered(pairs, what: str) -> None:
    for p in pairs:
        if p[0] > p[1]:
            raise InputError(f"unordered {what} ({p[0]}, {p[1]})")


def match_events(events: list[Event], truth: list[GroundTruthInterval],
                 tolerance_s: float = 1.0) -> MatchResult:
    """Match detected events to truth intervals within `tolerance_s`.

    tp counts truth intervals hit by at least one event, fp counts events
    hitting no interval, fn counts the remaining intervals; tp + fn equals
    len(truth) by construction. The match list assigns events to intervals
    greedily in time order, purely for reporting.
    """
    if tolerance_s < 0:
        raise InputError("tolerance must be non-negative")
    _check_ordered(events, "event")
    spans = [(t.start_s, t.end_s) for t in truth]
    _check_ordered(spans, "truth interval")

    hit = [False] * len(truth)
    matches: list[int | None] = [None] * len(events)
    order = sorted(range(len(events)), key=lambda i: events[i])
    truth_order = sorted(range(len(truth)), key=lambda j: spans[j])
    claimed = [False] * len(truth)
    for i in order:
        near = [j for j in truth_order if interval_distance(events[i], spans[j]) <= tolerance_s]
        if not near:
            continue
        for j in near:
            hit[j] = True
        unclaimed = [j for j in near if not claimed[j]]
        pick = unclaimed[0] if unclaimed else near[0]
        claimed[pick] = True
        matches[i] = pick

    tp = sum(hit)
    fp = sum(1 for m in matches if m is None)
    fn = len(truth) - tp
    return MatchResult(tp, fp, fn, matches)


def precision_recall_f1(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    """0/0 ratios define as 1 (nothing predicted, nothing to find); F1 is 0
    when precision + recall is 0."""
    precision = 1.0 if tp + fp == 0 else tp / (tp + fp)
    recall = 1.0 if tp + fn == 0 else tp / (tp + fn)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return precision, recall, f1


@dataclass
class VideoEval:
    video_id: str
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    degenerate: bool
    events: list[Event] = field(default_factory=list)
    truth: list[GroundTruthInterval] = field(default_factory=list)
    matches: list[int | None] = field(default_factory=list)


@dataclass
class EvalReport:
    tolerance_s: float
    videos: dict[str, VideoEval]
    median_precision: float
    median_recall: float
    median_f1: float

    def to_json_dict(self) -> dict:
        return {
            "tolerance_s": self.tolerance_s,
            "videos": {
                vid: {
                    "tp": v.tp, "fp": v.fp, "fn": v.fn,
                    "precision": v.precision, "recall": v.recall, "f1": v.f1,
                    "degenerate": v.degenerate,
                    "matches": [
                        {"event": list(e),
                         "truth": None if m is None
                         else [v.truth[m].start_s, v.truth[m].end_s]}
                        for e, m in zip(v.events, v.matches)
                    ],
                }
                for vid, v in self.videos.items()
            },
            "aggregate": {
                "median_precision": self.median_precision,
                "median_recall": self.median_recall,
                "median_f1": self.median_f1,
                "video_count": len(self.videos),
            },
        }


def evaluate_video(video_id: str, events: list[Event],
                   truth: list[GroundTruthInterval],
                   tolerance_s: float = 1.0) -> VideoEval:
    res = match_events(events, truth, tolerance_s)
    p, r, f1 = precision_recall_f1(res.tp, res.fp, res.fn)
    return VideoEval(video_id, res.tp, res.fp, res.fn, p, r, f1,
                     degenerate=not events and not truth,
                     events=list(events), truth=list(truth), matches=res.matches)


def evaluate_corpus(corpus: dict[str, tuple[list[Event], list[GroundTruthInterval]]],
                    tolerance_s: float = 1.0) -> EvalReport:
    """Per-video metrics plus corpus medians (even counts average the two
    middle values)."""
    if not corpus:
        raise InputError("empty corpus")
    videos = {vid: evaluate_video(vid, events, truth, tolerance_s)
              for vid, (events, truth) in corpus.items()}
    vals = list(videos.values())
    return EvalReport(
        tolerance_s=tolerance_s,
        videos=videos,
        median_precision=float(np.median([v.precision for v in vals])),
        median_recall=float(np.median([v.recall for v in vals])),
        median_f1=float(np.median([v.f1 for v in vals])),
    )


def read_truth_csv(path: str) -> list[GroundTruthInterval]:
    """CSV with header `start_s,end_s,label`, one interval per line."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows or [c.strip() for c in rows[0][:2]] != ["start_s", "end_s"]:
        raise InputError(f"{path}: missing `start_s,end_s,label` header")
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) < 2:
            raise InputError(f"{path}:{lineno}: expected start_s,end_s,label")
        try:
            start, end = float(row[0]), float(row[1])
        except ValueError as exc:
            raise InputError(f"{path}:{lineno}: non-numeric interval bound") from exc
        label = row[2].strip() if len(row) > 2 else "explosion"
        try:
            out.append(GroundTruthInterval(start, end, label))
        except InputError as exc:
            raise InputError(f"{path}:{lineno}: {exc}") from exc
    return out


def write_truth_csv(path: str, truth: list[GroundTruthInterval]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["start_s", "end_s", "label"])
        for t in truth:
            writer.writerow([f"{t.start_s:.6g}", f"{t.end_s:.6g}", t.label])
