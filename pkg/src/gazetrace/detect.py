"""Fixation and saccade detection.

Two passes share one velocity series: a basic I-VT labelling (inclusive
threshold, fixation when ``v <= v_basic``) used for diagnostics, and a
greedy spatial clustering pass that produces the fixation and saccade
events used by every downstream metric.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .config import DetectionConfig
from .ingest import AoiMap, GazeSample, Point

FIXATION = "fixation"
SACCADE = "saccade"


class OrderingError(ValueError):
    """Samples are not in non-decreasing timestamp order."""


@dataclass(frozen=True)
class SampleLabel:
    index: int
    kind: str
    velocity: float


@dataclass(frozen=True)
class Fixation:
    center: Point
    start: int
    end: int
    duration: float
    dispersion: float
    sample_count: int
    dominant_aoi: Optional[str] = None


@dataclass(frozen=True)
class Saccade:
    amplitude: float
    peak_velocity: float
    duration: float
    start: int
    end: int
    start_point: Point
    end_point: Point
    degenerate: bool = False


def velocity(prev: GazeSample, curr: GazeSample) -> float:
    dt = curr.timestamp - prev.timestamp
    if dt < 0:
        raise OrderingError(f"timestamp goes backwards: {prev.timestamp} -> {curr.timestamp}")
    if dt == 0:
        return math.inf
    dx = curr.x - prev.x
    dy = curr.y - prev.y
    return math.sqrt(dx * dx + dy * dy) / (dt / 1000.0)


def _arrays(samples: Sequence[GazeSample]):
    n = len(samples)
    x = np.fromiter((s.x for s in samples), dtype=np.float64, count=n)
    y = np.fromiter((s.y for s in samples), dtype=np.float64, count=n)
    t = np.fromiter((s.timestamp for s in samples), dtype=np.int64, count=n)
    return x, y, t


def _velocities(x, y, t, backend=None) -> np.ndarray:
    try:
        return kernels.velocities(x, y, t, backend=backend)
    except ValueError as exc:
        i = exc.args[0] if exc.args and isinstance(exc.args[0], int) else None
        if i is None:
            raise
        raise OrderingError(f"timestamp goes backwards at sample {i}: {t[i - 1]} -> {t[i]}") from None


def classify_ivt(samples: Sequence[GazeSample], cfg: DetectionConfig = DetectionConfig(), backend=None) -> list:
    """One :class:`SampleLabel` per sample from the second one on."""
    if len(samples) < 2:
        return []
    x, y, t = _arrays(samples)
    vel = _velocities(x, y, t, backend)
    codes = kernels.ivt_labels(vel, cfg.v_basic, backend=backend)
    return [
        SampleLabel(i + 1, SACCADE if c else FIXATION, float(v))
        for i, (c, v) in enumerate(zip(codes.tolist(), vel.tolist()))
    ]


def dispersion(xs, ys) -> float:
    """I-DT dispersion: x-range plus y-range."""
    return float((max(xs) - min(xs)) + (max(ys) - min(ys)))


def _dominant(labels) -> Optional[str]:
    counts = Counter(labels)
    if not counts:
        return None
    best = max(counts.values())
    return next(lab for lab in labels if counts[lab] == best)


def finalize_cluster(members: Sequence[GazeSample], aoi: Optional[AoiMap] = None,
                     cfg: Optional[DetectionConfig] = None) -> Fixation:
    if not members:
        raise AssertionError("finalize_cluster needs at least one member")
    duration = members[-1].timestamp - members[0].timestamp
    if cfg is not None and (len(members) < cfg.min_cluster_size or duration < cfg.min_duration):
        raise AssertionError(
            f"cluster of {len(members)} samples over {duration} ms does not meet fixation minima"
        )
    xs = [s.x for s in members]
    ys = [s.y for s in members]
    center = Point(math.fsum(xs) / len(xs), math.fsum(ys) / len(ys))
    dominant = None
    if aoi is not None:
        dominant = _dominant([aoi.lookup(s.x, s.y) for s in members])
    return Fixation(center, members[0].timestamp, members[-1].timestamp, float(duration),
                    dispersion(xs, ys), len(members), dominant)


def _peak(vel: Sequence[float]) -> float:
    finite = [v for v in vel if math.isfinite(v)]
    return max(finite) if finite else 0.0


def summarize_saccade(segment: Sequence[GazeSample], vel: Optional[Sequence[float]] = None) -> Saccade:
    """Amplitude, peak velocity and duration of one saccade segment.

    ``vel`` may carry the precomputed pair velocities of the segment
    (``len(segment) - 1`` values). Zero-interval pairs never set the peak.
    """
    if len(segment) < 2:
        p = Point(segment[0].x, segment[0].y) if segment else Point(0.0, 0.0)
        t = segment[0].timestamp if segment else 0
        return Saccade(0.0, 0.0, 0.0, t, t, p, p, degenerate=True)
    first, last = segment[0], segment[-1]
    if vel is None:
        vel = [velocity(a, b) for a, b in zip(segment, segment[1:])]
    return Saccade(
        amplitude=math.hypot(last.x - first.x, last.y - first.y),
        peak_velocity=float(_peak(vel)),
        duration=float(last.timestamp - first.timestamp),
        start=first.timestamp,
        end=last.timestamp,
        start_point=Point(first.x, first.y),
        end_point=Point(last.x, last.y),
    )


@dataclass(frozen=True)
class Detection:
    """Events plus per-sample diagnostics from one detection run."""

    fixations: tuple
    saccades: tuple
    velocities: np.ndarray
    ivt_codes: np.ndarray
    cluster_id: np.ndarray
    # index ranges (first, last) of accepted clusters
    fixation_spans: tuple


def run_detection(samples: Sequence[GazeSample], cfg: DetectionConfig = DetectionConfig(),
                  aoi: Optional[AoiMap] = None, backend=None) -> Detection:
    n = len(samples)
    if n == 0:
        empty = np.zeros(0)
        return Detection((), (), empty, empty.astype(np.int8), empty.astype(np.int64), ())
    x, y, t = _arrays(samples)
    vel = _velocities(x, y, t, backend)
    codes = kernels.ivt_labels(vel, cfg.v_basic, backend=backend)
    starts = kernels.cluster_starts(x, y, vel, cfg.v_advanced, cfg.spatial_threshold, backend=backend).tolist()
    bounds = starts + [n]

    cluster_id = np.repeat(np.arange(len(starts), dtype=np.int64), np.diff(bounds))
    spans = []
    for a, b in zip(bounds, bounds[1:]):
        last = b - 1
        if b - a >= cfg.min_cluster_size and t[last] - t[a] >= cfg.min_duration:
            spans.append((a, last))

    fixations = tuple(finalize_cluster(samples[a:b + 1], aoi) for a, b in spans)

    # Saccade segments run between accepted clusters, boundary samples included;
    # a leading/trailing segment exists only when the stream breaks there.
    segments = []
    had_break = len(starts) > 1
    if not spans:
        if had_break:
            segments.append((0, n - 1))
    else:
        if spans[0][0] > 0:
            segments.append((0, spans[0][0]))
        for (_, prev_end), (next_start, _) in zip(spans, spans[1:]):
            segments.append((prev_end, next_start))
        if spans[-1][1] < n - 1:
            segments.append((spans[-1][1], n - 1))
    vel_list = vel.tolist()
    saccades = tuple(summarize_saccade(samples[a:b + 1], vel_list[a:b]) for a, b in segments)
    return Detection(fixations, saccades, vel, codes, cluster_id, tuple(spans))


def detect_events(samples: Sequence[GazeSample], cfg: DetectionConfig = DetectionConfig(),
                  aoi: Optional[AoiMap] = None, backend=None):
    """Greedy clustering into ``(fixations, saccades)``."""
    d = run_detection(samples, cfg, aoi, backend)
    return list(d.fixations), list(d.saccades)


def debug_rows(samples: Sequence[GazeSample], d: Detection):
    """Rows for the per-sample debug dump: index, timestamp, x, y, velocity, label, cluster."""
    yield ("index", "timestamp_ms", "x", "y", "velocity", "ivt_label", "cluster_id")
    for i, s in enumerate(samples):
        if i == 0:
            v, lab = "", ""
        else:
            v = "inf" if math.isinf(d.velocities[i - 1]) else f"{d.velocities[i - 1]:.3f}"
            lab = SACCADE if d.ivt_codes[i - 1] else FIXATION
        yield (str(i), str(s.timestamp), f"{s.x:.3f}", f"{s.y:.3f}", v, lab, str(int(d.cluster_id[i])))
