"""Task performance, attention and behavioural measures for one level.

Undefined metrics (empty inputs, no saccades for a ratio) are ``None``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .config import MatchConfig
from .ingest import CLICK, TARGET, AoiMap, CleanSession

DEEP = "Deep processing/difficulty"
QUICK = "Quick scanning"
MODERATE_PROCESSING = "Moderate processing"
BROAD = "Broad visual search"
FOCUSED = "Focused examination"
MIXED = "Mixed search"
INSUFFICIENT = "Insufficient data"


@dataclass(frozen=True)
class MatchResult:
    matched: int
    target_count: int
    hit_rate: float
    pairs: tuple  # (target_time, click_time)
    no_targets: bool = False


@dataclass(frozen=True)
class SessionMetrics:
    hit_rate: float
    matched: int
    target_count: int
    attention_scatter: Optional[float]
    task_relevance: Optional[float]
    aoi_transitions: int
    gaze_efficiency: Optional[float]
    avg_fixation_duration: Optional[float]
    avg_saccade_amplitude: Optional[float]
    avg_saccade_velocity: Optional[float]
    fix_sacc_ratio: Optional[float]
    scan_path: float
    processing_style: str
    search_pattern: str
    fixation_count: int = 0
    saccade_count: int = 0
    sample_count: int = 0
    dropped_count: int = 0
    flags: tuple = field(default_factory=tuple)


def match_targets(targets: Sequence, clicks: Sequence, cfg: MatchConfig = MatchConfig()) -> MatchResult:
    """Pair each target with the earliest unused click inside the latency window.

    ``targets`` and ``clicks`` are timestamps (or objects with a
    ``timestamp`` attribute). Both window ends are inclusive.
    """
    t_times = sorted(getattr(t, "timestamp", t) for t in targets)
    c_times = sorted(getattr(c, "timestamp", c) for c in clicks)
    used = [False] * len(c_times)
    pairs = []
    for tt in t_times:
        for j, ct in enumerate(c_times):
            if used[j]:
                continue
            lat = ct - tt
            if lat > cfg.max_latency:
                break
            if lat >= cfg.min_latency:
                used[j] = True
                pairs.append((tt, ct))
                break
    if not t_times:
        return MatchResult(0, 0, 0.0, (), no_targets=True)
    return MatchResult(len(pairs), len(t_times), len(pairs) / len(t_times) * 100, tuple(pairs))


def attention_scatter(samples) -> Optional[float]:
    """Population standard deviation of x plus that of y."""
    if len(samples) == 0:
        return None
    xs = np.fromiter((s.x for s in samples), dtype=np.float64)
    ys = np.fromiter((s.y for s in samples), dtype=np.float64)
    return float(np.std(xs) + np.std(ys))


def aoi_labels(samples, aoi: AoiMap) -> list:
    return [aoi.lookup(s.x, s.y) for s in samples]


def task_relevance(samples, aoi: AoiMap, labels=None) -> Optional[float]:
    if len(samples) == 0:
        return None
    if labels is None:
        labels = aoi_labels(samples, aoi)
    bins = aoi.bin_names
    return sum(1 for lab in labels if lab is not None and lab in bins) / len(samples)


def aoi_transitions(samples, aoi: AoiMap, labels=None) -> int:
    if labels is None:
        labels = aoi_labels(samples, aoi)
    seq = [lab for lab in labels if lab is not None]
    return sum(1 for a, b in zip(seq, seq[1:]) if a != b)


def gaze_efficiency(fixations, samples) -> Optional[float]:
    n = samples if isinstance(samples, int) else len(samples)
    if n == 0:
        return None
    return len(fixations) / n


def scan_path_and_ratio(fixations, saccades):
    scan = math.fsum(s.amplitude for s in saccades)
    ratio = len(fixations) / len(saccades) if saccades else None
    return scan, ratio


def _mean(values) -> Optional[float]:
    values = list(values)
    return math.fsum(values) / len(values) if values else None


def processing_style(avg_duration: Optional[float]) -> str:
    if avg_duration is None:
        return INSUFFICIENT
    if avg_duration > 400:
        return DEEP
    if avg_duration < 200:
        return QUICK
    return MODERATE_PROCESSING


def search_pattern(avg_amplitude: Optional[float]) -> str:
    if avg_amplitude is None:
        return INSUFFICIENT
    if avg_amplitude > 300:
        return BROAD
    if avg_amplitude < 100:
        return FOCUSED
    return MIXED


def classify_behavior(fixations, saccades):
    """``(processing_style, search_pattern)`` from mean fixation duration and saccade amplitude."""
    return (
        processing_style(_mean(f.duration for f in fixations)),
        search_pattern(_mean(s.amplitude for s in saccades)),
    )


def compute_metrics(session: CleanSession, fixations, saccades, cfg: MatchConfig = MatchConfig()) -> SessionMetrics:
    samples = session.samples
    targets = [e for e in session.events if e.kind == TARGET]
    clicks = [e for e in session.events if e.kind == CLICK]
    match = match_targets(targets, clicks, cfg)
    labels = aoi_labels(samples, session.aoi_map)
    scan, ratio = scan_path_and_ratio(fixations, saccades)
    avg_dur = _mean(f.duration for f in fixations)
    avg_amp = _mean(s.amplitude for s in saccades)
    flags = []
    if match.no_targets:
        flags.append("no_targets")
    if not saccades:
        flags.append("no_saccades")
    if not fixations:
        flags.append("no_fixations")
    return SessionMetrics(
        hit_rate=match.hit_rate,
        matched=match.matched,
        target_count=match.target_count,
        attention_scatter=attention_scatter(samples),
        task_relevance=task_relevance(samples, session.aoi_map, labels),
        aoi_transitions=aoi_transitions(samples, session.aoi_map, labels),
        gaze_efficiency=gaze_efficiency(fixations, samples),
        avg_fixation_duration=avg_dur,
        avg_saccade_amplitude=avg_amp,
        avg_saccade_velocity=_mean(s.peak_velocity for s in saccades),
        fix_sacc_ratio=ratio,
        scan_path=scan,
        processing_style=processing_style(avg_dur),
        search_pattern=search_pattern(avg_amp),
        fixation_count=len(fixations),
        saccade_count=len(saccades),
        sample_count=len(samples),
        dropped_count=session.dropped_count,
        flags=tuple(flags),
    )
