"""Synthetic sessions with planted ground truth, plus brute-force oracles.

Randomness comes from numpy's PCG64 bit generator
(``numpy.random.Generator(numpy.random.PCG64(seed))``), so a seed fixes the
stream exactly.

The oracle functions here deliberately share no code with ``detect`` or
``metrics``; they exist to check those modules.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import ScreenConfig
from .ingest import AoiMap, AoiRect, CleanSession, GazeSample, TimelineEvent

CSV_COLUMNS = ("timestamp_ms", "level", "gaze_x", "gaze_y", "event",
               "aoi_name", "aoi_x", "aoi_y", "aoi_w", "aoi_h", "aoi_role")
TARGET_TEXT = "Target Spawn"
CLICK_TEXT = "Picked Trash"


class SynthSpecError(ValueError):
    pass


@dataclass(frozen=True)
class SynthCluster:
    center: tuple
    radius: float
    samples: int
    dwell: float  # ms; samples are spread evenly over it


@dataclass(frozen=True)
class SynthTarget:
    time: int  # ms after level start
    latency: Optional[int] = None  # None: no click


@dataclass(frozen=True)
class SynthSpec:
    seed: int
    clusters: tuple
    jump_velocity: float = 1500.0
    interval: int = 20
    noise: float = 0.0
    aois: tuple = ()
    targets: tuple = ()
    level: int = 1
    start_ms: int = 0
    screen: ScreenConfig = field(default_factory=ScreenConfig)


@dataclass(frozen=True)
class PlantedFixation:
    center: tuple
    start: int
    end: int
    duration: int
    sample_count: int
    first_index: int
    last_index: int


@dataclass(frozen=True)
class GroundTruth:
    fixations: tuple
    saccade_endpoints: tuple  # ((x1, y1), (x2, y2)) between consecutive clusters
    aoi_labels: tuple
    intended_hit_rate: float
    matched: int
    target_count: int

    def recoverable(self, min_cluster_size: int = 3, min_duration: float = 100.0) -> list:
        return [f for f in self.fixations
                if f.sample_count >= min_cluster_size and f.duration >= min_duration]


def _validate(spec: SynthSpec):
    if spec.interval <= 0:
        raise SynthSpecError("interval must be positive")
    if spec.jump_velocity <= 0:
        raise SynthSpecError("jump_velocity must be positive")
    for k, c in enumerate(spec.clusters):
        if c.samples < 1:
            raise SynthSpecError(f"cluster {k}: needs at least one sample")
        if c.dwell < spec.interval * c.samples:
            raise SynthSpecError(
                f"cluster {k}: dwell {c.dwell} ms cannot hold {c.samples} samples "
                f"at a {spec.interval} ms sampling interval"
            )
        if c.radius < 0:
            raise SynthSpecError(f"cluster {k}: negative radius")


def oracle_aoi_label(x: float, y: float, aois: Sequence[AoiRect], tolerance: float) -> Optional[str]:
    """Brute-force containment scan over inflated rectangles, first match wins."""
    hits = [a.name for a in aois
            if a.x - tolerance <= x and x <= a.x + a.w + tolerance
            and a.y - tolerance <= y and y <= a.y + a.h + tolerance]
    return hits[0] if hits else None


def generate_session(spec: SynthSpec):
    """Build a :class:`CleanSession` and its :class:`GroundTruth` from ``spec``."""
    _validate(spec)
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    screen = spec.screen
    samples: list = []
    planted, jumps = [], []
    t = spec.start_ms
    prev_center = None
    for c in spec.clusters:
        cx, cy = float(c.center[0]), float(c.center[1])
        if prev_center is not None:
            # straight transit at >= jump_velocity
            dist = math.dist(prev_center, (cx, cy))
            step = spec.jump_velocity * spec.interval / 1000.0
            n_steps = max(1, int(dist // step))
            for k in range(1, n_steps):
                f = k / n_steps
                samples.append((t + k * spec.interval,
                                prev_center[0] + f * (cx - prev_center[0]),
                                prev_center[1] + f * (cy - prev_center[1])))
            t += n_steps * spec.interval
            jumps.append((prev_center, (cx, cy)))
        first = len(samples)
        start = t
        spacing = c.dwell / c.samples
        for j in range(c.samples):
            ang = rng.uniform(0.0, 2.0 * math.pi)
            rad = c.radius * math.sqrt(rng.uniform(0.0, 1.0))
            x = cx + rad * math.cos(ang)
            y = cy + rad * math.sin(ang)
            if spec.noise > 0:
                x += rng.normal(0.0, spec.noise)
                y += rng.normal(0.0, spec.noise)
            samples.append((start + int(round(j * spacing)), x, y))
        last_t = samples[-1][0]
        planted.append(PlantedFixation((cx, cy), start, last_t, last_t - start, c.samples,
                                       first, len(samples) - 1))
        t = last_t
        prev_center = (cx, cy)

    gaze = []
    for ts, x, y in samples:
        if not (0.0 <= x < screen.width and 0.0 <= y < screen.height) or (x == 0 and y == 0):
            raise SynthSpecError(f"sample ({x:.1f}, {y:.1f}) at t={ts} falls outside the screen")
        gaze.append(GazeSample(int(ts), float(x), float(y), spec.level))

    events = []
    in_window = 0
    for tg in spec.targets:
        tt = spec.start_ms + tg.time
        events.append(TimelineEvent(tt, "target", TARGET_TEXT, spec.level))
        if tg.latency is not None:
            events.append(TimelineEvent(tt + tg.latency, "click", CLICK_TEXT, spec.level))
            if 522 <= tg.latency <= 5000:
                in_window += 1
    events.sort(key=lambda e: (e.timestamp, e.kind != "target"))

    labels = tuple(oracle_aoi_label(s.x, s.y, spec.aois, screen.aoi_tolerance) for s in gaze)
    n_targets = len(spec.targets)
    truth = GroundTruth(
        fixations=tuple(planted),
        saccade_endpoints=tuple(jumps),
        aoi_labels=labels,
        intended_hit_rate=in_window / n_targets * 100 if n_targets else 0.0,
        matched=in_window,
        target_count=n_targets,
    )
    aoi_map = AoiMap(tuple(spec.aois), float(screen.aoi_tolerance))
    session = CleanSession(tuple(gaze), tuple(events), aoi_map, screen, 0, 0, f"synth:{spec.seed}")
    return session, truth


def oracle_ivt(samples, v: float) -> list:
    """Direct transcription of the I-VT rule, one label per sample from the second on."""
    out = []
    for i in range(1, len(samples)):
        a, b = samples[i - 1], samples[i]
        ms = b.timestamp - a.timestamp
        if ms == 0:
            out.append("saccade")
            continue
        speed = math.sqrt((b.x - a.x) * (b.x - a.x) + (b.y - a.y) * (b.y - a.y)) / (ms / 1000)
        out.append("fixation" if speed <= v else "saccade")
    return out


def oracle_match(targets: Sequence[int], clicks: Sequence[int], lo: float = 522, hi: float = 5000) -> list:
    """Greedy matching by exhaustive search: earliest target first, earliest free click."""
    free = sorted(clicks)
    pairs = []
    for tt in sorted(targets):
        candidates = [c for c in free if lo <= c - tt <= hi]
        if candidates:
            best = min(candidates)
            free.remove(best)
            pairs.append((tt, best))
    return pairs


def oracle_transitions(labels: Sequence[Optional[str]]) -> int:
    count = 0
    prev = None
    for lab in labels:
        if lab is None:
            continue
        if prev is not None and lab != prev:
            count += 1
        prev = lab
    return count


# spec files -----------------------------------------------------------------

def demo_plan() -> dict:
    """Three-level demo session used by ``gazetrace synth`` without a spec file."""
    aois = [
        {"name": "glass_bin", "x": 200, "y": 820, "w": 220, "h": 200},
        {"name": "plastic_bin", "x": 640, "y": 820, "w": 220, "h": 200},
        {"name": "paper_bin", "x": 1080, "y": 820, "w": 220, "h": 200},
        {"name": "organic_bin", "x": 1520, "y": 820, "w": 220, "h": 200},
    ]
    level_clusters = [
        [([960, 300], 40), ([310, 900], 60), ([960, 320], 30), ([750, 910], 40), ([1190, 930], 25),
         ([500, 500], 20), ([1630, 910], 35)],
        [([960, 280], 20), ([1630, 930], 5), ([300, 200], 8), ([1190, 920], 50), ([1500, 400], 6),
         ([310, 910], 30)],
        [([900, 300], 15), ([1600, 900], 120), ([1200, 600], 10)],
    ]
    levels = []
    for lvl, clusters in enumerate(level_clusters, 1):
        levels.append({
            "level": lvl,
            "clusters": [{"center": c, "radius": 1.5, "samples": n, "dwell_ms": n * 25}
                         for c, n in clusters],
            "targets": [{"time_ms": 200, "latency_ms": 900},
                        {"time_ms": 6000, "latency_ms": 1500 if lvl < 3 else None},
                        {"time_ms": 12000, "latency_ms": 400}],
        })
    return {"seed": 7, "interval_ms": 20, "jump_velocity": 1500.0, "noise_sigma": 0.0,
            "aois": aois, "levels": levels}


def plan_to_specs(plan: dict, screen: Optional[ScreenConfig] = None) -> list:
    """Expand a JSON session plan into one :class:`SynthSpec` per level.

    Level ``k`` (0-based position in the plan) uses seed ``seed + k`` and
    starts 1000 ms after the previous level's last sample or event.
    """
    screen = screen or ScreenConfig()
    try:
        aois = tuple(AoiRect(a["name"], float(a["x"]), float(a["y"]), float(a["w"]), float(a["h"]),
                             a.get("role", "bin")) for a in plan.get("aois", []))
        seed = int(plan.get("seed", 0))
        interval = int(plan.get("interval_ms", 20))
        specs = []
        start = 0
        for k, lv in enumerate(plan["levels"]):
            clusters = tuple(SynthCluster(tuple(c["center"]), float(c.get("radius", 0.0)),
                                          int(c["samples"]), float(c["dwell_ms"])) for c in lv["clusters"])
            targets = tuple(SynthTarget(int(tg["time_ms"]), tg.get("latency_ms"))
                            for tg in lv.get("targets", []))
            spec = SynthSpec(seed + k, clusters, float(plan.get("jump_velocity", 1500.0)), interval,
                             float(plan.get("noise_sigma", 0.0)), aois, targets,
                             int(lv.get("level", k + 1)), start, screen)
            specs.append(spec)
            session, _ = generate_session(spec)
            ends = [s.timestamp for s in session.samples] + [e.timestamp for e in session.events]
            start = max(ends, default=start) + 1000
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SynthSpecError):
            raise
        raise SynthSpecError(f"bad synth plan: {exc}") from None
    return specs


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def session_csv(sessions: Sequence[CleanSession]) -> str:
    """Render sessions in the canonical ingest format (AOI rows first)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    seen = set()
    for s in sessions:
        for a in s.aoi_map.aois:
            if a.name in seen:
                continue
            seen.add(a.name)
            w.writerow(["", "", "", "", "", a.name, _fmt(a.x), _fmt(a.y), _fmt(a.w), _fmt(a.h), a.role])
    for s in sessions:
        rows = [(g.timestamp, 0, [g.timestamp, g.level, _fmt(g.x), _fmt(g.y), "", "", "", "", "", "", ""])
                for g in s.samples]
        rows += [(e.timestamp, 1, [e.timestamp, e.level, "", "", e.payload, "", "", "", "", "", ""])
                 for e in s.events]
        rows.sort(key=lambda r: (r[0], r[1]))
        w.writerows(r[2] for r in rows)
    return buf.getvalue()


def truth_json(specs: Sequence[SynthSpec], truths: Sequence[GroundTruth]) -> str:
    levels = []
    for spec, tr in zip(specs, truths):
        d = asdict(tr)
        d["level"] = spec.level
        d["seed"] = spec.seed
        levels.append(d)
    return json.dumps({"generator": "numpy.PCG64", "levels": levels}, indent=2) + "\n"


def write_synthetic(plan: dict, out_path, screen: Optional[ScreenConfig] = None):
    """Write the session CSV and a ``<stem>.truth.json`` sidecar; return both paths."""
    specs = plan_to_specs(plan, screen)
    pairs = [generate_session(s) for s in specs]
    out_path = Path(out_path)
    out_path.write_text(session_csv([p[0] for p in pairs]), encoding="utf-8")
    truth_path = out_path.with_name(out_path.stem + ".truth.json")
    truth_path.write_text(truth_json(specs, [p[1] for p in pairs]), encoding="utf-8")
    return out_path, truth_path
