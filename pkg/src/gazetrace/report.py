"""Session reports: structured JSON, markdown and plot-ready CSV series.

Every float in a :class:`SessionReport` is already rounded (half-up) to the
precision it is printed with, so writing and re-reading a report gives back
an equal object and repeated runs write identical bytes.

Output layout::

    <out>/report.json
    <out>/report.md
    <out>/plots/fixations_L<k>.csv     x,y,duration
    <out>/plots/saccades_L<k>.csv      x1,y1,x2,y2,amplitude,peak_velocity
    <out>/plots/scanpath_L<k>.csv      index,x,y
    <out>/plots/timeline_L<k>.csv      timestamp,kind,duration
    <out>/plots/histograms_L<k>.csv    metric,bin_start,bin_end,count
    <out>/plots/levels.csv             one row of headline metrics per level
"""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .assess import NEEDS_SUPPORT, NEEDS_SUPPORT_ALIAS, InterventionPlan, RiskAssessment, RiskProfile
from .detect import Fixation, Saccade
from .ingest import Point, TimelineEvent
from .metrics import SessionMetrics

UNDEFINED = "—"
FORMATS = ("json", "md", "csv")

# decimals per float field; anything not listed is a px/ms/percent value (1 decimal)
_FRACTION_FIELDS = {"task_relevance", "gaze_efficiency", "fix_sacc_ratio"}


def round_half_up(value: Optional[float], decimals: int) -> Optional[float]:
    if value is None:
        return None
    if not math.isfinite(value):
        raise ValueError(f"cannot report non-finite value {value!r}")
    q = Decimal(repr(float(value))).quantize(Decimal(1).scaleb(-decimals), rounding=ROUND_HALF_UP)
    return float(q)


def _decimals(name: str) -> int:
    return 3 if name in _FRACTION_FIELDS else 1


@dataclass(frozen=True)
class LevelReport:
    level: int
    metrics: SessionMetrics
    risk: RiskAssessment
    profile: RiskProfile
    trend_score: float
    performance: str
    fixations: tuple
    saccades: tuple
    events: tuple


@dataclass(frozen=True)
class SessionReport:
    student_id: str
    levels: tuple
    plan: Optional[InterventionPlan]
    tool_version: str
    config_echo: dict
    errors: tuple = ()  # (level, message) for levels that could not be analysed


def _q_dataclass(obj):
    """Copy of a flat dataclass with its floats rounded per field."""
    changes = {}
    for f in dataclasses.fields(obj):
        v = getattr(obj, f.name)
        if isinstance(v, float):
            changes[f.name] = round_half_up(v, _decimals(f.name))
        elif isinstance(v, Point):
            changes[f.name] = Point(round_half_up(v.x, 1), round_half_up(v.y, 1))
    return dataclasses.replace(obj, **changes)


def make_level_report(level, metrics, risk, profile, performance, fixations, saccades, events) -> LevelReport:
    return LevelReport(
        level=int(level),
        metrics=_q_dataclass(metrics),
        risk=risk,
        profile=_q_dataclass(profile),
        trend_score=round_half_up(profile.trend_score, 1),
        performance=performance,
        fixations=tuple(_q_dataclass(f) for f in fixations),
        saccades=tuple(_q_dataclass(s) for s in saccades),
        events=tuple(events),
    )


def make_session_report(student_id, levels, plan, tool_version, config_echo, errors=()) -> SessionReport:
    if plan is not None:
        plan = dataclasses.replace(plan, avg_relevance=round_half_up(plan.avg_relevance, 1))
    return SessionReport(student_id, tuple(levels), plan, tool_version, config_echo,
                         tuple((int(lv), str(msg)) for lv, msg in errors))


# structured output ------------------------------------------------------------

class _Fixed:
    __slots__ = ("value", "decimals")

    def __init__(self, value: float, decimals: int):
        self.value = value
        self.decimals = decimals


def _tree(obj, name: str = ""):
    if dataclasses.is_dataclass(obj):
        return {f.name: _tree(getattr(obj, f.name), f.name) for f in dataclasses.fields(obj)}
    if name == "config_echo":
        return obj  # floats keep full precision so the run can be reproduced
    if isinstance(obj, Point):
        return {"x": _Fixed(obj.x, 1), "y": _Fixed(obj.y, 1)}
    if isinstance(obj, dict):
        return {str(k): _tree(v, str(k)) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_tree(v, name) for v in obj]
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        return _Fixed(obj, _decimals(name))
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _emit(node, indent: int, out: list):
    pad = "  " * indent
    if isinstance(node, dict):
        if not node:
            out.append("{}")
            return
        out.append("{\n")
        items = list(node.items())
        for i, (k, v) in enumerate(items):
            out.append(f"{pad}  {json.dumps(k)}: ")
            _emit(v, indent + 1, out)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(node, list):
        if not node:
            out.append("[]")
            return
        out.append("[\n")
        for i, v in enumerate(node):
            out.append(pad + "  ")
            _emit(v, indent + 1, out)
            out.append(",\n" if i < len(node) - 1 else "\n")
        out.append(pad + "]")
    elif isinstance(node, _Fixed):
        out.append(f"{node.value:.{node.decimals}f}")
    else:
        out.append(json.dumps(node, ensure_ascii=False))


def report_to_json(report: SessionReport) -> str:
    tree = _tree(report)
    tree["cross_level_table"] = cross_level_table(report.levels)
    out: list = []
    _emit(tree, 0, out)
    return "".join(out) + "\n"


def _point(d) -> Point:
    return Point(float(d["x"]), float(d["y"]))


def _build(cls, d: dict, **special):
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name not in d:
            continue
        v = d[f.name]
        if f.name in special:
            v = special[f.name](v)
        elif isinstance(v, list):
            v = tuple(tuple(x) if isinstance(x, list) else x for x in v)
        elif f.type in ("float", "Optional[float]") and v is not None:
            v = float(v)
        kwargs[f.name] = v
    return cls(**kwargs)


def report_from_json(text: str) -> SessionReport:
    d = json.loads(text)
    levels = []
    for lv in d["levels"]:
        levels.append(LevelReport(
            level=lv["level"],
            metrics=_build(SessionMetrics, lv["metrics"]),
            risk=_build(RiskAssessment, lv["risk"]),
            profile=_build(RiskProfile, lv["profile"]),
            trend_score=float(lv["trend_score"]),
            performance=lv["performance"],
            fixations=tuple(_build(Fixation, f, center=_point) for f in lv["fixations"]),
            saccades=tuple(_build(Saccade, s, start_point=_point, end_point=_point) for s in lv["saccades"]),
            events=tuple(_build(TimelineEvent, e) for e in lv["events"]),
        ))
    plan = None
    if d["plan"] is not None:
        plan = _build(InterventionPlan, d["plan"], audience_notes=dict)
    return SessionReport(d["student_id"], tuple(levels), plan, d["tool_version"], d["config_echo"],
                         tuple(tuple(e) for e in d["errors"]))


# tables -----------------------------------------------------------------------

def fmt(value: Optional[float], decimals: int = 1) -> str:
    if value is None:
        return UNDEFINED
    return f"{round_half_up(value, decimals):.{decimals}f}"


def cross_level_table(levels: Sequence[LevelReport]) -> list:
    """One row per level; ratio recomputed from the event counts."""
    rows = []
    for lv in levels:
        n_fix, n_sac = len(lv.fixations), len(lv.saccades)
        m = lv.metrics
        rows.append({
            "level": lv.level,
            "fixations": n_fix,
            "saccades": n_sac,
            "avg_fixation_duration_ms": fmt(m.avg_fixation_duration),
            "avg_saccade_amplitude_px": fmt(m.avg_saccade_amplitude),
            "avg_saccade_velocity_px_s": fmt(m.avg_saccade_velocity),
            "fix_sacc_ratio": fmt(n_fix / n_sac if n_sac else None),
        })
    return rows


_TABLE_HEAD = ("Level", "Fixations", "Saccades", "Avg Fixation Duration (ms)",
               "Avg Saccade Amplitude (px)", "Avg Saccade Velocity (px/s)", "Fix/Sacc Ratio")


def _md_table(head, rows) -> list:
    lines = ["| " + " | ".join(head) + " |", "|" + "|".join("---" for _ in head) + "|"]
    lines += ["| " + " | ".join(str(c) for c in r) + " |" for r in rows]
    return lines


def report_to_markdown(report: SessionReport) -> str:
    L = [f"# Gaze analysis report: {report.student_id}", ""]
    L.append(f"Tool version {report.tool_version}. Levels analysed: {len(report.levels)}.")
    L.append("")
    for lv, msg in report.errors:
        L.append(f"> Level {lv} could not be analysed: {msg}")
    if report.errors:
        L.append("")

    L += ["## Cross-level comparison", ""]
    L += _md_table(_TABLE_HEAD, [tuple(r.values()) for r in cross_level_table(report.levels)])
    L.append("")

    for lv in report.levels:
        m, r, p = lv.metrics, lv.risk, lv.profile
        L += [f"## Level {lv.level}", ""]
        L.append(f"- Hit rate: {fmt(m.hit_rate)}% ({m.matched}/{m.target_count} targets)"
                 + (" [no targets]" if "no_targets" in m.flags else ""))
        L.append(f"- Attention scatter: {fmt(m.attention_scatter)} px")
        L.append(f"- Task relevance: {fmt(m.task_relevance, 3)}")
        L.append(f"- AOI transitions: {m.aoi_transitions}")
        L.append(f"- Gaze efficiency: {fmt(m.gaze_efficiency, 3)}")
        L.append(f"- Scan path: {fmt(m.scan_path)} px")
        L.append(f"- Processing style: {m.processing_style}; search pattern: {m.search_pattern}")
        L.append(f"- Samples: {m.sample_count} kept, {m.dropped_count} dropped")
        L.append(f"- Risk score: {r.display_score}/10 (raw {r.raw_score}), urgency {r.urgency}")
        L.append(f"- Risk profile: task focus {fmt(p.task_focus)}, attention control {fmt(p.attention_control)}, "
                 f"movement efficiency {fmt(p.movement_efficiency)}, scanning pattern {fmt(p.scanning_pattern)}")
        L.append(f"- Attention trend score (local composite): {fmt(lv.trend_score)}")
        perf = lv.performance
        if perf == NEEDS_SUPPORT:
            perf += f' (shown as "{NEEDS_SUPPORT_ALIAS}" in some dashboards)'
        L.append(f"- Performance: {perf}")
        L.append("")

    plan = report.plan
    L += ["## For the student", ""]
    L.append(plan.audience_notes["student"] if plan else UNDEFINED)
    for lv in report.levels:
        L.append(f"- Level {lv.level}: {lv.performance}")
    L.append("")
    L += ["## For the teacher", ""]
    if plan:
        L.append(plan.audience_notes["teacher"])
        L.append("")
        L.append(f"Average task relevance: {fmt(plan.avg_relevance)}%; overall urgency: {plan.urgency}.")
    L.append("")
    for lv in report.levels:
        factors = ", ".join(f'"{f}"' for f in lv.risk.factors) or "none"
        L.append(f"- Level {lv.level} risk factors: {factors}")
        for note in lv.risk.notes:
            L.append(f"  - note: {note}")
    L.append("")
    L.append("Recommended interventions:")
    L.append("")
    if plan and plan.interventions:
        L += [f"{i}. {item}" for i, item in enumerate(plan.interventions, 1)]
    else:
        L.append("None.")
    L.append("")
    L += ["## For the specialist", ""]
    L.append(plan.audience_notes["specialist"] if plan else UNDEFINED)
    L.append("")
    return "\n".join(L)


# plot series --------------------------------------------------------------------

def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _histogram_rows(metric: str, values, bins: int = 10):
    if not values:
        return []
    counts, edges = np.histogram(np.asarray(values, dtype=np.float64), bins=bins)
    return [(metric, fmt(float(edges[i])), fmt(float(edges[i + 1])), int(c)) for i, c in enumerate(counts)]


def plot_files(report: SessionReport) -> dict:
    """Relative path -> CSV text for every plot series."""
    files = {}
    for lv in report.levels:
        k = lv.level
        files[f"plots/fixations_L{k}.csv"] = _csv(
            ("x", "y", "duration"),
            [(fmt(f.center.x), fmt(f.center.y), fmt(f.duration)) for f in lv.fixations])
        files[f"plots/saccades_L{k}.csv"] = _csv(
            ("x1", "y1", "x2", "y2", "amplitude", "peak_velocity"),
            [(fmt(s.start_point.x), fmt(s.start_point.y), fmt(s.end_point.x), fmt(s.end_point.y),
              fmt(s.amplitude), fmt(s.peak_velocity)) for s in lv.saccades])
        files[f"plots/scanpath_L{k}.csv"] = _csv(
            ("index", "x", "y"),
            [(i, fmt(f.center.x), fmt(f.center.y)) for i, f in enumerate(lv.fixations, 1)])
        timeline = [(f.start, 0, "fixation", fmt(f.duration)) for f in lv.fixations]
        timeline += [(s.start, 1, "saccade", fmt(s.duration)) for s in lv.saccades]
        timeline += [(e.timestamp, 2, e.kind, fmt(0.0)) for e in lv.events]
        timeline.sort(key=lambda r: (r[0], r[1]))
        files[f"plots/timeline_L{k}.csv"] = _csv(("timestamp", "kind", "duration"),
                                                 [(t, kind, d) for t, _, kind, d in timeline])
        hist = _histogram_rows("fixation_duration", [f.duration for f in lv.fixations])
        hist += _histogram_rows("saccade_amplitude", [s.amplitude for s in lv.saccades])
        hist += _histogram_rows("saccade_peak_velocity", [s.peak_velocity for s in lv.saccades])
        files[f"plots/histograms_L{k}.csv"] = _csv(("metric", "bin_start", "bin_end", "count"), hist)
    files["plots/levels.csv"] = _csv(
        ("level", "fixations", "saccades", "avg_fixation_duration", "task_relevance", "attention_scatter",
         "aoi_transitions", "gaze_efficiency", "avg_saccade_velocity", "hit_rate", "risk_score",
         "urgency", "task_focus", "attention_control", "movement_efficiency", "scanning_pattern",
         "trend_score", "performance"),
        [(lv.level, len(lv.fixations), len(lv.saccades), fmt(lv.metrics.avg_fixation_duration),
          fmt(lv.metrics.task_relevance, 3), fmt(lv.metrics.attention_scatter), lv.metrics.aoi_transitions,
          fmt(lv.metrics.gaze_efficiency, 3), fmt(lv.metrics.avg_saccade_velocity), fmt(lv.metrics.hit_rate),
          lv.risk.display_score, lv.risk.urgency, fmt(lv.profile.task_focus), fmt(lv.profile.attention_control),
          fmt(lv.profile.movement_efficiency), fmt(lv.profile.scanning_pattern), fmt(lv.trend_score),
          lv.performance) for lv in report.levels])
    return files


def emit_reports(report: SessionReport, out_dir, formats: Sequence[str] = FORMATS) -> list:
    """Write the selected formats under ``out_dir``; return the written paths."""
    unknown = set(formats) - set(FORMATS)
    if unknown:
        raise ValueError(f"unknown report formats: {sorted(unknown)}")
    out_dir = Path(out_dir)
    files = {}
    if "json" in formats:
        files["report.json"] = report_to_json(report)
    if "md" in formats:
        files["report.md"] = report_to_markdown(report)
    if "csv" in formats:
        files.update(plot_files(report))
    written = []
    for rel, text in files.items():
        path = out_dir / rel
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(exc.errno, f"cannot write report file: {exc.strerror}", str(path)) from None
        written.append(path)
    return written
