"""End-to-end analysis of one session file: ingest, detect, measure, assess, report."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import __version__
from .assess import performance_label, plan_interventions, risk_profile, risk_score
from .config import AnalysisConfig
from .detect import Detection, run_detection
from .ingest import CleanSession, EmptySessionError, IngestError, RawSession, filter_samples, read_session, split_levels
from .metrics import compute_metrics
from .report import SessionReport, make_level_report, make_session_report


@dataclass
class LevelRun:
    level: int
    session: CleanSession
    detection: Detection


@dataclass
class AnalysisResult:
    report: SessionReport
    runs: list = field(default_factory=list)


def analyze_raw(raw: RawSession, config: AnalysisConfig, student_id: str, backend=None) -> AnalysisResult:
    levels, runs, errors = [], [], []
    metrics_all, risks_all = [], []
    for lvl, raw_level in split_levels(raw).items():
        try:
            clean = filter_samples(raw_level)
        except IngestError as exc:
            errors.append((lvl, str(exc)))
            continue
        det = run_detection(clean.samples, config.detect, clean.aoi_map, backend=backend)
        m = compute_metrics(clean, det.fixations, det.saccades, config.match)
        risk = risk_score(m, config.risk)
        profile = risk_profile(m)
        levels.append(make_level_report(lvl, m, risk, profile, performance_label(m.task_relevance, config.risk),
                                        det.fixations, det.saccades, clean.events))
        runs.append(LevelRun(lvl, clean, det))
        metrics_all.append(m)
        risks_all.append(risk)
    if not levels:
        detail = "; ".join(f"level {lv}: {msg}" for lv, msg in errors) or "no rows"
        raise EmptySessionError(f"{raw.source or 'session'}: no analysable level ({detail})")
    plan = plan_interventions(metrics_all, risks_all, config.risk)
    report = make_session_report(student_id, levels, plan, __version__, config.echo(), errors)
    return AnalysisResult(report, runs)


def analyze_file(path, config: Optional[AnalysisConfig] = None, aoi_path=None,
                 student_id: Optional[str] = None, backend=None) -> AnalysisResult:
    config = config or AnalysisConfig()
    raw = read_session(path, config.screen, config.ingest, aoi_path)
    return analyze_raw(raw, config, student_id or Path(path).stem, backend)
