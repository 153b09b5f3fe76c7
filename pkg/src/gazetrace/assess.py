"""Risk scoring, urgency tiers, intervention planning and per-level profiles."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .config import RiskRules
from .metrics import SessionMetrics

HIGH = "HIGH"
MODERATE = "MODERATE"
LOW = "LOW"
_URGENCY_RANK = {LOW: 0, MODERATE: 1, HIGH: 2}

CRITICAL_FOCUS = "Critical task focus deficit"
LOW_FOCUS = "Low task focus"
POOR_CONTROL = "Poor attention control"
HYPERACTIVE = "Hyperactive scanning"
VERY_LOW_PERFORMANCE = "Very low performance"

FOCUS_TIER = ("Focus training", "Reduce distractions", "Attention cuing")
SUSTAINED_TIER = ("Sustained attention practice", "Visual attention training")
IMMEDIATE = "Immediate intervention needed"
PREVENTIVE = "Preventive measures"

EXCELLENT = "Excellent"
GOOD = "Good"
NEEDS_SUPPORT = "Needs Support"
# some dashboards show NEEDS_SUPPORT under this name
NEEDS_SUPPORT_ALIAS = "Needs Improvement"


@dataclass(frozen=True)
class RiskAssessment:
    raw_score: int
    display_score: int
    factors: tuple
    urgency: str
    notes: tuple = ()


@dataclass(frozen=True)
class InterventionPlan:
    avg_relevance: Optional[float]
    interventions: tuple
    urgency: str
    audience_notes: dict


@dataclass(frozen=True)
class RiskProfile:
    task_focus: float
    attention_control: float
    movement_efficiency: float
    scanning_pattern: float
    flags: tuple = ()

    @property
    def trend_score(self) -> float:
        """Unweighted mean of the four axes, scanning inverted so higher is better."""
        return (self.task_focus + self.attention_control + self.movement_efficiency
                + (100.0 - self.scanning_pattern)) / 4.0


def urgency_for(raw_score: int, rules: RiskRules = RiskRules()) -> str:
    if raw_score > rules.urgency_high:
        return HIGH
    if raw_score > rules.urgency_moderate:
        return MODERATE
    return LOW


def risk_score(m: SessionMetrics, rules: RiskRules = RiskRules()) -> RiskAssessment:
    score = 0
    factors, notes = [], []

    rel = m.task_relevance
    if rel is None:
        notes.append("task_relevance undefined; scored as worst case")
    if rel is None or rel < rules.relevance_critical:
        score += rules.weight_critical_focus
        factors.append(CRITICAL_FOCUS)
    elif rel < rules.relevance_low:
        score += rules.weight_low_focus
        factors.append(LOW_FOCUS)

    scatter = m.attention_scatter
    if scatter is None:
        notes.append("attention_scatter undefined; scored as worst case")
    if scatter is None or scatter > rules.scatter_max:
        score += rules.weight_scatter
        factors.append(POOR_CONTROL)

    if m.aoi_transitions > rules.transitions_max:
        score += rules.weight_transitions
        factors.append(HYPERACTIVE)

    if "no_targets" in m.flags:
        notes.append("no targets in level; hit_rate reported as 0")
    if m.hit_rate < rules.hit_rate_min:
        score += rules.weight_hit_rate
        factors.append(VERY_LOW_PERFORMANCE)

    return RiskAssessment(score, min(score, rules.display_cap), tuple(factors),
                          urgency_for(score, rules), tuple(notes))


def performance_label(task_relevance: Optional[float], rules: RiskRules = RiskRules()) -> str:
    if task_relevance is None:
        return NEEDS_SUPPORT
    if task_relevance >= rules.excellent:
        return EXCELLENT
    if task_relevance >= rules.good:
        return GOOD
    return NEEDS_SUPPORT


def _clamp(v: float, lo: float = 0.0, hi: float = 100.0) -> float:
    return max(lo, min(hi, v))


def risk_profile(m: SessionMetrics) -> RiskProfile:
    """Four 0-100 axes; scanning_pattern grows with problematic scanning."""
    flags = []
    if m.task_relevance is None:
        flags.append("task_focus undefined")
        task_focus = 0.0
    else:
        task_focus = _clamp(100.0 * m.task_relevance)
    if m.attention_scatter is None:
        flags.append("attention_control undefined")
        control = 0.0
    else:
        control = _clamp(100.0 * (1.0 - max(0.0, m.attention_scatter - 200.0) / 600.0))
    if m.gaze_efficiency is None:
        flags.append("movement_efficiency undefined")
        efficiency = 0.0
    else:
        efficiency = _clamp(100.0 * m.gaze_efficiency / 0.5)
    scanning = _clamp(100.0 * m.aoi_transitions / 80.0)
    return RiskProfile(task_focus, control, efficiency, scanning, tuple(flags))


def max_urgency(risks: Sequence[RiskAssessment]) -> str:
    return max((r.urgency for r in risks), key=_URGENCY_RANK.__getitem__, default=LOW)


def _audience_notes(avg_relevance, urgency, factors, interventions) -> dict:
    factor_text = ", ".join(factors) if factors else "none"
    rel_text = "n/a" if avg_relevance is None else f"{avg_relevance:.1f}%"
    if avg_relevance is not None and avg_relevance >= 70:
        student = "Great focus on the sorting task. Keep looking at the bins before you choose."
    elif avg_relevance is not None and avg_relevance >= 50:
        student = "Good effort. Try to keep your eyes on the bins a little longer before choosing."
    else:
        student = ("Keep practising: look at the item, then at the matching bin, "
                   "and take a short pause before you pick.")
    teacher = (f"Average task relevance {rel_text}; urgency {urgency}. "
               f"Risk factors across levels: {factor_text}.")
    if interventions:
        teacher += " Recommended: " + "; ".join(interventions) + "."
    if urgency == HIGH:
        specialist = ("Risk score exceeded the high-urgency threshold on at least one level. "
                      "Consider a fuller executive-function assessment.")
    elif urgency == MODERATE:
        specialist = "Moderate risk on at least one level. Monitor across further sessions."
    else:
        specialist = "No elevated risk detected."
    return {"student": student, "teacher": teacher, "specialist": specialist}


def plan_interventions(levels: Sequence[SessionMetrics], risks: Sequence[RiskAssessment],
                       rules: RiskRules = RiskRules()) -> InterventionPlan:
    if not levels:
        raise ValueError("plan_interventions needs at least one level")
    rels = [m.task_relevance for m in levels if m.task_relevance is not None]
    avg = 100.0 * sum(rels) / len(rels) if rels else None
    items = []
    if avg is None or avg < rules.focus_tier:
        items.extend(FOCUS_TIER)
    elif avg < rules.sustained_tier:
        items.extend(SUSTAINED_TIER)
    urgency = max_urgency(risks)
    if urgency == HIGH:
        items.append(IMMEDIATE)
    elif urgency == MODERATE:
        items.append(PREVENTIVE)
    factors = []
    for r in risks:
        factors.extend(f for f in r.factors if f not in factors)
    return InterventionPlan(avg, tuple(items), urgency, _audience_notes(avg, urgency, factors, items))
