import json

import pytest

from gazetrace.config import AnalysisConfig
from gazetrace.ingest import GazeSample, RawSession
from gazetrace.pipeline import analyze_raw
from gazetrace.report import (
    UNDEFINED,
    cross_level_table,
    emit_reports,
    fmt,
    make_level_report,
    make_session_report,
    report_from_json,
    report_to_json,
    report_to_markdown,
    round_half_up,
)
from gazetrace.synth import demo_plan, generate_session, plan_to_specs

from .test_assess import metrics
from .test_metrics import fixations, saccades


@pytest.fixture(scope="module")
def demo_report():
    cfg = AnalysisConfig()
    sessions = [generate_session(s)[0] for s in plan_to_specs(demo_plan())]
    samples = tuple(x for s in sessions for x in s.samples)
    # rebuild the raw rows the way ingest would see them, events included
    rows = list(samples) + [GazeSample(e.timestamp, None, None, e.level, e.payload)
                            for s in sessions for e in s.events]
    rows.sort(key=lambda r: (r.level, r.timestamp, r.x is None))
    raw = RawSession(tuple(rows), sessions[0].aoi_map, cfg.screen, "demo")
    return analyze_raw(raw, cfg, "demo").report


def test_round_half_up():
    assert round_half_up(0.579, 1) == 0.6
    assert round_half_up(0.25, 1) == 0.3
    assert round_half_up(2.675, 2) == 2.68  # decimal repr, not binary value
    assert round_half_up(-0.05, 1) == -0.1
    assert round_half_up(None, 1) is None
    with pytest.raises(ValueError):
        round_half_up(float("inf"), 1)


def test_fmt_undefined():
    assert fmt(None) == UNDEFINED
    assert fmt(0.5, 3) == "0.500"


def _lv(level, n_fix, amps):
    from gazetrace.assess import risk_profile, risk_score

    m = metrics()
    return make_level_report(level, m, risk_score(m), risk_profile(m), "Good",
                             fixations([500] * n_fix), saccades(amps), ())


def test_cross_level_ratio_cells():
    rows = cross_level_table([_lv(1, 11, [735.2] * 19), _lv(3, 1, [700, 794.8]), _lv(4, 2, [])])
    assert [r["fix_sacc_ratio"] for r in rows] == ["0.6", "0.5", UNDEFINED]
    assert rows[0]["fixations"] == 11 and rows[0]["saccades"] == 19


def test_json_round_trip(demo_report):
    text = report_to_json(demo_report)
    again = report_from_json(text)
    assert again == demo_report
    assert report_to_json(again) == text


def test_json_is_valid_and_fixed_format(demo_report):
    text = report_to_json(demo_report)
    d = json.loads(text)
    assert list(d) == ["student_id", "levels", "plan", "tool_version", "config_echo", "errors",
                       "cross_level_table"]
    assert '"task_relevance": 0.' in text
    for line in text.splitlines():
        if '"task_relevance"' in line:
            assert len(line.split(": ")[1].rstrip(",").split(".")[1]) == 3


def test_table_identity(demo_report):
    d = json.loads(report_to_json(demo_report))
    for row, lv in zip(d["cross_level_table"], d["levels"]):
        n_fix, n_sac = len(lv["fixations"]), len(lv["saccades"])
        assert row["fixations"] == n_fix and row["saccades"] == n_sac
        assert row["fix_sacc_ratio"] == (fmt(n_fix / n_sac) if n_sac else UNDEFINED)


def test_markdown_sections(demo_report):
    md = report_to_markdown(demo_report)
    for heading in ("## Cross-level comparison", "## For the student", "## For the teacher",
                    "## For the specialist", "## Level 1"):
        assert heading in md
    for lv in demo_report.levels:
        for f in lv.risk.factors:
            assert f'"{f}"' in md


def test_emit_reports_deterministic(tmp_path, demo_report):
    a = emit_reports(demo_report, tmp_path / "a")
    b = emit_reports(demo_report, tmp_path / "b")
    assert [p.relative_to(tmp_path / "a") for p in a] == [p.relative_to(tmp_path / "b") for p in b]
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes()


def test_plot_file_cardinality(tmp_path, demo_report):
    emit_reports(demo_report, tmp_path, formats=("csv",))
    assert not (tmp_path / "report.json").exists()
    for lv in demo_report.levels:
        rows = (tmp_path / "plots" / f"fixations_L{lv.level}.csv").read_text().splitlines()
        assert rows[0] == "x,y,duration" and len(rows) - 1 == len(lv.fixations)
        rows = (tmp_path / "plots" / f"saccades_L{lv.level}.csv").read_text().splitlines()
        assert rows[0] == "x1,y1,x2,y2,amplitude,peak_velocity" and len(rows) - 1 == len(lv.saccades)
        rows = (tmp_path / "plots" / f"scanpath_L{lv.level}.csv").read_text().splitlines()
        assert rows[0] == "index,x,y" and len(rows) - 1 == len(lv.fixations)
        rows = (tmp_path / "plots" / f"timeline_L{lv.level}.csv").read_text().splitlines()
        assert rows[0] == "timestamp,kind,duration"
        assert len(rows) - 1 == len(lv.fixations) + len(lv.saccades) + len(lv.events)
    assert (tmp_path / "plots" / "levels.csv").read_text().count("\n") == len(demo_report.levels) + 1


def test_emit_reports_unwritable(tmp_path, demo_report):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError) as exc:
        emit_reports(demo_report, blocker / "out")
    assert str(blocker) in str(exc.value)


def test_session_report_rounds_values():
    from gazetrace.assess import InterventionPlan

    plan = InterventionPlan(38.93333, (), "LOW", {})
    r = make_session_report("s", [], plan, "0", {})
    assert r.plan.avg_relevance == 38.9
