import json

import pytest

from gazetrace import cli
from gazetrace.cli import main


@pytest.fixture(scope="module")
def demo_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("synth") / "student6.csv"
    assert main(["synth", "--out", str(path)]) == 0
    return path


def test_synth_writes_truth_and_is_deterministic(tmp_path, demo_csv):
    again = tmp_path / "student6.csv"
    assert main(["synth", "--out", str(again)]) == 0
    assert again.read_bytes() == demo_csv.read_bytes()
    truth = json.loads(demo_csv.with_name("student6.truth.json").read_text())
    assert [lv["level"] for lv in truth["levels"]] == [1, 2, 3]


def test_analyze_three_levels(tmp_path, demo_csv):
    assert main(["analyze", str(demo_csv), "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert [lv["level"] for lv in report["levels"]] == [1, 2, 3]
    assert len(report["cross_level_table"]) == 3
    assert all(lv["metrics"]["dropped_count"] == 0 for lv in report["levels"])
    assert report["student_id"] == "student6"


def test_flag_override_echoed(tmp_path, demo_csv):
    assert main(["analyze", str(demo_csv), "--out", str(tmp_path), "--v-basic", "500"]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["config_echo"]["detect"]["v_basic"] == 500.0


def test_config_file_then_flags(tmp_path, demo_csv, monkeypatch):
    conf = tmp_path / "c.conf"
    conf.write_text("detect.v_basic=600\ndetect.min_duration=120\n")
    monkeypatch.setenv("GAZETRACE_CONFIG", str(conf))
    assert main(["analyze", str(demo_csv), "--out", str(tmp_path / "o"), "--min-duration", "150"]) == 0
    echo = json.loads((tmp_path / "o" / "report.json").read_text())["config_echo"]
    assert echo["detect"]["v_basic"] == 600.0 and echo["detect"]["min_duration"] == 150.0


def test_all_zero_samples_is_empty_session(tmp_path, caplog):
    p = tmp_path / "zeros.csv"
    p.write_text("timestamp_ms,gaze\n" + "".join(f'{i * 10},"(0,0)"\n' for i in range(20)))
    assert main(["analyze", str(p), "--out", str(tmp_path / "o")]) == cli.EXIT_EMPTY
    assert "empty session" in caplog.text


def test_exit_codes(tmp_path, demo_csv):
    assert main(["analyze", str(tmp_path / "nope.csv")]) == cli.EXIT_MISSING
    bad = tmp_path / "bad.csv"
    bad.write_text('timestamp_ms,gaze\n0,"(1,2)"\n1,oops\n')
    assert main(["analyze", str(bad), "--out", str(tmp_path / "o")]) == cli.EXIT_PARSE
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    assert main(["analyze", str(demo_csv), "--out", str(blocker / "x")]) == cli.EXIT_OUTPUT
    conf = tmp_path / "bad.conf"
    conf.write_text("detect.v_basic=-1\n")
    assert main(["analyze", str(demo_csv), "--config", str(conf)]) == cli.EXIT_CONFIG
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"interval_ms": 20, "levels": [
        {"clusters": [{"center": [100, 100], "radius": 1, "samples": 10, "dwell_ms": 50}]}]}))
    assert main(["synth", "--spec", str(spec), "--out", str(tmp_path / "s.csv")]) == cli.EXIT_SYNTH


def test_partial_level_failure(tmp_path):
    p = tmp_path / "partial.csv"
    rows = ['0,"(0,0)",1'] + [f'{i * 25},"(500.{i}, 500)",2' for i in range(10)]
    p.write_text("timestamp_ms,gaze,level\n" + "\n".join(rows) + "\n")
    assert main(["analyze", str(p), "--out", str(tmp_path / "o")]) == cli.EXIT_PARTIAL
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert [lv["level"] for lv in report["levels"]] == [2]
    assert report["errors"][0][0] == 1


def test_stdout_mode(tmp_path, demo_csv, capsys):
    assert main(["analyze", str(demo_csv), "--stdout", "--out", str(tmp_path / "o")]) == 0
    out = capsys.readouterr().out
    assert json.loads(out)["student_id"] == "student6"
    assert not (tmp_path / "o").exists()


def test_batch_directory(tmp_path, demo_csv):
    d = tmp_path / "class"
    d.mkdir()
    for name in ("a", "b"):
        (d / f"{name}.csv").write_bytes(demo_csv.read_bytes())
    assert main(["analyze", str(d), "--out", str(tmp_path / "o")]) == 0
    index = json.loads((tmp_path / "o" / "index.json").read_text())
    assert [e["student_id"] for e in index] == ["a", "b"]
    assert (tmp_path / "o" / "a" / "report.json").exists()


def test_debug_dump(tmp_path, demo_csv):
    assert main(["analyze", str(demo_csv), "--out", str(tmp_path), "--debug-dump", "--format", "json"]) == 0
    lines = (tmp_path / "debug" / "samples_L1.csv").read_text().splitlines()
    assert lines[0] == "index,timestamp_ms,x,y,velocity,ivt_label,cluster_id"
    assert not (tmp_path / "report.md").exists()


def test_validate_config_and_version(tmp_path, capsys):
    conf = tmp_path / "c.conf"
    conf.write_text("screen.width=1280\n")
    assert main(["validate-config", str(conf)]) == 0
    assert json.loads(capsys.readouterr().out)["screen"]["width"] == 1280
    conf.write_text("screen.width=zero\n")
    assert main(["validate-config", str(conf)]) == cli.EXIT_CONFIG
    assert main(["version"]) == 0
    assert "gazetrace" in capsys.readouterr().out


def test_backends_give_same_report(tmp_path, demo_csv):
    from gazetrace import kernels

    outs = []
    for b in kernels.BACKENDS:
        assert main(["analyze", str(demo_csv), "--out", str(tmp_path / b), "--backend", b]) == 0
        outs.append((tmp_path / b / "report.json").read_bytes())
    assert all(o == outs[0] for o in outs)
