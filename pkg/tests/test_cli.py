import json
import subprocess
import sys

import pytest

from boutmetrics.cli import main

from .conftest import FIXTURES

COMPARE = FIXTURES / "compare"
MALFORMED = FIXTURES / "malformed"
POSE = FIXTURES / "pose"


def run_compare(tmp_path, fmt="json", pred="pred.csv", gt="gt.csv"):
    out = tmp_path / f"report.{fmt}"
    code = main(["compare", "--gt", gt, "--pred", pred, "--config", "config.yaml", "--format", fmt, "--out", str(out)])
    return code, out


@pytest.mark.parametrize("fmt", ["json", "csv"])
def test_compare_matches_golden(tmp_path, monkeypatch, fmt):
    monkeypatch.chdir(COMPARE)
    code, out = run_compare(tmp_path, fmt)
    assert code == 0
    assert out.read_bytes() == (COMPARE / f"report.{fmt}").read_bytes()


def test_compare_stdout(monkeypatch, capsys):
    monkeypatch.chdir(COMPARE)
    assert main(["compare", "--gt", "gt.csv", "--pred", "pred.csv", "--config", "config.yaml"]) == 0
    assert capsys.readouterr().out == (COMPARE / "report.json").read_text()


def test_compare_self_is_perfect(tmp_path, monkeypatch):
    monkeypatch.chdir(COMPARE)
    code, out = run_compare(tmp_path, pred="gt.csv")
    assert code == 0
    doc = json.loads(out.read_text())
    for block in doc["labels"].values():
        assert all(v == 1.0 for v in block["frame"].values())
        assert all(v == 1.0 for v in block["banos"].values())


@pytest.mark.parametrize(
    "pred,code",
    [
        (MALFORMED / "bad_row.csv", 4),
        (MALFORMED / "unknown_label.csv", 5),
        (MALFORMED / "gap.csv", 6),
        (MALFORMED / "short.csv", 7),
        (MALFORMED / "does_not_exist.csv", 3),
    ],
)
def test_compare_exit_codes(tmp_path, monkeypatch, capsys, pred, code):
    monkeypatch.chdir(COMPARE)
    got, out = run_compare(tmp_path, pred=str(pred))
    assert got == code
    assert not out.exists()
    assert "error:" in capsys.readouterr().err


def test_compare_bad_config(tmp_path, monkeypatch):
    bad = tmp_path / "bad.yaml"
    bad.write_text("labels: [other, attack]\nnot_a_key: 1\n")
    monkeypatch.chdir(COMPARE)
    assert main(["compare", "--gt", "gt.csv", "--pred", "pred.csv", "--config", str(bad)]) == 17


def test_argument_error_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["compare", "--gt", "x.csv"])
    assert exc.value.code == 2


def test_segment_merges_flicker(tmp_path):
    src = tmp_path / "in.csv"
    src.write_text("label\n" + "\n".join(["other", "a", "a", "other", "a", "a", "other"]) + "\n")
    out = tmp_path / "bouts.csv"
    assert main(["segment", "--in", str(src), "--max-gap", "1", "--min-dur", "2", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "label,start_frame,end_frame,duration_s"
    assert lines[1:] == ["a,1,6,0.200000"]


def test_segment_min_duration_and_empty(tmp_path):
    src = tmp_path / "in.csv"
    src.write_text("label\nother\na\nother\n")
    out = tmp_path / "bouts.csv"
    assert main(["segment", "--in", str(src), "--min-dur", "2", "--out", str(out)]) == 0
    assert out.read_text().splitlines() == ["label,start_frame,end_frame,duration_s"]


def test_segment_bad_window(tmp_path):
    src = tmp_path / "in.csv"
    src.write_text("label\nother\n")
    assert main(["segment", "--in", str(src), "--window", "2"]) == 17


def features(tmp_path, b, *extra):
    out = tmp_path / "social.csv"
    argv = ["features", "--pose-a", str(POSE / "a.csv"), "--pose-b", str(POSE / b),
            "--px-per-cm", "10", "--out", str(out), *extra]
    return main(argv), out


def test_features_near_and_far(tmp_path):
    code, out = features(tmp_path, "b_near.csv")
    assert code == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "frame,label" and len(rows) == 5
    assert all(r.endswith(",proximity") for r in rows[1:])
    code, out = features(tmp_path, "b_far.csv")
    assert all(r.endswith(",none") for r in out.read_text().splitlines()[1:])


def test_features_emit_and_errors(tmp_path):
    feats = tmp_path / "feats.csv"
    code, _ = features(tmp_path, "b_near.csv", "--emit-features", str(feats), "--nose", "nose", "--tail", "tail_base")
    assert code == 0
    header = feats.read_text().splitlines()[0].split(",")
    assert header[0] == "frame" and any(h.startswith("distance") for h in header)
    assert any(h.startswith("facing_angle") for h in header)
    code, out = features(tmp_path, "b_near.csv", "--px-per-cm", "10")
    assert code == 0
    assert main(["features", "--pose-a", str(POSE / "a_short.csv"), "--pose-b", str(POSE / "b_near.csv"),
                 "--px-per-cm", "10"]) == 12
    assert main(["features", "--pose-a", str(POSE / "a.csv"), "--pose-b", str(POSE / "b_near.csv")]) == 14
    assert main(["features", "--pose-a", str(POSE / "a.csv"), "--pose-b", str(POSE / "b_near.csv"),
                 "--px-per-cm", "10", "--rule", "teleport"]) == 17


def test_synth_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert main(["synth", "--seed", "7", "--length", "300", "--labels", "2", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(a.read_text().splitlines()) == 301


def test_synth_zero_density(tmp_path):
    out = tmp_path / "z.csv"
    assert main(["synth", "--density", "0", "--length", "20", "--out", str(out)]) == 0
    assert all(r.endswith(",background") for r in out.read_text().splitlines()[1:])


def test_synth_pair_then_compare(tmp_path):
    clean = tmp_path / "clean.csv"
    assert main(["synth", "--seed", "3", "--length", "1000", "--bout-min", "20", "--bout-max", "40",
                 "--pair", "--perturb", "flicker:0.5", "--out", str(clean)]) == 0
    noisy = tmp_path / "clean_perturbed.csv"
    assert noisy.exists()
    rep = tmp_path / "r.json"
    assert main(["compare", "--gt", str(clean), "--pred", str(noisy), "--frame-column", "frame",
                 "--background", "background", "--out", str(rep)]) == 0
    block = json.loads(rep.read_text())["labels"]["behavior_1"]
    assert block["banos"]["intra_bout_continuity"] < block["frame"]["f1"]


def test_synth_infeasible(tmp_path):
    assert main(["synth", "--length", "10", "--bout-min", "5", "--bout-max", "5", "--density", "0.9",
                 "--min-gap", "5"]) == 18


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "boutmetrics", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "boutmetrics" in res.stdout
