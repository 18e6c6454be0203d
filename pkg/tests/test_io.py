import json

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from boutmetrics.core import LabelSet
from boutmetrics.errors import (
    FileError,
    GapError,
    LikelihoodRangeError,
    NonFiniteCoordinate,
    ParseError,
    UnknownLabel,
)
from boutmetrics.io import (
    AnnotationTableSpec,
    PoseTableSpec,
    ReportDocument,
    annotation_text,
    parse_annotation_table,
    parse_pose_table,
    read_report,
    render_report,
    write_report,
)
from boutmetrics.metrics import BANOS_FIELDS, evaluate

from .conftest import series

LS = LabelSet(("other", "attack"))


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_parse_csv_example(tmp_path):
    p = write(tmp_path, "a.csv", "label\nattack\nattack\nother\n")
    assert parse_annotation_table(AnnotationTableSpec(p), LS).labels.tolist() == [1, 1, 0]


def test_parse_tsv_and_json(tmp_path):
    tsv = write(tmp_path, "a.tsv", "frame\tlabel\n1\tother\n0\tattack\n")
    assert parse_annotation_table(AnnotationTableSpec(tsv, frame_column="frame"), LS).labels.tolist() == [1, 0]
    rows = write(tmp_path, "r.json", json.dumps([{"label": "attack"}, {"label": "other"}]))
    assert parse_annotation_table(AnnotationTableSpec(rows), LS).labels.tolist() == [1, 0]
    cols = write(tmp_path, "c.json", json.dumps({"label": ["other", "attack"]}))
    assert parse_annotation_table(AnnotationTableSpec(cols), LS).labels.tolist() == [0, 1]


def test_parse_unknown_label(tmp_path):
    p = write(tmp_path, "a.csv", "label\nattack\nmount\n")
    with pytest.raises(UnknownLabel):
        parse_annotation_table(AnnotationTableSpec(p), LS)


def test_parse_header_only_is_empty(tmp_path):
    p = write(tmp_path, "a.csv", "frame,label\n")
    assert len(parse_annotation_table(AnnotationTableSpec(p), LS)) == 0


def test_parse_errors(tmp_path):
    with pytest.raises(FileError):
        parse_annotation_table(AnnotationTableSpec(tmp_path / "missing.csv"), LS)
    with pytest.raises(ParseError):
        parse_annotation_table(AnnotationTableSpec(write(tmp_path, "e.csv", "")), LS)
    with pytest.raises(ParseError):
        parse_annotation_table(AnnotationTableSpec(write(tmp_path, "b.csv", "label\nattack,x\n")), LS)
    with pytest.raises(ParseError):
        parse_annotation_table(AnnotationTableSpec(write(tmp_path, "c.csv", "behavior\nattack\n")), LS)
    with pytest.raises(GapError):
        parse_annotation_table(
            AnnotationTableSpec(write(tmp_path, "g.csv", "frame,label\n0,attack\n2,other\n"), frame_column="frame"), LS
        )
    with pytest.raises(GapError):
        parse_annotation_table(
            AnnotationTableSpec(write(tmp_path, "d.csv", "frame,label\n0,attack\n0,other\n"), frame_column="frame"), LS
        )
    with pytest.raises(ValueError):
        AnnotationTableSpec("x.csv", fps=0)


def test_label_map_adapter(tmp_path):
    p = write(tmp_path, "codes.csv", "label\n0\n3\n3\n")
    spec = AnnotationTableSpec(p, label_map={0: "attack", 3: "other"})
    assert parse_annotation_table(spec, LS).labels.tolist() == [1, 0, 0]


def test_fps_override(tmp_path):
    p = write(tmp_path, "a.csv", "label\nattack\n")
    assert parse_annotation_table(AnnotationTableSpec(p, fps=60), LS).timebase.fps == 60
    assert parse_annotation_table(AnnotationTableSpec(p), LS).timebase.fps == 25


@settings(suppress_health_check=[HealthCheck.function_scoped_fixture], max_examples=30)
@given(st.lists(st.sampled_from(["other", "attack"]), max_size=30), st.randoms())
def test_shuffled_rows_parse_like_sorted(tmp_path, labels, rnd):
    rows = list(enumerate(labels))
    shuffled = rows[:]
    rnd.shuffle(shuffled)
    fmt = lambda rs: "frame,label\n" + "".join(f"{i},{lab}\n" for i, lab in rs)
    a = write(tmp_path, "sorted.csv", fmt(rows))
    b = write(tmp_path, "shuffled.csv", fmt(shuffled))
    spec = lambda p: AnnotationTableSpec(p, frame_column="frame")
    assert parse_annotation_table(spec(a), LS) == parse_annotation_table(spec(b), LS)


def test_annotation_text_round_trip(tmp_path):
    s = series([0, 1, 1, 0], names=("other", "attack"))
    p = write(tmp_path, "w.csv", annotation_text(s))
    assert parse_annotation_table(AnnotationTableSpec(p, frame_column="frame"), LS) == s


def test_parse_pose_example(tmp_path):
    p = write(tmp_path, "p.csv", "nose_x,nose_y,nose_likelihood\n10,20,0.99\n11,21,0.98\n")
    pt = parse_pose_table(PoseTableSpec(p, px_per_cm=10))
    assert len(pt) == 2 and pt.keypoints == ("nose",)
    assert pt.coords[1, 0].tolist() == [11.0, 21.0]
    assert pt.likelihood[:, 0].tolist() == [0.99, 0.98]


def test_parse_pose_errors(fixtures, tmp_path):
    with pytest.raises(LikelihoodRangeError):
        parse_pose_table(PoseTableSpec(fixtures / "malformed" / "pose_likelihood.csv"))
    with pytest.raises(NonFiniteCoordinate):
        parse_pose_table(PoseTableSpec(fixtures / "malformed" / "pose_nan.csv"))
    p = write(tmp_path, "p.csv", "nose_x,nose_y,nose_likelihood\n1,2,0.5\n")
    with pytest.raises(ParseError):
        parse_pose_table(PoseTableSpec(p, keypoints=["ear"]))
    blank = write(tmp_path, "q.csv", "nose_x,nose_y,nose_likelihood\n,2,0.5\n")
    with pytest.raises(ParseError):
        parse_pose_table(PoseTableSpec(blank))


def test_parse_pose_json_and_custom_columns(tmp_path):
    p = write(tmp_path, "p.json", json.dumps([{"X": 1, "Y": 2, "P": 0.7}, {"X": 3, "Y": 4, "P": 0.8}]))
    pt = parse_pose_table(PoseTableSpec(p, keypoints=["snout"], columns={"snout": ("X", "Y", "P")}))
    assert pt.coords[:, 0].tolist() == [[1, 2], [3, 4]]


def _report():
    gt = series([0, 1, 1, 1, 0, 2, 2, 0, 1, 1], names=("other", "attack", "mount"))
    pred = series([0, 1, 1, 0, 0, 2, 2, 2, 0, 1], names=("other", "attack", "mount"))
    return ReportDocument.from_evaluation(
        evaluate(pred, gt, iou_thresholds=[0.3, 0.5]), {"gt": "gt.csv", "pred": "pred.csv"}
    )


def test_report_is_deterministic(tmp_path):
    for fmt in ("json", "csv"):
        write_report(_report(), tmp_path / f"a.{fmt}", fmt)
        write_report(_report(), tmp_path / f"b.{fmt}", fmt)
        assert (tmp_path / f"a.{fmt}").read_bytes() == (tmp_path / f"b.{fmt}").read_bytes()


def test_report_json_keys_and_round_trip(tmp_path):
    rep = _report()
    write_report(rep, tmp_path / "r.json")
    doc = json.loads((tmp_path / "r.json").read_text())
    assert set(doc) == {"labels", "macro", "provenance"}
    assert set(doc["labels"]["attack"]["banos"]) == set(BANOS_FIELDS)
    assert set(doc["labels"]["attack"]["counts"]) == {"gt_bouts", "pred_bouts", "matched"}
    assert read_report(tmp_path / "r.json") == rep


def test_report_numbers_have_six_decimals():
    text = render_report(_report())
    assert '"precision": 1.000000' in text
    assert "\"f1\": 0.750000" in text  # attack: tp 3, fp 0, fn 2 -> 6/8


def test_report_csv_layout():
    lines = render_report(_report(), "csv").splitlines()
    assert lines[0].split(",")[:2] == ["label", "accuracy"]
    assert [ln.split(",")[0] for ln in lines[1:]] == ["attack", "mount", "macro"]


def test_report_nulls_survive(tmp_path):
    s = series([0, 0, 0], names=("other", "attack"))
    rep = ReportDocument.from_evaluation(evaluate(s, s))
    write_report(rep, tmp_path / "n.json")
    doc = json.loads((tmp_path / "n.json").read_text())
    assert doc["labels"]["attack"]["frame"]["precision"] is None
    assert read_report(tmp_path / "n.json") == rep


def test_report_rejects_out_of_range():
    with pytest.raises(ValueError):
        ReportDocument({"x": {"frame": {"f1": 1.5}, "banos": {}}}, {"frame": {}, "banos": {}})


def test_write_report_file_error(tmp_path):
    with pytest.raises(FileError):
        write_report(_report(), tmp_path / "no" / "such" / "dir.json")
