"""Reading annotation and pose tables, writing reports and bout tables.

Annotation tables hold one row per frame with a label column (``label`` by
default) and an optional ``frame`` column. Pose tables hold
``<kp>_x, <kp>_y, <kp>_likelihood`` columns per keypoint. Both may be csv,
tsv, or json (a list of row objects, or an object of equal-length columns).

Reports are written with sorted keys and every float fixed at six decimals,
so identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from .core import DEFAULT_FPS, FrameSeries, LabelSet, SegmentList, Timebase
from .errors import (
    FileError,
    GapError,
    LikelihoodRangeError,
    NonFiniteCoordinate,
    ParseError,
    UnknownLabel,
)
from .features import PoseTable
from .metrics import BANOS_FIELDS, FRAME_FIELDS, EvaluationReport

FORMATS = ("csv", "tsv", "json")
DECIMALS = 6
COUNT_FIELDS = ("gt_bouts", "pred_bouts", "matched")


def infer_format(path) -> str:
    ext = Path(path).suffix.lower().lstrip(".")
    return ext if ext in FORMATS else "csv"


@dataclass(frozen=True)
class AnnotationTableSpec:
    path: Any
    format: Optional[str] = None
    label_column: str = "label"
    frame_column: Optional[str] = None
    fps: Optional[float] = None
    # raw cell value -> label name, e.g. integer codes of a public dataset
    label_map: Optional[dict] = None

    def __post_init__(self):
        fmt = self.format or infer_format(self.path)
        if fmt not in FORMATS:
            raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
        object.__setattr__(self, "format", fmt)
        if self.fps is not None and not self.fps > 0:
            raise ValueError("fps override must be > 0")


@dataclass(frozen=True)
class PoseTableSpec:
    path: Any
    keypoints: Optional[Sequence[str]] = None
    format: Optional[str] = None
    animal_id: str = "a"
    fps: float = DEFAULT_FPS
    px_per_cm: Optional[float] = None
    # keypoint -> (x column, y column, likelihood column); defaults to <kp>_x etc.
    columns: Optional[dict] = None

    def __post_init__(self):
        fmt = self.format or infer_format(self.path)
        if fmt not in FORMATS:
            raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
        object.__setattr__(self, "format", fmt)
        if self.keypoints is not None:
            if len(self.keypoints) < 1:
                raise ValueError("at least one keypoint is required")
            object.__setattr__(self, "keypoints", tuple(self.keypoints))
        if not self.fps > 0:
            raise ValueError("fps must be > 0")
        if self.px_per_cm is not None and not self.px_per_cm > 0:
            raise ValueError("px_per_cm must be > 0")


def _read_text(path) -> str:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            return fh.read()
    except OSError as exc:
        raise FileError(f"cannot read {os.fspath(path)}: {exc.strerror or exc}") from None
    except UnicodeDecodeError as exc:
        raise ParseError(f"{os.fspath(path)} is not valid UTF-8: {exc}") from None


def read_table(path, fmt: str) -> tuple[list[str], list[dict]]:
    """Return (header, rows) with every cell as a string."""
    text = _read_text(path)
    where = os.fspath(path)
    if fmt == "json":
        try:
            doc = json.loads(text) if text.strip() else []
        except json.JSONDecodeError as exc:
            raise ParseError(f"{where}: invalid json ({exc})") from None
        if isinstance(doc, dict):
            cols = list(doc)
            lengths = {len(v) if isinstance(v, list) else -1 for v in doc.values()}
            if -1 in lengths or len(lengths) > 1:
                raise ParseError(f"{where}: json columns must be lists of equal length")
            n = lengths.pop() if lengths else 0
            return cols, [{c: _cell(doc[c][i]) for c in cols} for i in range(n)]
        if not isinstance(doc, list) or not all(isinstance(r, dict) for r in doc):
            raise ParseError(f"{where}: json must be a list of row objects or an object of columns")
        cols = list(dict.fromkeys(k for r in doc for k in r))
        for i, r in enumerate(doc):
            if set(r) != set(cols):
                raise ParseError(f"{where}: row {i} has columns {sorted(r)}, expected {sorted(cols)}")
        return cols, [{k: _cell(v) for k, v in r.items()} for r in doc]

    delim = "\t" if fmt == "tsv" else ","
    reader = csv.reader(io.StringIO(text), delimiter=delim)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError(f"{where}: missing header row") from None
    except csv.Error as exc:
        raise ParseError(f"{where}: {exc}") from None
    header = [h.strip() for h in header]
    rows = []
    try:
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise ParseError(
                    f"{where}:{lineno}: expected {len(header)} fields, got {len(rec)}"
                )
            rows.append({h: v.strip() for h, v in zip(header, rec)})
    except csv.Error as exc:
        raise ParseError(f"{where}: {exc}") from None
    return header, rows


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    return str(v)


def _require_columns(header, needed, where):
    missing = [c for c in needed if c not in header]
    if missing:
        raise ParseError(f"{where}: missing column(s) {missing}; found {header}")


def read_label_column(spec: AnnotationTableSpec) -> list[str]:
    """Raw label values in frame order, before mapping through a label set."""
    header, rows = read_table(spec.path, spec.format)
    where = os.fspath(spec.path)
    needed = [spec.label_column] + ([spec.frame_column] if spec.frame_column else [])
    _require_columns(header, needed, where)
    if spec.frame_column:
        frames = []
        for i, r in enumerate(rows):
            try:
                frames.append(int(r[spec.frame_column]))
            except ValueError:
                raise ParseError(
                    f"{where}: row {i + 1}: frame {r[spec.frame_column]!r} is not an integer"
                ) from None
        order = np.argsort(frames, kind="stable")
        ordered = sorted(frames)
        if ordered != list(range(len(rows))):
            missing = sorted(set(range(len(rows))) - set(frames))
            dup = sorted(f for f, c in Counter(frames).items() if c > 1)
            raise GapError(
                f"{where}: frame column must be a gapless 0-based range "
                f"(missing {missing[:5]}, duplicated {dup[:5]})"
            )
        rows = [rows[i] for i in order]
    values = [r[spec.label_column] for r in rows]
    if spec.label_map:
        mapping = {str(k): v for k, v in spec.label_map.items()}
        unknown = sorted({v for v in values if v not in mapping})
        if unknown:
            raise UnknownLabel(f"{where}: values {unknown[:5]} have no entry in label_map")
        values = [mapping[v] for v in values]
    return values


def parse_annotation_table(
    spec: AnnotationTableSpec,
    label_set: LabelSet,
    timebase: Optional[Timebase] = None,
) -> FrameSeries:
    values = read_label_column(spec)
    lookup = {name: i for i, name in enumerate(label_set.labels)}
    labels = []
    for row, v in enumerate(values):
        try:
            labels.append(lookup[v])
        except KeyError:
            raise UnknownLabel(
                f"{os.fspath(spec.path)}: frame {row}: label {v!r} not in label set "
                f"{list(label_set.labels)}"
            ) from None
    tb = timebase or Timebase()
    if spec.fps is not None:
        tb = Timebase(spec.fps, tb.px_per_cm)
    return FrameSeries(np.array(labels, dtype=np.int64), label_set, tb)


def pose_keypoints_from_header(header: Sequence[str]) -> list[str]:
    """Keypoints that have all three of ``_x``, ``_y`` and ``_likelihood`` columns."""
    cols = set(header)
    out = []
    for h in header:
        if h.endswith("_x"):
            kp = h[:-2]
            if f"{kp}_y" in cols and f"{kp}_likelihood" in cols:
                out.append(kp)
    return out


def parse_pose_table(spec: PoseTableSpec) -> PoseTable:
    header, rows = read_table(spec.path, spec.format)
    where = os.fspath(spec.path)
    keypoints = spec.keypoints or tuple(pose_keypoints_from_header(header))
    if not keypoints:
        raise ParseError(f"{where}: no <kp>_x/<kp>_y/<kp>_likelihood column triplets found")
    columns = spec.columns or {}
    triplets = [tuple(columns.get(kp, (f"{kp}_x", f"{kp}_y", f"{kp}_likelihood"))) for kp in keypoints]
    _require_columns(header, [c for t in triplets for c in t], where)

    n = len(rows)
    coords = np.empty((n, len(keypoints), 2))
    lik = np.empty((n, len(keypoints)))
    for i, r in enumerate(rows):
        for k, (cx, cy, cl) in enumerate(triplets):
            vals = []
            for col in (cx, cy, cl):
                try:
                    vals.append(float(r[col]))
                except ValueError:
                    raise ParseError(f"{where}: row {i + 1}, column {col}: {r[col]!r} is not a number") from None
            x, y, p = vals
            if not (math.isfinite(x) and math.isfinite(y)):
                raise NonFiniteCoordinate(f"{where}: row {i + 1}: keypoint {keypoints[k]!r} has non-finite coordinate")
            if not 0.0 <= p <= 1.0:
                raise LikelihoodRangeError(
                    f"{where}: row {i + 1}: likelihood {r[cl]!r} of {keypoints[k]!r} outside [0, 1]"
                )
            coords[i, k] = (x, y)
            lik[i, k] = p
    return PoseTable(spec.animal_id, tuple(keypoints), coords, lik, Timebase(spec.fps, spec.px_per_cm))


# ---------------------------------------------------------------- reports


def _q(v):
    return None if v is None else round(float(v), DECIMALS)


@dataclass(frozen=True)
class ReportDocument:
    """Serializable evaluation report.

    ``labels`` maps label name to ``{"frame": {...}, "banos": {...},
    "counts": {...}}`` (plus ``"detection_f1_curve"`` when requested).
    Metric values are rounded to six decimals on construction so a json
    round trip reproduces the document exactly.
    """

    labels: dict
    macro: dict
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "labels", _quantize(self.labels))
        object.__setattr__(self, "macro", _quantize(self.macro))
        for block in [*self.labels.values(), self.macro]:
            for group in ("frame", "banos"):
                for k, v in block.get(group, {}).items():
                    if v is not None and not 0.0 <= v <= 1.0:
                        raise ValueError(f"metric {group}.{k} = {v} outside [0, 1]")

    @classmethod
    def from_evaluation(cls, ev: EvaluationReport, provenance: Optional[dict] = None) -> "ReportDocument":
        labels = {}
        for le in ev.labels:
            block = {
                "frame": le.frame.as_dict(),
                "banos": le.banos.as_dict(),
                "counts": {"gt_bouts": le.gt_bouts, "pred_bouts": le.pred_bouts, "matched": le.matched},
            }
            if le.detection_f1_curve is not None:
                block["detection_f1_curve"] = [
                    {"threshold": t, "f1": f} for t, f in le.detection_f1_curve
                ]
            labels[le.label] = block
        macro = {"frame": ev.macro.frame.as_dict(), "banos": ev.macro.banos.as_dict()}
        return cls(labels, macro, dict(provenance or {}))

    def as_dict(self) -> dict:
        return {"labels": self.labels, "macro": self.macro, "provenance": self.provenance}


def _quantize(obj):
    if isinstance(obj, dict):
        return {k: _quantize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_quantize(v) for v in obj]
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, (float, np.floating)):
        return _q(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _json_text(obj, indent=0) -> str:
    """Json with sorted keys and floats printed with exactly six decimals."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_json_text(obj[k], indent + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(pad + _json_text(v, indent + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return "null"
        return f"{obj:.{DECIMALS}f}"
    return json.dumps(obj)


def report_csv_rows(report: ReportDocument) -> list[list[str]]:
    header = ["label", *FRAME_FIELDS, *BANOS_FIELDS, *COUNT_FIELDS]
    rows = [header]

    def fmt(v):
        if v is None:
            return ""
        if isinstance(v, float):
            return f"{v:.{DECIMALS}f}"
        return str(v)

    for name in sorted(report.labels):
        b = report.labels[name]
        rows.append(
            [name]
            + [fmt(b["frame"].get(f)) for f in FRAME_FIELDS]
            + [fmt(b["banos"].get(f)) for f in BANOS_FIELDS]
            + [fmt(b["counts"].get(f)) for f in COUNT_FIELDS]
        )
    m = report.macro
    rows.append(
        ["macro"]
        + [fmt(m["frame"].get(f)) for f in FRAME_FIELDS]
        + [fmt(m["banos"].get(f)) for f in BANOS_FIELDS]
        + ["" for _ in COUNT_FIELDS]
    )
    return rows


def render_report(report: ReportDocument, format: str = "json") -> str:
    if format == "json":
        return _json_text(report.as_dict()) + "\n"
    if format == "csv":
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(report_csv_rows(report))
        return buf.getvalue()
    raise ValueError(f"report format must be json or csv, got {format!r}")


def _atomic_write(path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp")
    try:
        with open(tmp, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        try:
            tmp.unlink()
        except OSError:
            pass
        raise FileError(f"cannot write {os.fspath(path)}: {exc.strerror or exc}") from None


def write_report(report: ReportDocument, path, format: str = "json") -> None:
    _atomic_write(path, render_report(report, format))


def read_report(path) -> ReportDocument:
    try:
        doc = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{os.fspath(path)}: invalid report json ({exc})") from None
    return ReportDocument(doc["labels"], doc["macro"], doc.get("provenance", {}))


# ---------------------------------------------------------------- tables


def annotation_text(series: FrameSeries, format: str = "csv", label_column: str = "label") -> str:
    names = [series.label_set.labels[i] for i in series.labels.tolist()]
    if format == "json":
        return json.dumps([{"frame": i, label_column: n} for i, n in enumerate(names)], indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, delimiter="\t" if format == "tsv" else ",", lineterminator="\n")
    w.writerow(["frame", label_column])
    w.writerows(enumerate(names))
    return buf.getvalue()


def write_annotation(series: FrameSeries, path, format: Optional[str] = None, label_column: str = "label") -> None:
    _atomic_write(path, annotation_text(series, format or infer_format(path), label_column))


def bout_table_text(segs: SegmentList, fps: float) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", "start_frame", "end_frame", "duration_s"])
    for s in segs:
        name = segs.label_set.name(s.label) if segs.label_set else str(s.label)
        w.writerow([name, s.start, s.end, f"{s.length / fps:.{DECIMALS}f}"])
    return buf.getvalue()


def features_text(features, series_length: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["frame", *(f"{f.name}_{f.unit.replace('/', '_per_')}" for f in features)])
    for i in range(series_length):
        row = [i]
        for f in features:
            v = f.values[i]
            row.append("" if not math.isfinite(v) else f"{v:.{DECIMALS}f}")
        w.writerow(row)
    return buf.getvalue()


def write_text(path, text: str) -> None:
    _atomic_write(path, text)
