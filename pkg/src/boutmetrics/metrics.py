"""Frame-level and bout-level agreement metrics.

Bout metrics (detection accuracy, segment overlap, temporal precision and
intra-bout continuity) sit on top of a threshold-free one-to-one matching of
predicted to ground-truth bouts: every same-label pair with positive temporal
IoU is a candidate, and pairs are taken greedily by decreasing IoU.

Any ratio whose denominator is zero is reported as ``None`` rather than 0.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import (
    FrameSeries,
    LabelSet,
    Segment,
    SegmentList,
    as_frame_series,
    check_same_shape,
    segments_from_frames,
)

FRAME_FIELDS = ("accuracy", "precision", "recall", "specificity", "f1")
BANOS_FIELDS = ("detection_accuracy", "segment_overlap", "temporal_precision", "intra_bout_continuity")
OVERLAP_SCOPES = ("all", "matched")
CONTINUITY_WEIGHTS = ("bouts", "frames")


def _ratio(num, den) -> Optional[float]:
    return None if den == 0 else num / den


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class FrameMetrics:
    accuracy: Optional[float] = None
    precision: Optional[float] = None
    recall: Optional[float] = None
    specificity: Optional[float] = None
    f1: Optional[float] = None

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class BanosScores:
    detection_accuracy: Optional[float] = None
    segment_overlap: Optional[float] = None
    temporal_precision: Optional[float] = None
    intra_bout_continuity: Optional[float] = None

    def as_dict(self) -> dict:
        return asdict(self)

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, f) for f in BANOS_FIELDS)


@dataclass(frozen=True)
class MatchedPairs:
    pairs: tuple = ()  # (gt Segment, pred Segment, tiou)
    unmatched_gt: tuple = ()
    unmatched_pred: tuple = ()

    @property
    def tp(self) -> int:
        return len(self.pairs)

    @property
    def fp(self) -> int:
        return len(self.unmatched_pred)

    @property
    def fn(self) -> int:
        return len(self.unmatched_gt)


def frame_confusion(pred: FrameSeries, gt: FrameSeries, label) -> ConfusionCounts:
    """One-vs-background confusion counts for ``label``."""
    check_same_shape(pred, gt)
    idx = gt.label_set.resolve(label)
    p = pred.labels == idx
    g = gt.labels == idx
    tp = int(np.count_nonzero(p & g))
    fp = int(np.count_nonzero(p & ~g))
    fn = int(np.count_nonzero(~p & g))
    return ConfusionCounts(tp, fp, fn, len(gt) - tp - fp - fn)


def frame_metrics(c: ConfusionCounts) -> FrameMetrics:
    # 2tp/(2tp+fp+fn) equals the harmonic mean of precision and recall whenever
    # both are defined, and stays defined when only one of them is
    return FrameMetrics(
        accuracy=_ratio(c.tp + c.tn, c.total),
        precision=_ratio(c.tp, c.tp + c.fp),
        recall=_ratio(c.tp, c.tp + c.fn),
        specificity=_ratio(c.tn, c.tn + c.fp),
        f1=_ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn),
    )


def tiou(a: Segment, b: Segment) -> float:
    """Temporal intersection over union of two half-open frame intervals."""
    inter = min(a.end, b.end) - max(a.start, b.start)
    if inter <= 0:
        return 0.0
    union = max(a.end, b.end) - min(a.start, b.start)
    return inter / union


def _overlapping_pairs(gt: list[Segment], pred: list[Segment]):
    """Yield every (gt, pred) pair sharing at least one frame.

    Both lists are sorted by start and internally disjoint, so a sweep finds
    all pairs in linear time plus output size.
    """
    j0 = 0
    for g in gt:
        while j0 < len(pred) and pred[j0].end <= g.start:
            j0 += 1
        j = j0
        while j < len(pred) and pred[j].start < g.end:
            yield g, pred[j]
            j += 1


def match_segments(pred: SegmentList, gt: SegmentList, label) -> MatchedPairs:
    """Greedy one-to-one bout matching for one label.

    Candidates are same-label pairs with tIoU > 0, taken by decreasing tIoU;
    ties go to the earlier ground-truth start, then the earlier predicted
    start.
    """
    label = _resolve(label, gt, pred)
    g_segs = gt.of_label(label)
    p_segs = pred.of_label(label)
    cands = [(tiou(g, p), g, p) for g, p in _overlapping_pairs(g_segs, p_segs)]
    cands.sort(key=lambda c: (-c[0], c[1].start, c[2].start))
    used_g, used_p = set(), set()
    pairs = []
    for iou, g, p in cands:
        if g in used_g or p in used_p:
            continue
        used_g.add(g)
        used_p.add(p)
        pairs.append((g, p, iou))
    pairs.sort(key=lambda x: (x[0].start, x[1].start))
    return MatchedPairs(
        tuple(pairs),
        tuple(g for g in g_segs if g not in used_g),
        tuple(p for p in p_segs if p not in used_p),
    )


def _resolve(label, *lists) -> int:
    for segs in lists:
        if isinstance(segs, (SegmentList, FrameSeries)) and segs.label_set is not None:
            return segs.label_set.resolve(label)
    return int(label)


def segment_f1(tp: int, fp: int, fn: int) -> Optional[float]:
    return _ratio(2 * tp, 2 * tp + fp + fn)


def detection_accuracy(m: MatchedPairs) -> Optional[float]:
    """Bout-level F1: matched pairs are hits, leftovers are false alarms or misses."""
    return segment_f1(m.tp, m.fp, m.fn)


def segment_overlap(m: MatchedPairs, gt: Optional[SegmentList] = None, scope: str = "all") -> Optional[float]:
    """Mean tIoU of ground-truth bouts with their matches.

    ``scope="all"`` averages over every ground-truth bout, counting misses as
    0; ``scope="matched"`` averages over matched pairs only.
    """
    if scope not in OVERLAP_SCOPES:
        raise ValueError(f"scope must be one of {OVERLAP_SCOPES}, got {scope!r}")
    total = sum(p[2] for p in m.pairs)
    if scope == "matched":
        return _ratio(total, len(m.pairs))
    # unmatched_gt already lists every missed ground-truth bout, so gt is optional
    return _ratio(total, len(m.pairs) + len(m.unmatched_gt))


def temporal_precision(m: MatchedPairs, tolerance: int = 0) -> Optional[float]:
    """Share of matched pairs whose start and end both agree within ``tolerance`` frames."""
    if tolerance < 0:
        raise ValueError(f"tolerance must be >= 0, got {tolerance}")
    hits = sum(
        abs(g.start - p.start) <= tolerance and abs(g.end - p.end) <= tolerance
        for g, p, _ in m.pairs
    )
    return _ratio(hits, len(m.pairs))


def intra_bout_continuity(pred: FrameSeries, gt_segs: SegmentList, label=None, weight: str = "bouts") -> Optional[float]:
    """1 minus the rate of predicted-label changes inside each ground-truth bout.

    A bout of length L has L - 1 frame boundaries; the per-bout score is one
    minus the fraction of them where the prediction changes label. Length-1
    bouts score 1. ``weight="bouts"`` averages bouts equally, ``"frames"``
    weights them by length.
    """
    if weight not in CONTINUITY_WEIGHTS:
        raise ValueError(f"weight must be one of {CONTINUITY_WEIGHTS}, got {weight!r}")
    segs = gt_segs.segments if label is None else gt_segs.of_label(_resolve(label, gt_segs))
    if not segs:
        return None
    if len(pred) < gt_segs.series_length:
        raise ValueError("prediction does not cover every ground-truth frame")
    changes = np.concatenate(([0], np.cumsum(pred.labels[1:] != pred.labels[:-1])))
    scores, weights = [], []
    for s in segs:
        if s.length == 1:
            scores.append(1.0)
        else:
            n_changes = int(changes[s.end - 1] - changes[s.start])
            scores.append(1.0 - n_changes / (s.length - 1))
        weights.append(1 if weight == "bouts" else s.length)
    return float(np.dot(scores, weights) / np.sum(weights))


def banos(
    pred,
    gt,
    label,
    tolerance: int = 0,
    overlap_scope: str = "all",
    continuity_weight: str = "bouts",
) -> BanosScores:
    return _banos_detail(pred, gt, label, tolerance, overlap_scope, continuity_weight)[0]


def _coerce_pair(pred, gt) -> tuple[FrameSeries, FrameSeries]:
    """Accept FrameSeries or integer arrays; arrays share one inferred label set."""
    if not isinstance(gt, FrameSeries) and not isinstance(pred, FrameSeries):
        both = np.concatenate([np.asarray(gt).reshape(-1), np.asarray(pred).reshape(-1)])
        gt = as_frame_series(gt)
        if both.size and int(both.max()) >= len(gt.label_set):
            gt = as_frame_series(gt.labels, LabelSet(tuple(str(i) for i in range(int(both.max()) + 1))))
    elif not isinstance(gt, FrameSeries):
        gt = as_frame_series(gt, pred.label_set, pred.timebase)
    pred = as_frame_series(pred, gt.label_set, gt.timebase)
    check_same_shape(pred, gt)
    return pred, gt


def _banos_detail(pred, gt, label, tolerance, overlap_scope, continuity_weight):
    pred, gt = _coerce_pair(pred, gt)
    idx = gt.label_set.resolve(label)
    gt_segs = segments_from_frames(gt)
    pred_segs = segments_from_frames(pred)
    m = match_segments(pred_segs, gt_segs, idx)
    scores = BanosScores(
        detection_accuracy=detection_accuracy(m),
        segment_overlap=segment_overlap(m, gt_segs, overlap_scope),
        temporal_precision=temporal_precision(m, tolerance),
        intra_bout_continuity=intra_bout_continuity(pred, gt_segs, idx, continuity_weight),
    )
    return scores, m


def detection_f1_curve(
    pred: SegmentList,
    gt: SegmentList,
    label,
    thresholds: Sequence[float] = (0.3, 0.5, 0.7),
) -> list[tuple[float, Optional[float]]]:
    """Bout F1 when matched pairs below an IoU threshold count as misses.

    Each demoted pair contributes one false positive and one false negative.
    """
    for t in thresholds:
        if not 0 < t <= 1:
            raise ValueError(f"IoU thresholds must lie in (0, 1], got {t}")
    m = match_segments(pred, gt, label)
    ious = [p[2] for p in m.pairs]
    out = []
    for t in thresholds:
        tp = sum(iou >= t for iou in ious)
        demoted = len(ious) - tp
        out.append((float(t), segment_f1(tp, m.fp + demoted, m.fn + demoted)))
    return out


@dataclass(frozen=True)
class LabelEvaluation:
    label: str
    frame: FrameMetrics
    banos: BanosScores
    gt_bouts: int
    pred_bouts: int
    matched: int
    detection_f1_curve: Optional[tuple] = None


@dataclass(frozen=True)
class MacroScores:
    frame: FrameMetrics
    banos: BanosScores


@dataclass(frozen=True)
class EvaluationReport:
    labels: tuple
    macro: MacroScores
    options: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> LabelEvaluation:
        for ev in self.labels:
            if ev.label == name:
                return ev
        raise KeyError(name)


def _mean_skip_none(values: Iterable[Optional[float]]) -> Optional[float]:
    vals = [v for v in values if v is not None]
    return sum(vals) / len(vals) if vals else None


def macro_aggregate(per_label: Sequence) -> MacroScores:
    """Unweighted per-field mean across labels, ignoring undefined values.

    Accepts LabelEvaluation objects, BanosScores, FrameMetrics or
    (FrameMetrics, BanosScores) pairs.
    """
    if not per_label:
        raise ValueError("macro_aggregate needs at least one label")
    frames, scores = [], []
    for item in per_label:
        if isinstance(item, LabelEvaluation):
            frames.append(item.frame)
            scores.append(item.banos)
        elif isinstance(item, BanosScores):
            scores.append(item)
        elif isinstance(item, FrameMetrics):
            frames.append(item)
        else:
            fm, bs = item
            frames.append(fm)
            scores.append(bs)
    frame = FrameMetrics(**{f: _mean_skip_none(getattr(x, f) for x in frames) for f in FRAME_FIELDS})
    banos_ = BanosScores(**{f: _mean_skip_none(getattr(x, f) for x in scores) for f in BANOS_FIELDS})
    return MacroScores(frame, banos_)


def evaluate(
    pred,
    gt,
    labels=None,
    tolerance: int = 0,
    overlap_scope: str = "all",
    continuity_weight: str = "bouts",
    iou_thresholds: Optional[Sequence[float]] = None,
) -> EvaluationReport:
    """Score ``pred`` against ``gt`` for every requested non-background label.

    ``labels`` defaults to all foreground labels of the ground-truth label set.
    """
    pred, gt = _coerce_pair(pred, gt)
    ls = gt.label_set
    targets = ls.foreground if labels is None else [ls.resolve(x) for x in labels]
    gt_segs = segments_from_frames(gt)
    pred_segs = segments_from_frames(pred)
    per_label = []
    for idx in targets:
        fm = frame_metrics(frame_confusion(pred, gt, idx))
        m = match_segments(pred_segs, gt_segs, idx)
        scores = BanosScores(
            detection_accuracy=detection_accuracy(m),
            segment_overlap=segment_overlap(m, gt_segs, overlap_scope),
            temporal_precision=temporal_precision(m, tolerance),
            intra_bout_continuity=intra_bout_continuity(pred, gt_segs, idx, continuity_weight),
        )
        curve = None
        if iou_thresholds:
            curve = tuple(detection_f1_curve(pred_segs, gt_segs, idx, iou_thresholds))
        per_label.append(
            LabelEvaluation(
                label=ls.name(idx),
                frame=fm,
                banos=scores,
                gt_bouts=len(gt_segs.of_label(idx)),
                pred_bouts=len(pred_segs.of_label(idx)),
                matched=m.tp,
                detection_f1_curve=curve,
            )
        )
    options = {
        "tolerance": tolerance,
        "overlap_scope": overlap_scope,
        "continuity_weight": continuity_weight,
        "iou_thresholds": list(iou_thresholds) if iou_thresholds else None,
    }
    return EvaluationReport(tuple(per_label), macro_aggregate(per_label), options)


# array-in, float-out helpers in the style of sklearn.metrics


def frame_f1_score(y_true, y_pred, label=1) -> Optional[float]:
    pred, gt = _coerce_pair(y_pred, y_true)
    return frame_metrics(frame_confusion(pred, gt, label)).f1


def detection_accuracy_score(y_true, y_pred, label=1) -> Optional[float]:
    return banos(y_pred, y_true, label).detection_accuracy


def segment_overlap_score(y_true, y_pred, label=1, scope="all") -> Optional[float]:
    return banos(y_pred, y_true, label, overlap_scope=scope).segment_overlap


def temporal_precision_score(y_true, y_pred, label=1, tolerance=0) -> Optional[float]:
    return banos(y_pred, y_true, label, tolerance=tolerance).temporal_precision


def intra_bout_continuity_score(y_true, y_pred, label=1, weight="bouts") -> Optional[float]:
    return banos(y_pred, y_true, label, continuity_weight=weight).intra_bout_continuity
