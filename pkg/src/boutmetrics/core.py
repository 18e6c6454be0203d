"""Annotation data model: label sets, frame series and bout segments.

Bouts are half-open frame intervals ``[start, end)``. The background label
(index 0 unless configured otherwise) never forms a bout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .errors import (
    LabelSetMismatch,
    LengthMismatch,
    OverlapError,
    PreconditionError,
    UnknownLabel,
)

DEFAULT_FPS = 25.0


@dataclass(frozen=True)
class LabelSet:
    """Ordered behavior vocabulary with one reserved background entry."""

    labels: tuple
    background_index: int = 0

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        if not labels:
            raise ValueError("label set must not be empty")
        for name in labels:
            if not isinstance(name, str) or not name:
                raise ValueError(f"label names must be non-empty strings, got {name!r}")
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate label names in {labels}")
        if not 0 <= self.background_index < len(labels):
            raise ValueError(
                f"background_index {self.background_index} out of range for {len(labels)} labels"
            )

    def __len__(self):
        return len(self.labels)

    @property
    def background(self) -> str:
        return self.labels[self.background_index]

    @property
    def foreground(self) -> list[int]:
        """Indices of every non-background label, in vocabulary order."""
        return [i for i in range(len(self.labels)) if i != self.background_index]

    def index(self, name: str) -> int:
        try:
            return self.labels.index(name)
        except ValueError:
            raise UnknownLabel(f"label {name!r} not in label set {list(self.labels)}") from None

    def name(self, index: int) -> str:
        if not 0 <= index < len(self.labels):
            raise UnknownLabel(f"label index {index} not in label set {list(self.labels)}")
        return self.labels[index]

    def resolve(self, label) -> int:
        """Accept either a label name or an index and return the index."""
        if isinstance(label, str):
            return self.index(label)
        idx = int(label)
        self.name(idx)
        return idx

    @classmethod
    def from_names(cls, names: Iterable[str], background: str = "other") -> "LabelSet":
        """Build a label set with ``background`` first and ``names`` after it."""
        rest = [n for n in dict.fromkeys(names) if n != background]
        return cls((background, *rest), 0)


@dataclass(frozen=True)
class Timebase:
    fps: float = DEFAULT_FPS
    px_per_cm: Optional[float] = None

    def __post_init__(self):
        if not self.fps > 0:
            raise ValueError(f"fps must be positive, got {self.fps}")
        if self.px_per_cm is not None and not self.px_per_cm > 0:
            raise ValueError(f"px_per_cm must be positive, got {self.px_per_cm}")


def _frozen_int_array(values) -> np.ndarray:
    arr = np.array(values, dtype=np.int64).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FrameSeries:
    """One label index per video frame."""

    labels: np.ndarray
    label_set: LabelSet
    timebase: Timebase = field(default_factory=Timebase)

    def __post_init__(self):
        arr = _frozen_int_array(self.labels)
        if arr.size and (arr.min() < 0 or arr.max() >= len(self.label_set)):
            bad = arr[(arr < 0) | (arr >= len(self.label_set))][0]
            raise UnknownLabel(f"label index {bad} not in label set {list(self.label_set.labels)}")
        object.__setattr__(self, "labels", arr)

    def __len__(self):
        return int(self.labels.size)

    def __eq__(self, other):
        if not isinstance(other, FrameSeries):
            return NotImplemented
        return (
            self.label_set == other.label_set
            and self.timebase == other.timebase
            and np.array_equal(self.labels, other.labels)
        )

    def __hash__(self):
        return hash((self.label_set, self.timebase, self.labels.tobytes()))

    def replace_labels(self, labels) -> "FrameSeries":
        return FrameSeries(labels, self.label_set, self.timebase)


@dataclass(frozen=True)
class Segment:
    """A labeled bout covering frames ``start`` .. ``end - 1``."""

    label: int
    start: int
    end: int

    def __post_init__(self):
        if not 0 <= self.start < self.end:
            raise ValueError(f"segment needs 0 <= start < end, got [{self.start}, {self.end})")

    def __len__(self):
        return self.end - self.start

    @property
    def length(self) -> int:
        return self.end - self.start


def _segment_key(seg: Segment):
    return (seg.start, seg.end, seg.label)


@dataclass(frozen=True)
class SegmentList:
    """Bouts of one recording, sorted by start frame."""

    segments: tuple
    series_length: int
    label_set: Optional[LabelSet] = None
    timebase: Timebase = field(default_factory=Timebase)

    def __post_init__(self):
        segs = tuple(sorted(self.segments, key=_segment_key))
        object.__setattr__(self, "segments", segs)
        if self.series_length < 0:
            raise ValueError("series_length must be non-negative")
        last_end: dict[int, int] = {}
        for seg in segs:
            if seg.end > self.series_length:
                raise ValueError(f"{seg} extends past series_length {self.series_length}")
            if self.label_set is not None:
                self.label_set.name(seg.label)
                if seg.label == self.label_set.background_index:
                    raise ValueError(f"{seg} carries the background label")
            if last_end.get(seg.label, 0) > seg.start:
                raise OverlapError(f"same-label segments overlap at {seg}")
            last_end[seg.label] = seg.end

    def __iter__(self):
        return iter(self.segments)

    def __len__(self):
        return len(self.segments)

    def __getitem__(self, i):
        return self.segments[i]

    def of_label(self, label: int) -> list[Segment]:
        return [s for s in self.segments if s.label == label]

    def with_segments(self, segments: Iterable[Segment]) -> "SegmentList":
        return SegmentList(tuple(segments), self.series_length, self.label_set, self.timebase)


def segments_from_frames(series: FrameSeries) -> SegmentList:
    """Run-length encode a frame series into maximal non-background bouts."""
    labels = series.labels
    bg = series.label_set.background_index
    n = labels.size
    segs = []
    if n:
        change = np.flatnonzero(labels[1:] != labels[:-1]) + 1
        starts = np.concatenate(([0], change))
        ends = np.concatenate((change, [n]))
        run_labels = labels[starts]
        keep = run_labels != bg
        segs = [
            Segment(int(lab), int(s), int(e))
            for s, e, lab in zip(starts[keep], ends[keep], run_labels[keep])
        ]
    return SegmentList(tuple(segs), n, series.label_set, series.timebase)


def frames_from_segments(
    segs: SegmentList,
    series_length: Optional[int] = None,
    label_set: Optional[LabelSet] = None,
) -> FrameSeries:
    """Paint bouts back onto a background-filled frame series.

    Raises OverlapError when two bouts with different labels claim a frame.
    """
    n = segs.series_length if series_length is None else series_length
    label_set = label_set or segs.label_set
    if label_set is None:
        top = max((s.label for s in segs), default=0)
        label_set = LabelSet(tuple(str(i) for i in range(top + 1)))
    bg = label_set.background_index
    out = np.full(n, bg, dtype=np.int64)
    owner = np.full(n, -1, dtype=np.int64)
    for seg in segs:
        if seg.end > n:
            raise PreconditionError(f"{seg} extends past series length {n}")
        taken = owner[seg.start : seg.end]
        clash = (taken >= 0) & (taken != seg.label)
        if clash.any():
            frame = seg.start + int(np.flatnonzero(clash)[0])
            raise OverlapError(
                f"labels {label_set.name(int(taken[clash][0]))!r} and "
                f"{label_set.name(seg.label)!r} both claim frame {frame}"
            )
        owner[seg.start : seg.end] = seg.label
        out[seg.start : seg.end] = seg.label
    return FrameSeries(out, label_set, segs.timebase)


def binarize(series: FrameSeries, label) -> FrameSeries:
    """Keep frames of ``label``; every other frame becomes background."""
    idx = series.label_set.resolve(label)
    if idx == series.label_set.background_index:
        raise UnknownLabel("cannot binarize on the background label")
    bg = series.label_set.background_index
    return series.replace_labels(np.where(series.labels == idx, idx, bg))


def as_frame_series(
    y,
    label_set: Optional[LabelSet] = None,
    timebase: Optional[Timebase] = None,
) -> FrameSeries:
    """Coerce a FrameSeries or a 1-D integer array-like into a FrameSeries."""
    if isinstance(y, FrameSeries):
        return y
    arr = np.asarray(y)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D label array, got shape {arr.shape}")
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        if np.issubdtype(arr.dtype, np.floating) and np.all(arr == np.round(arr)):
            arr = arr.astype(np.int64)
        else:
            raise ValueError(f"label arrays must hold integer indices, got dtype {arr.dtype}")
    if label_set is None:
        top = int(arr.max()) if arr.size else 1
        label_set = LabelSet(tuple(str(i) for i in range(max(top, 1) + 1)))
    return FrameSeries(arr, label_set, timebase or Timebase())


def check_same_shape(pred: FrameSeries, gt: FrameSeries) -> None:
    if len(pred) != len(gt):
        raise LengthMismatch(f"prediction has {len(pred)} frames, ground truth has {len(gt)}")
    if pred.label_set != gt.label_set:
        raise LabelSetMismatch(
            f"label sets differ: {list(pred.label_set.labels)} vs {list(gt.label_set.labels)}"
        )


__all__ = [
    "DEFAULT_FPS",
    "FrameSeries",
    "LabelSet",
    "Segment",
    "SegmentList",
    "Timebase",
    "as_frame_series",
    "binarize",
    "check_same_shape",
    "frames_from_segments",
    "segments_from_frames",
]
