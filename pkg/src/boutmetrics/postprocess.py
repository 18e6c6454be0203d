"""Bout clean-up: gap merging, duration constraints and label smoothing.

``apply_pipeline`` always runs the steps in one order::

    smooth -> extract bouts -> merge gaps -> drop short -> split long

Smoothing repairs frame noise before bouts exist, and merging runs before the
minimum-duration filter so a long bout broken by dropouts is not discarded
piece by piece.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .core import FrameSeries, Segment, SegmentList, as_frame_series, segments_from_frames


@dataclass(frozen=True)
class PostprocessConfig:
    max_gap: int = 0
    min_duration: int = 1
    max_duration: Optional[int] = None
    smooth_window: int = 1

    def __post_init__(self):
        if self.max_gap < 0:
            raise ValueError(f"max_gap must be >= 0, got {self.max_gap}")
        if self.min_duration < 1:
            raise ValueError(f"min_duration must be >= 1, got {self.min_duration}")
        if self.max_duration is not None:
            if self.max_duration < 1:
                raise ValueError(f"max_duration must be >= 1, got {self.max_duration}")
            if self.min_duration > self.max_duration:
                raise ValueError("min_duration must not exceed max_duration")
        if self.smooth_window < 1 or self.smooth_window % 2 == 0:
            raise ValueError(f"smooth_window must be odd and >= 1, got {self.smooth_window}")


def merge_gaps(segs: SegmentList, max_gap: int) -> SegmentList:
    """Fuse consecutive same-label bouts separated by at most ``max_gap`` frames.

    Fusion is transitive, scanning left to right. Only neighbours in start
    order are fused, so a bout of another label inside the gap blocks the
    merge and an exclusive series stays exclusive.
    """
    if max_gap < 0:
        raise ValueError(f"max_gap must be >= 0, got {max_gap}")
    merged: list[list[int]] = []
    for seg in segs:
        if merged and merged[-1][0] == seg.label and seg.start - merged[-1][2] <= max_gap:
            merged[-1][2] = max(merged[-1][2], seg.end)
        else:
            merged.append([seg.label, seg.start, seg.end])
    return segs.with_segments(Segment(*m) for m in merged)


def filter_min_duration(segs: SegmentList, min_duration: int) -> SegmentList:
    if min_duration < 1:
        raise ValueError(f"min_duration must be >= 1, got {min_duration}")
    return segs.with_segments(s for s in segs if s.length >= min_duration)


def split_max_duration(segs: SegmentList, max_duration: int) -> SegmentList:
    """Cut over-long bouts into consecutive pieces of at most ``max_duration``."""
    if max_duration < 1:
        raise ValueError(f"max_duration must be >= 1, got {max_duration}")
    pieces = []
    for s in segs:
        for start in range(s.start, s.end, max_duration):
            pieces.append(Segment(s.label, start, min(start + max_duration, s.end)))
    return segs.with_segments(pieces)


def mode_smooth(series: FrameSeries, window: int) -> FrameSeries:
    """Centered majority filter.

    The window is truncated at the series edges. When several labels tie for
    the majority, the frame keeps its own label if it is among them, and
    otherwise takes the lowest tied label index.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 1, got {window}")
    labels = series.labels
    n = labels.size
    if window == 1 or n == 0:
        return series
    k = len(series.label_set)
    half = window // 2
    onehot = np.zeros((n + 1, k), dtype=np.int64)
    onehot[np.arange(1, n + 1), labels] = 1
    csum = np.cumsum(onehot, axis=0)
    idx = np.arange(n)
    lo = np.clip(idx - half, 0, n)
    hi = np.clip(idx + half + 1, 0, n)
    counts = csum[hi] - csum[lo]
    best = counts.max(axis=1)
    own = counts[idx, labels]
    out = np.where(own == best, labels, np.argmax(counts, axis=1))
    return series.replace_labels(out)


def apply_pipeline(series: FrameSeries, cfg: PostprocessConfig = PostprocessConfig()) -> SegmentList:
    smoothed = mode_smooth(series, cfg.smooth_window)
    segs = segments_from_frames(smoothed)
    segs = merge_gaps(segs, cfg.max_gap)
    segs = filter_min_duration(segs, cfg.min_duration)
    if cfg.max_duration is not None:
        segs = split_max_duration(segs, cfg.max_duration)
    return segs


class BoutPostprocessor(BaseEstimator, TransformerMixin):
    """Estimator wrapper around :func:`apply_pipeline`.

    ``transform`` takes a :class:`FrameSeries` (or a 1-D integer label array,
    background 0) and returns a :class:`SegmentList`. There is nothing to
    learn; ``fit`` only validates the parameters.
    """

    def __init__(self, max_gap=0, min_duration=1, max_duration=None, smooth_window=1):
        self.max_gap = max_gap
        self.min_duration = min_duration
        self.max_duration = max_duration
        self.smooth_window = smooth_window

    def _config(self) -> PostprocessConfig:
        return PostprocessConfig(
            max_gap=self.max_gap,
            min_duration=self.min_duration,
            max_duration=self.max_duration,
            smooth_window=self.smooth_window,
        )

    def fit(self, X=None, y=None):
        self.config_ = self._config()
        return self

    def transform(self, X):
        cfg = getattr(self, "config_", None) or self._config()
        return apply_pipeline(as_frame_series(X), cfg)
