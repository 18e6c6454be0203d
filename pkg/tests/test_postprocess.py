import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from boutmetrics.core import LabelSet, Segment, SegmentList, segments_from_frames
from boutmetrics.postprocess import (
    BoutPostprocessor,
    PostprocessConfig,
    apply_pipeline,
    filter_min_duration,
    merge_gaps,
    mode_smooth,
    split_max_duration,
)

from .conftest import series
from .oracles import mode_filter

A, B = 1, 2
LS = LabelSet(("bg", "A", "B"))


def segs(*triples, n=20):
    return SegmentList(tuple(Segment(*t) for t in triples), n, LS)


def triples(sl):
    return [(s.label, s.start, s.end) for s in sl]


label_lists = st.lists(st.integers(0, 2), max_size=50)


def test_merge_gaps_examples():
    assert triples(merge_gaps(segs((A, 0, 5), (A, 7, 10)), 2)) == [(A, 0, 10)]
    assert triples(merge_gaps(segs((A, 0, 5), (A, 8, 10)), 2)) == [(A, 0, 5), (A, 8, 10)]
    assert triples(merge_gaps(segs((A, 0, 5), (B, 7, 10)), 5)) == [(A, 0, 5), (B, 7, 10)]


def test_merge_gaps_is_transitive():
    assert triples(merge_gaps(segs((A, 0, 2), (A, 3, 5), (A, 6, 8)), 1)) == [(A, 0, 8)]


def test_merge_gaps_blocked_by_other_label():
    got = merge_gaps(segs((A, 0, 5), (B, 5, 7), (A, 7, 10)), 3)
    assert triples(got) == [(A, 0, 5), (B, 5, 7), (A, 7, 10)]


def test_filter_min_duration_examples():
    assert triples(filter_min_duration(segs((A, 0, 2)), 3)) == []
    assert triples(filter_min_duration(segs((A, 0, 3)), 3)) == [(A, 0, 3)]


def test_split_max_duration_examples():
    assert triples(split_max_duration(segs((A, 0, 10)), 4)) == [(A, 0, 4), (A, 4, 8), (A, 8, 10)]
    assert triples(split_max_duration(segs((A, 0, 4)), 4)) == [(A, 0, 4)]
    assert triples(split_max_duration(segs(), 4)) == []


@pytest.mark.parametrize(
    "labels, window, expected",
    [
        ([1, 2, 1, 1], 1, [1, 2, 1, 1]),
        ([1, 2, 1, 1], 3, [1, 1, 1, 1]),
        ([1, 1, 0, 1, 1], 3, [1, 1, 1, 1, 1]),
    ],
)
def test_mode_smooth_examples(labels, window, expected):
    assert mode_filter(labels, window) == expected
    assert mode_smooth(series(labels), window).labels.tolist() == expected


def test_mode_smooth_tie_without_own_label_takes_lowest():
    # window 5 around index 2: counts {2: 2, 1: 1, 0: 2}; own label 1 is not tied
    labels = [2, 2, 1, 0, 0]
    assert mode_smooth(series(labels), 5).labels.tolist() == mode_filter(labels, 5)
    assert mode_smooth(series(labels), 5).labels[2] == 0


def test_pipeline_examples():
    s = series([1, 0, 1, 0, 1, 1])
    assert triples(apply_pipeline(s, PostprocessConfig(max_gap=1, min_duration=2))) == [(1, 0, 6)]
    flick = series([0, 1, 1, 0, 2, 2, 2, 0])
    assert apply_pipeline(flick) == segments_from_frames(flick)
    assert len(apply_pipeline(series([0, 0, 0]))) == 0


def test_pipeline_order_merge_before_min_filter():
    # fragments of length 2 would all be dropped by min_duration 3 if filtering came first
    s = series([1, 1, 0, 1, 1, 0, 1, 1])
    assert triples(apply_pipeline(s, PostprocessConfig(max_gap=1, min_duration=3))) == [(1, 0, 8)]


def test_config_validation():
    with pytest.raises(ValueError):
        PostprocessConfig(smooth_window=2)
    with pytest.raises(ValueError):
        PostprocessConfig(min_duration=5, max_duration=3)
    with pytest.raises(ValueError):
        PostprocessConfig(max_gap=-1)
    with pytest.raises(ValueError):
        PostprocessConfig(min_duration=0)


@given(label_lists, st.integers(0, 5))
def test_merge_gaps_idempotent_and_never_shrinks(labels, gap):
    sl = segments_from_frames(series(labels))
    once = merge_gaps(sl, gap)
    assert merge_gaps(once, gap) == once
    for s in sl:
        assert any(m.label == s.label and m.start <= s.start and s.end <= m.end for m in once)


@given(label_lists, st.integers(1, 6))
def test_filter_min_duration_idempotent_and_subset(labels, k):
    sl = segments_from_frames(series(labels))
    once = filter_min_duration(sl, k)
    assert filter_min_duration(once, k) == once
    assert set(once.segments) <= set(sl.segments)


@given(label_lists)
def test_filter_min_one_is_identity(labels):
    sl = segments_from_frames(series(labels))
    assert filter_min_duration(sl, 1) == sl


@given(label_lists, st.integers(1, 6))
def test_split_preserves_frames_per_label(labels, k):
    sl = segments_from_frames(series(labels))
    out = split_max_duration(sl, k)
    for lab in (1, 2):
        assert sum(s.length for s in out.of_label(lab)) == sum(s.length for s in sl.of_label(lab))
    assert all(s.length <= k for s in out)


@given(label_lists)
def test_merge_zero_is_identity_on_extracted(labels):
    sl = segments_from_frames(series(labels))
    assert merge_gaps(sl, 0) == sl


@given(label_lists, st.sampled_from([1, 3, 5, 7]))
def test_mode_smooth_matches_oracle_and_stays_in_window(labels, window):
    out = mode_smooth(series(labels), window).labels.tolist()
    assert out == mode_filter(labels, window)
    half = window // 2
    for i, v in enumerate(out):
        assert v in labels[max(0, i - half) : i + half + 1]


def test_estimator_wrapper():
    est = BoutPostprocessor(max_gap=1, min_duration=2)
    assert est.get_params() == {"max_gap": 1, "min_duration": 2, "max_duration": None, "smooth_window": 1}
    out = est.fit().transform(np.array([1, 0, 1, 0, 1, 1]))
    assert [(s.label, s.start, s.end) for s in out] == [(1, 0, 6)]
    assert est.set_params(max_gap=0).fit().transform([1, 0, 1]).series_length == 3
    with pytest.raises(ValueError):
        BoutPostprocessor(smooth_window=4).fit()
