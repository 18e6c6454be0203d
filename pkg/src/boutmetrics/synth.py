"""Seeded synthetic annotations, controlled corruptions, and naive oracles.

The oracles here are intentionally simple and written without reusing the
production code paths; tests compare the two.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .core import FrameSeries, LabelSet, Segment, SegmentList, Timebase, segments_from_frames
from .errors import InfeasibleDensity, TooLarge
from .metrics import MatchedPairs

PERTURBATION_KINDS = ("boundary_jitter", "flicker", "split", "delete", "relabel")
ORACLE_MAX_SEGMENTS = 8


def synth_label_set(n_labels: int) -> LabelSet:
    return LabelSet(("background", *(f"behavior_{i}" for i in range(1, n_labels + 1))))


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    length: int = 1000
    n_labels: int = 1
    bout_min: int = 5
    bout_max: int = 20
    density: float = 0.3
    min_gap: int = 1
    fps: float = 25.0

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("length must be >= 1")
        if self.n_labels < 1:
            raise ValueError("n_labels must be >= 1")
        if not 1 <= self.bout_min <= self.bout_max:
            raise ValueError("need 1 <= bout_min <= bout_max")
        if not 0 <= self.density < 1:
            raise ValueError("density must lie in [0, 1)")
        if self.min_gap < 1:
            raise ValueError("min_gap must be >= 1")


@dataclass(frozen=True)
class Perturbation:
    kind: str
    magnitude: float = 0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in PERTURBATION_KINDS:
            raise ValueError(f"unknown perturbation {self.kind!r}; expected one of {PERTURBATION_KINDS}")
        if self.magnitude < 0:
            raise ValueError("magnitude must be >= 0")


def generate(cfg: SynthConfig) -> FrameSeries:
    """Place non-touching bouts at random until the target density is reached.

    Bout lengths are uniform on ``[bout_min, bout_max]``; bouts are separated
    by at least ``min_gap`` background frames, so every placed bout is
    recovered exactly by run-length extraction.
    """
    rng = np.random.default_rng(cfg.seed)
    label_set = synth_label_set(cfg.n_labels)
    target = round(cfg.density * cfg.length)
    lengths: list[int] = []
    while sum(lengths) < target:
        lengths.append(int(rng.integers(cfg.bout_min, cfg.bout_max + 1)))
    n = len(lengths)
    free = cfg.length - sum(lengths) - max(n - 1, 0) * cfg.min_gap
    if free < 0:
        raise InfeasibleDensity(
            f"cannot fit {n} bouts ({sum(lengths)} frames) with gaps of {cfg.min_gap} "
            f"into {cfg.length} frames"
        )
    labels = np.zeros(cfg.length, dtype=np.int64)
    if n:
        # spread the spare background over the n + 1 slots around the bouts
        cuts = np.sort(rng.integers(0, free + 1, size=n))
        extra = np.diff(np.concatenate(([0], cuts)))
        bout_labels = rng.integers(1, cfg.n_labels + 1, size=n)
        pos = 0
        for i, (ln, lab) in enumerate(zip(lengths, bout_labels)):
            pos += int(extra[i]) + (cfg.min_gap if i else 0)
            labels[pos : pos + ln] = lab
            pos += ln
    return FrameSeries(labels, label_set, Timebase(cfg.fps))


def perturb(series: FrameSeries, p: Perturbation) -> FrameSeries:
    """Corrupt a series in one controlled way.

    boundary_jitter
        every bout edge moves by exactly ``magnitude`` frames, inward or
        outward with equal probability (edges are clamped to the series and a
        bout keeps at least one frame)
    flicker
        a ``magnitude`` fraction of in-bout frames becomes background
    split
        ``magnitude`` single background frames are cut into the interior of
        each bout (as many as fit)
    delete
        a ``magnitude`` fraction of bouts is erased
    relabel
        a ``magnitude`` fraction of bouts switches to another foreground label
    """
    if p.magnitude == 0:
        return series
    rng = np.random.default_rng(p.seed)
    bg = series.label_set.background_index
    segs = list(segments_from_frames(series))
    out = series.labels.copy()
    n = len(out)

    if p.kind == "boundary_jitter":
        m = int(p.magnitude)
        out[:] = bg
        for s in segs:
            d0, d1 = rng.choice((-m, m), size=2)
            start = min(max(s.start + d0, 0), n - 1)
            end = max(min(s.end + d1, n), start + 1)
            out[start:end] = s.label
    elif p.kind == "flicker":
        frac = min(float(p.magnitude), 1.0)
        inside = np.flatnonzero(out != bg)
        k = int(round(frac * inside.size))
        out[rng.choice(inside, size=k, replace=False)] = bg
    elif p.kind == "split":
        per_bout = int(p.magnitude)
        for s in segs:
            interior = np.arange(s.start + 1, s.end - 1)
            k = min(per_bout, interior.size)
            out[rng.choice(interior, size=k, replace=False)] = bg
    elif p.kind == "delete":
        k = int(round(min(float(p.magnitude), 1.0) * len(segs)))
        for i in rng.choice(len(segs), size=k, replace=False):
            out[segs[i].start : segs[i].end] = bg
    elif p.kind == "relabel":
        fg = series.label_set.foreground
        if len(fg) > 1:
            k = int(round(min(float(p.magnitude), 1.0) * len(segs)))
            for i in rng.choice(len(segs), size=k, replace=False):
                s = segs[i]
                out[s.start : s.end] = rng.choice([x for x in fg if x != s.label])
    return series.replace_labels(out)


def oracle_segments(series: FrameSeries) -> SegmentList:
    """Plain-loop run-length extraction, kept independent of segments_from_frames."""
    bg = series.label_set.background_index
    found = []
    current = None
    begin = 0
    for i, lab in enumerate(series.labels.tolist()):
        if lab != current:
            if current is not None and current != bg:
                found.append(Segment(current, begin, i))
            current = lab
            begin = i
    if current is not None and current != bg:
        found.append(Segment(current, begin, len(series.labels)))
    return SegmentList(tuple(found), len(series.labels), series.label_set, series.timebase)


def _exact_tiou(a: Segment, b: Segment) -> Fraction:
    lo, hi = max(a.start, b.start), min(a.end, b.end)
    if hi <= lo:
        return Fraction(0)
    return Fraction(hi - lo, max(a.end, b.end) - min(a.start, b.start))


def oracle_optimal_matching(pred: SegmentList, gt: SegmentList, label) -> MatchedPairs:
    """Exhaustive one-to-one matching maximizing pair count, then total tIoU.

    Only for small inputs: at most eight bouts per side for the label.
    """
    if isinstance(label, str):
        label = (gt.label_set or pred.label_set).index(label)
    g_segs = [s for s in gt.segments if s.label == label]
    p_segs = [s for s in pred.segments if s.label == label]
    if len(g_segs) > ORACLE_MAX_SEGMENTS or len(p_segs) > ORACLE_MAX_SEGMENTS:
        raise TooLarge(
            f"exhaustive matching supports at most {ORACLE_MAX_SEGMENTS} bouts per side, "
            f"got {len(g_segs)} and {len(p_segs)}"
        )
    cand = [
        [j for j, ps in enumerate(p_segs) if _exact_tiou(g, ps) > 0] for g in g_segs
    ]
    best_key = (-1, Fraction(-1))
    best: list = []

    # depth-first over gt bouts: each takes nothing or one still-free overlapping pred
    def search(i, chosen, used, count, total):
        nonlocal best_key, best
        if i == len(g_segs):
            if (count, total) > best_key:
                best_key = (count, total)
                best = list(chosen)
            return
        for j in cand[i]:
            if j not in used:
                used.add(j)
                chosen.append(j)
                search(i + 1, chosen, used, count + 1, total + _exact_tiou(g_segs[i], p_segs[j]))
                chosen.pop()
                used.discard(j)
        chosen.append(None)
        search(i + 1, chosen, used, count, total)
        chosen.pop()

    search(0, [], set(), 0, Fraction(0))
    pairs = []
    for i, c in enumerate(best):
        if c is not None:
            pairs.append((g_segs[i], p_segs[c], float(_exact_tiou(g_segs[i], p_segs[c]))))
    used_g = {id(p[0]) for p in pairs}
    used_p = {id(p[1]) for p in pairs}
    return MatchedPairs(
        tuple(pairs),
        tuple(g for g in g_segs if id(g) not in used_g),
        tuple(p for p in p_segs if id(p) not in used_p),
    )


def random_series(rng: np.random.Generator, length: int, n_labels: int, switch_prob: Optional[float] = None) -> FrameSeries:
    """Markov-ish random label series used by the randomized test corpora."""
    if switch_prob is None:
        switch_prob = float(rng.uniform(0.05, 0.6))
    labels = np.empty(length, dtype=np.int64)
    cur = int(rng.integers(0, n_labels + 1))
    for i in range(length):
        if rng.random() < switch_prob:
            cur = int(rng.integers(0, n_labels + 1))
        labels[i] = cur
    return FrameSeries(labels, synth_label_set(n_labels))
