"""Relational pose features and threshold heuristics.

Feature values are float arrays with NaN marking frames where a value is
undefined (low keypoint likelihood, degenerate geometry). Classifiers treat
NaN as background.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin

from .core import FrameSeries, LabelSet, Timebase
from .errors import (
    FrameCountMismatch,
    LengthMismatch,
    MissingKeypoint,
    MissingScale,
    PreconditionError,
    TimebaseMismatch,
    UnitError,
)

DEFAULT_MIN_LIKELIHOOD = 0.5
DEFAULT_PROXIMITY_CM = 5.0
CENTROID = None  # sentinel for "mean of all keypoints"

UNITS = {"distance": "cm", "speed": "cm/s", "facing_angle": "rad"}


@dataclass(frozen=True, eq=False)
class PoseTable:
    """Keypoint track of one animal.

    ``coords`` has shape (frames, keypoints, 2) in pixels and ``likelihood``
    has shape (frames, keypoints).
    """

    animal_id: str
    keypoints: tuple
    coords: np.ndarray
    likelihood: np.ndarray
    timebase: Timebase = field(default_factory=Timebase)

    def __post_init__(self):
        kps = tuple(self.keypoints)
        if not kps:
            raise ValueError("a pose table needs at least one keypoint")
        coords = np.array(self.coords, dtype=float)
        lik = np.array(self.likelihood, dtype=float)
        if coords.ndim != 3 or coords.shape[1:] != (len(kps), 2):
            raise ValueError(f"coords must have shape (frames, {len(kps)}, 2), got {coords.shape}")
        if lik.shape != coords.shape[:2]:
            raise ValueError(f"likelihood must have shape {coords.shape[:2]}, got {lik.shape}")
        if not np.all(np.isfinite(coords)):
            raise ValueError("pose coordinates must be finite")
        coords.setflags(write=False)
        lik.setflags(write=False)
        object.__setattr__(self, "keypoints", kps)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "likelihood", lik)

    def __len__(self):
        return self.coords.shape[0]

    def _kp_index(self, name: str) -> int:
        try:
            return self.keypoints.index(name)
        except ValueError:
            raise MissingKeypoint(
                f"keypoint {name!r} not tracked for animal {self.animal_id!r} "
                f"(has {list(self.keypoints)})"
            ) from None

    def point(self, name: Optional[str] = CENTROID, min_likelihood: float = DEFAULT_MIN_LIKELIHOOD):
        """Per-frame (x, y) of a keypoint, or of the centroid of all keypoints.

        Frames where a required keypoint falls below ``min_likelihood`` are NaN.
        """
        if name is CENTROID:
            xy = self.coords.mean(axis=1)
            ok = np.all(self.likelihood >= min_likelihood, axis=1)
        else:
            k = self._kp_index(name)
            xy = self.coords[:, k, :].copy()
            ok = self.likelihood[:, k] >= min_likelihood
        xy[~ok] = np.nan
        return xy


@dataclass(frozen=True, eq=False)
class FeatureSeries:
    name: str
    values: np.ndarray
    unit: str
    timebase: Timebase = field(default_factory=Timebase)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).reshape(-1)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class HeuristicRule:
    kind: str
    distance_threshold: float = DEFAULT_PROXIMITY_CM
    approach_speed_threshold: Optional[float] = None
    label: Optional[str] = None

    def __post_init__(self):
        if self.kind not in ("proximity", "approach"):
            raise ValueError(f"rule kind must be 'proximity' or 'approach', got {self.kind!r}")
        if not self.distance_threshold > 0:
            raise ValueError("distance_threshold must be > 0")
        if self.kind == "approach":
            if self.approach_speed_threshold is None or not self.approach_speed_threshold > 0:
                raise ValueError("an approach rule needs approach_speed_threshold > 0")
        if self.label is None:
            object.__setattr__(self, "label", self.kind)

    @classmethod
    def parse(cls, text: str, label: Optional[str] = None) -> "HeuristicRule":
        """Parse ``proximity[:cm]`` or ``approach:cm:cm_per_s``."""
        kind, *nums = text.split(":")
        try:
            vals = [float(x) for x in nums]
        except ValueError:
            raise ValueError(f"bad rule {text!r}: thresholds must be numbers") from None
        if kind == "proximity" and len(vals) <= 1:
            return cls("proximity", vals[0] if vals else DEFAULT_PROXIMITY_CM, label=label)
        if kind == "approach" and len(vals) == 2:
            return cls("approach", vals[0], vals[1], label=label)
        raise ValueError(f"bad rule {text!r}: expected proximity[:cm] or approach:cm:cm_per_s")


def _check_pair(a: PoseTable, b: PoseTable) -> None:
    if len(a) != len(b):
        raise FrameCountMismatch(
            f"animal {a.animal_id!r} has {len(a)} frames, animal {b.animal_id!r} has {len(b)}"
        )
    if a.timebase != b.timebase:
        raise TimebaseMismatch(f"timebases differ: {a.timebase} vs {b.timebase}")


def _scale(tb: Timebase) -> float:
    if tb.px_per_cm is None:
        raise MissingScale("px_per_cm is required to express features in cm")
    return tb.px_per_cm


def interanimal_distance(
    a: PoseTable,
    b: PoseTable,
    ref_keypoint: Optional[str] = CENTROID,
    min_likelihood: float = DEFAULT_MIN_LIKELIHOOD,
) -> FeatureSeries:
    """Euclidean distance in cm between the reference points of two animals."""
    _check_pair(a, b)
    scale = _scale(a.timebase)
    d = a.point(ref_keypoint, min_likelihood) - b.point(ref_keypoint, min_likelihood)
    return FeatureSeries("distance", np.hypot(d[:, 0], d[:, 1]) / scale, "cm", a.timebase)


def speed(
    a: PoseTable,
    ref_keypoint: Optional[str] = CENTROID,
    min_likelihood: float = DEFAULT_MIN_LIKELIHOOD,
) -> FeatureSeries:
    """Frame-to-frame displacement of the reference point in cm/s.

    Frame 0 has no predecessor and repeats the frame 1 value.
    """
    if len(a) < 2:
        raise PreconditionError("speed needs at least two frames")
    scale = _scale(a.timebase)
    xy = a.point(ref_keypoint, min_likelihood)
    step = np.diff(xy, axis=0)
    v = np.hypot(step[:, 0], step[:, 1]) * a.timebase.fps / scale
    return FeatureSeries("speed", np.concatenate(([v[0]], v)), "cm/s", a.timebase)


def facing_angle(
    a: PoseTable,
    b: PoseTable,
    nose_kp: str = "nose",
    tail_kp: str = "tail_base",
    target_kp: Optional[str] = CENTROID,
    min_likelihood: float = DEFAULT_MIN_LIKELIHOOD,
) -> FeatureSeries:
    """Unsigned angle in [0, pi] between a's heading and the line to b.

    The heading runs from a's tail keypoint to its nose; the line runs from
    a's nose to b's target keypoint (b's centroid by default). Frames with a
    zero-length heading or target vector are NaN.
    """
    _check_pair(a, b)
    nose = a.point(nose_kp, min_likelihood)
    heading = nose - a.point(tail_kp, min_likelihood)
    to_target = b.point(target_kp, min_likelihood) - nose
    cross = heading[:, 0] * to_target[:, 1] - heading[:, 1] * to_target[:, 0]
    dot = np.einsum("ij,ij->i", heading, to_target)
    angle = np.arctan2(np.abs(cross), dot)
    degenerate = ~np.any(heading != 0, axis=1) | ~np.any(to_target != 0, axis=1)
    angle[degenerate] = np.nan
    return FeatureSeries("facing_angle", angle, "rad", a.timebase)


def _rule_label_set(label: str, label_set: Optional[LabelSet]) -> tuple[LabelSet, int]:
    if label_set is None:
        label_set = LabelSet(("none", label)) if label != "none" else LabelSet(("background", label))
    return label_set, label_set.index(label)


def proximity_classifier(
    dist: FeatureSeries,
    threshold: float = DEFAULT_PROXIMITY_CM,
    label: str = "proximity",
    label_set: Optional[LabelSet] = None,
) -> FrameSeries:
    """Label frames where the animals are at most ``threshold`` cm apart."""
    if dist.unit != "cm":
        raise UnitError(f"proximity needs a distance in cm, got {dist.unit!r}")
    label_set, idx = _rule_label_set(label, label_set)
    with np.errstate(invalid="ignore"):
        hit = dist.values <= threshold
    return FrameSeries(np.where(hit, idx, label_set.background_index), label_set, dist.timebase)


def approach_classifier(
    dist: FeatureSeries,
    speed_a: FeatureSeries,
    rule: HeuristicRule,
    label_set: Optional[LabelSet] = None,
) -> FrameSeries:
    """Label frames where the gap is closing, already short, and a moves fast enough.

    A frame is positive iff the distance dropped since the previous frame, the
    distance is within ``rule.distance_threshold`` and the speed of ``a`` is
    at least ``rule.approach_speed_threshold``. Frame 0 is never positive.
    """
    if dist.unit != "cm":
        raise UnitError(f"approach needs a distance in cm, got {dist.unit!r}")
    if speed_a.unit != "cm/s":
        raise UnitError(f"approach needs a speed in cm/s, got {speed_a.unit!r}")
    if len(dist) != len(speed_a):
        raise LengthMismatch(f"distance has {len(dist)} frames, speed has {len(speed_a)}")
    if rule.approach_speed_threshold is None:
        raise ValueError("approach rule has no speed threshold")
    label_set, idx = _rule_label_set(rule.label, label_set)
    d = dist.values
    hit = np.zeros(d.size, dtype=bool)
    with np.errstate(invalid="ignore"):
        hit[1:] = (
            (d[1:] < d[:-1])
            & (d[1:] <= rule.distance_threshold)
            & (speed_a.values[1:] >= rule.approach_speed_threshold)
        )
    return FrameSeries(np.where(hit, idx, label_set.background_index), label_set, dist.timebase)


def classify(
    rules: Sequence[HeuristicRule],
    dist: FeatureSeries,
    speed_a: Optional[FeatureSeries] = None,
    background: str = "none",
) -> FrameSeries:
    """Apply several rules into one exclusive annotation.

    Where rules overlap, the rule listed first wins.
    """
    names = list(dict.fromkeys(r.label for r in rules))
    label_set = LabelSet((background, *names))
    out = np.full(len(dist), label_set.background_index, dtype=np.int64)
    for rule in reversed(rules):
        if rule.kind == "proximity":
            hit = proximity_classifier(dist, rule.distance_threshold, rule.label, label_set)
        else:
            if speed_a is None:
                raise ValueError("approach rules need a speed series")
            hit = approach_classifier(dist, speed_a, rule, label_set)
        mask = hit.labels != label_set.background_index
        out[mask] = hit.labels[mask]
    return FrameSeries(out, label_set, dist.timebase)


class SocialFeatureExtractor(BaseEstimator, TransformerMixin):
    """Turn a pair of pose tables into a (frames, n_features) matrix.

    Columns: distance (cm), speed of the first animal (cm/s) and, when both
    ``nose_keypoint`` and ``tail_keypoint`` are set, facing angle (rad).
    """

    def __init__(
        self,
        ref_keypoint=None,
        nose_keypoint=None,
        tail_keypoint=None,
        target_keypoint=None,
        min_likelihood=DEFAULT_MIN_LIKELIHOOD,
    ):
        self.ref_keypoint = ref_keypoint
        self.nose_keypoint = nose_keypoint
        self.tail_keypoint = tail_keypoint
        self.target_keypoint = target_keypoint
        self.min_likelihood = min_likelihood

    def fit(self, X=None, y=None):
        names = ["distance", "speed"]
        if self.nose_keypoint and self.tail_keypoint:
            names.append("facing_angle")
        self.feature_names_out_ = np.array(names, dtype=object)
        return self

    def get_feature_names_out(self, input_features=None):
        if not hasattr(self, "feature_names_out_"):
            self.fit()
        return self.feature_names_out_

    def extract(self, X) -> list[FeatureSeries]:
        a, b = X
        feats = [
            interanimal_distance(a, b, self.ref_keypoint, self.min_likelihood),
            speed(a, self.ref_keypoint, self.min_likelihood),
        ]
        if self.nose_keypoint and self.tail_keypoint:
            feats.append(
                facing_angle(
                    a, b, self.nose_keypoint, self.tail_keypoint, self.target_keypoint, self.min_likelihood
                )
            )
        return feats

    def transform(self, X):
        return np.column_stack([f.values for f in self.extract(X)])


class HeuristicClassifier(BaseEstimator, ClassifierMixin):
    """Rule-based classifier over the columns produced by SocialFeatureExtractor.

    Nothing is learned: ``fit`` only records the label vocabulary, and
    ``predict`` returns one label index per frame (0 = background).
    """

    def __init__(self, rules=(HeuristicRule("proximity"),), background="none", fps=25.0):
        self.rules = rules
        self.background = background
        self.fps = fps

    def fit(self, X=None, y=None):
        rules = [HeuristicRule.parse(r) if isinstance(r, str) else r for r in self.rules]
        self.rules_ = rules
        self.classes_ = np.arange(len(dict.fromkeys(r.label for r in rules)) + 1)
        self.label_set_ = LabelSet((self.background, *dict.fromkeys(r.label for r in rules)))
        return self

    def predict(self, X):
        if not hasattr(self, "rules_"):
            self.fit()
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] < 1:
            raise ValueError(f"expected a (frames, features) matrix, got shape {X.shape}")
        tb = Timebase(self.fps)
        dist = FeatureSeries("distance", X[:, 0], "cm", tb)
        spd = FeatureSeries("speed", X[:, 1], "cm/s", tb) if X.shape[1] > 1 else None
        return classify(self.rules_, dist, spd, self.background).labels.copy()
