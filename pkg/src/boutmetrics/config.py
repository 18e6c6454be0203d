"""Run configuration loaded from a YAML file.

Every key is optional; command line flags override file values, which
override the defaults below. Example::

    labels: [other, attack, investigation, mount]
    background: other
    fps: 30
    annotation:
      label_column: label
      frame_column: frame
      label_map: {"0": attack, "1": investigation, "2": mount, "3": other}
    postprocess: {max_gap: 2, min_duration: 3, max_duration: null, smooth_window: 1}
    metrics: {tolerance: 0, overlap_scope: all, continuity_weight: bouts, iou_thresholds: [0.3, 0.5, 0.7]}
    pose: {px_per_cm: 12.5, ref_keypoint: null, nose_keypoint: nose, tail_keypoint: tail_base}
    rules:
      - {kind: proximity, distance_threshold: 5}
      - {kind: approach, distance_threshold: 9, approach_speed_threshold: 2}
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional

import yaml

from .core import DEFAULT_FPS, LabelSet
from .errors import ConfigError, FileError
from .features import DEFAULT_MIN_LIKELIHOOD, HeuristicRule
from .metrics import CONTINUITY_WEIGHTS, OVERLAP_SCOPES
from .postprocess import PostprocessConfig


@dataclass(frozen=True)
class AnnotationOptions:
    label_column: str = "label"
    frame_column: Optional[str] = None
    format: Optional[str] = None
    label_map: Optional[dict] = None


@dataclass(frozen=True)
class MetricOptions:
    tolerance: int = 0
    overlap_scope: str = "all"
    continuity_weight: str = "bouts"
    iou_thresholds: Optional[tuple] = None

    def __post_init__(self):
        if self.tolerance < 0:
            raise ValueError("tolerance must be >= 0")
        if self.overlap_scope not in OVERLAP_SCOPES:
            raise ValueError(f"overlap_scope must be one of {OVERLAP_SCOPES}")
        if self.continuity_weight not in CONTINUITY_WEIGHTS:
            raise ValueError(f"continuity_weight must be one of {CONTINUITY_WEIGHTS}")
        if self.iou_thresholds is not None:
            ts = tuple(float(t) for t in self.iou_thresholds)
            if any(not 0 < t <= 1 for t in ts):
                raise ValueError("iou_thresholds must lie in (0, 1]")
            object.__setattr__(self, "iou_thresholds", ts)


@dataclass(frozen=True)
class PoseOptions:
    px_per_cm: Optional[float] = None
    keypoints: Optional[tuple] = None
    ref_keypoint: Optional[str] = None
    nose_keypoint: Optional[str] = None
    tail_keypoint: Optional[str] = None
    target_keypoint: Optional[str] = None
    min_likelihood: float = DEFAULT_MIN_LIKELIHOOD

    def __post_init__(self):
        if self.px_per_cm is not None and not self.px_per_cm > 0:
            raise ValueError("px_per_cm must be > 0")
        if not 0 <= self.min_likelihood <= 1:
            raise ValueError("min_likelihood must lie in [0, 1]")
        if self.keypoints is not None:
            object.__setattr__(self, "keypoints", tuple(self.keypoints))


@dataclass(frozen=True)
class RunConfig:
    labels: Optional[tuple] = None
    background: str = "other"
    fps: float = DEFAULT_FPS
    annotation: AnnotationOptions = field(default_factory=AnnotationOptions)
    postprocess: PostprocessConfig = field(default_factory=PostprocessConfig)
    metrics: MetricOptions = field(default_factory=MetricOptions)
    pose: PoseOptions = field(default_factory=PoseOptions)
    rules: tuple = ()

    def __post_init__(self):
        if not self.fps > 0:
            raise ValueError("fps must be > 0")
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))
            self.label_set()

    def label_set(self) -> Optional[LabelSet]:
        if self.labels is None:
            return None
        if self.background not in self.labels:
            raise ValueError(f"background {self.background!r} missing from labels {list(self.labels)}")
        return LabelSet(self.labels, self.labels.index(self.background))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rules"] = [asdict(r) for r in self.rules]
        return d

    def digest(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"), default=list)
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        doc = dict(doc or {})
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            nested = {
                "annotation": AnnotationOptions,
                "postprocess": PostprocessConfig,
                "metrics": MetricOptions,
                "pose": PoseOptions,
            }
            for key, typ in nested.items():
                if key in doc:
                    doc[key] = typ(**(doc[key] or {}))
            if "rules" in doc:
                doc["rules"] = tuple(
                    HeuristicRule.parse(r) if isinstance(r, str) else HeuristicRule(**r)
                    for r in doc["rules"] or ()
                )
            return cls(**doc)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config: {exc}") from None

    def override(self, **changes) -> "RunConfig":
        """Return a copy with top-level or dotted (``metrics.tolerance``) keys replaced.

        ``None`` values are ignored, so unset command line flags fall through.
        """
        cfg = self
        try:
            for key, value in changes.items():
                if value is None:
                    continue
                if "." in key:
                    outer, inner = key.split(".", 1)
                    cfg = replace(cfg, **{outer: replace(getattr(cfg, outer), **{inner: value})})
                else:
                    cfg = replace(cfg, **{key: value})
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid option: {exc}") from None
        return cfg


def load_config(path) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise FileError(f"cannot read config {path}: {exc.strerror or exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
    if doc is not None and not isinstance(doc, dict):
        raise ConfigError(f"config {path} must be a mapping")
    return RunConfig.from_dict(doc or {})
