"""Bout-level evaluation of behavioral annotations.

Frame-based metrics, four bout-level agreement scores (detection accuracy,
segment overlap, temporal precision, intra-bout continuity), bout
post-processing, and rule-based social features from pose tracks.
"""

__version__ = "0.1.0"

from .core import (
    FrameSeries,
    LabelSet,
    Segment,
    SegmentList,
    Timebase,
    binarize,
    frames_from_segments,
    segments_from_frames,
)
from .features import (
    FeatureSeries,
    HeuristicClassifier,
    HeuristicRule,
    PoseTable,
    SocialFeatureExtractor,
    approach_classifier,
    facing_angle,
    interanimal_distance,
    proximity_classifier,
    speed,
)
from .metrics import (
    BanosScores,
    ConfusionCounts,
    EvaluationReport,
    FrameMetrics,
    MatchedPairs,
    banos,
    detection_accuracy,
    detection_accuracy_score,
    detection_f1_curve,
    evaluate,
    frame_confusion,
    frame_f1_score,
    frame_metrics,
    intra_bout_continuity,
    intra_bout_continuity_score,
    macro_aggregate,
    match_segments,
    segment_overlap,
    segment_overlap_score,
    temporal_precision,
    temporal_precision_score,
    tiou,
)
from .postprocess import (
    BoutPostprocessor,
    PostprocessConfig,
    apply_pipeline,
    filter_min_duration,
    merge_gaps,
    mode_smooth,
    split_max_duration,
)
