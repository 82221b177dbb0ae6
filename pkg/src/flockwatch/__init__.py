"""Streaming multi-object tracking and behavioral anomaly detection.

Ingests per-frame bounding-box detections, tracks individuals with a
centroid tracker, flags huddling (radius-neighbor density) and inactivity
(low windowed displacement), and ships a full detection/event evaluation
harness plus a seeded scenario generator.
"""

from .activity import (
    ActivityConfig,
    ActivityMonitor,
    InactivityEvent,
    activity_level,
    displacement,
    evaluate_inactivity,
)
from .geometry import (
    BoundingBox,
    Detection,
    FrameDetections,
    Point2D,
    TrackId,
    centroid,
    euclidean_distance,
    iou,
)
from .huddling import HuddleConfig, HuddleVerdict, classify_frame
from .io import (
    ConfigError,
    GroundTruthFrame,
    ParseError,
    load_config,
    parse_detection_stream,
    parse_events,
    parse_voc_annotation,
    serialize_detections,
    serialize_events,
)
from .metrics import (
    ConfusionCounts,
    EvalReport,
    EvalRow,
    MatchResult,
    PRCurve,
    average_precision,
    f1,
    match_detections,
    mean_ap,
    pr_curve,
    precision,
    recall,
)
from .pipeline import (
    AnomalyEvent,
    PipelineConfig,
    analyze_stream,
    detection_map,
    evaluate_detections,
    evaluate_events,
)
from .spatial import SpatialIndex, brute_force_count, index_build
from .synth import (
    ConvergeTo,
    DetectorNoise,
    RandomWalk,
    ScenarioSpec,
    ScenarioTruth,
    Stationary,
    generate,
    parse_scenario_spec,
)
from .tracker import (
    CentroidTracker,
    FrameAssignment,
    Observation,
    Track,
    TrackerConfig,
)

__version__ = "0.1.0"
