"""Camera + cloud-twin sensor fusion for target-vehicle identification,
with a headless highway simulator and evaluation harness."""

from .fusion import (BoundingBox, DepthImage, DepthParams, MatchOutcome,
                     NoMatchReason, baseline_match, depth_evaluate,
                     fuse_frame, match_target)
from .geometry import (CameraIntrinsics, CameraPose, PixelPoint, WorldPoint,
                       back_project, project_anchor)
from .metrics import (EvalRecord, TrajectoryLog, accuracy_at, accuracy_curve,
                      average_ttc, iou, min_ttc, scripted_reaction_experiment,
                      speed_variance, ttc_series)
from .scenesim import Frame, ScenarioConfig, generate_scenario, simulate

__version__ = "0.1.0"

__all__ = [
    "BoundingBox", "CameraIntrinsics", "CameraPose", "DepthImage",
    "DepthParams", "EvalRecord", "Frame", "MatchOutcome", "NoMatchReason",
    "PixelPoint", "ScenarioConfig", "TrajectoryLog", "WorldPoint",
    "accuracy_at", "accuracy_curve", "average_ttc", "back_project",
    "baseline_match", "depth_evaluate", "fuse_frame", "generate_scenario",
    "iou", "match_target", "min_ttc", "project_anchor",
    "scripted_reaction_experiment", "simulate", "speed_variance",
    "ttc_series", "__version__",
]
