"""Headless highway scenario simulator.

Generates multi-lane constant-speed traffic with optional lane-change
maneuvers, renders ground-truth boxes and depth rasters through a
configurable camera, and produces noisy detections plus latency-lagged
cloud twin records.
"""

from .config import (
    CameraMount,
    LaneChange,
    ScenarioConfig,
    VehiclePlacement,
)
from .world import (
    DriverType,
    Timeline,
    VehicleState,
    VehicleTrack,
    generate_scenario,
    lane_center,
)
from .sensors import (
    Frame,
    TwinRecord,
    camera_pose_for,
    project_cuboid,
    render_depth,
    perturb_detections,
    twin_snapshot,
    simulate,
)

__all__ = [
    "CameraMount",
    "DriverType",
    "Frame",
    "LaneChange",
    "ScenarioConfig",
    "Timeline",
    "TwinRecord",
    "VehiclePlacement",
    "VehicleState",
    "VehicleTrack",
    "camera_pose_for",
    "generate_scenario",
    "lane_center",
    "perturb_detections",
    "project_cuboid",
    "render_depth",
    "simulate",
    "twin_snapshot",
]
