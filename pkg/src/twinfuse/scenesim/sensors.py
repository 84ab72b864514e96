"""Synthetic sensing: camera pose, ground-truth boxes, depth, noisy
detections, and the cloud-side vehicle records.

Everything here is a pure function of (timeline, config, frame index) —
given the same scenario the same frame comes back byte-identical, and
frames can be built in any order or in parallel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from ..fusion import BoundingBox, BoxSource, DepthImage
from ..geometry import (CameraIntrinsics, CameraPose, WorldPoint,
                        camera_to_pixel, world_to_camera)
from .config import CameraMount, ScenarioConfig
from .world import (DriverType, Timeline, VehicleState, VehicleTrack,
                    generate_scenario)

# Anything with a cuboid corner closer than this is treated as not in view;
# projecting geometry that straddles the image plane has no finite box.
NEAR_PLANE = 0.5


@dataclass(frozen=True)
class TwinRecord:
    """Cloud-side knowledge of one vehicle: where its GNSS said it was,
    when that report was made, and how it is being driven."""

    vehicle_id: int
    report_time: float
    position: WorldPoint
    speed: float
    driver_type: DriverType = DriverType.NORMAL

    def to_dict(self) -> dict:
        return {
            "vehicle_id": self.vehicle_id,
            "report_time": self.report_time,
            "position": [self.position.x, self.position.y, self.position.z],
            "speed": self.speed,
            "driver_type": self.driver_type.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TwinRecord":
        return cls(
            vehicle_id=int(d["vehicle_id"]),
            report_time=float(d["report_time"]),
            position=WorldPoint(*d["position"]),
            speed=float(d["speed"]),
            driver_type=DriverType(d["driver_type"]),
        )


@dataclass(frozen=True)
class Frame:
    """Everything the ego knows at one instant, plus the ground truth
    needed to score it.

    ``depth`` may be None when a stored run is opened without its rasters
    (distance-free matching never reads them).
    """

    index: int
    timestamp: float
    ego_pose: CameraPose
    intrinsics: CameraIntrinsics
    vehicles: tuple[VehicleState, ...]
    gt_boxes: dict[int, BoundingBox] = field(default_factory=dict)
    depth: DepthImage | None = None
    detections: tuple[BoundingBox, ...] = ()
    twin: tuple[TwinRecord, ...] = ()

    def __post_init__(self):
        if self.index < 0:
            raise ValueError(f"frame index must be >= 0, got {self.index}")
        ids = {v.id for v in self.vehicles}
        stray = set(self.gt_boxes) - ids
        if stray:
            raise ValueError(f"gt boxes for unknown vehicle ids {sorted(stray)}")
        if self.depth is not None:
            if (self.depth.width != self.intrinsics.width
                    or self.depth.height != self.intrinsics.height):
                raise ValueError(
                    f"depth raster {self.depth.width}x{self.depth.height} does "
                    f"not match image {self.intrinsics.width}x{self.intrinsics.height}")


def camera_pose_for(ego: VehicleState, mount: CameraMount) -> CameraPose:
    """Pose of a camera rigidly mounted on the ego, looking along its heading.

    World axes are X forward / Y left / Z up; camera axes are X right /
    Y down / Z forward, so the rotation columns are (-left, -up, forward)
    expressed in world coordinates.
    """
    c, s = math.cos(ego.heading), math.sin(ego.heading)
    forward = np.array([c, s, 0.0])
    left = np.array([-s, c, 0.0])
    up = np.array([0.0, 0.0, 1.0])
    rotation = np.column_stack([-left, -up, forward])
    origin = (ego.position.as_array()
              + mount.forward * forward + mount.left * left + mount.up * up)
    return CameraPose(rotation=rotation, translation=origin)


def _cuboid_corners(v: VehicleState) -> np.ndarray:
    """The 8 cuboid corners of a vehicle, world coordinates, shape (8, 3)."""
    c, s = math.cos(v.heading), math.sin(v.heading)
    axes = np.array([[c, s, 0.0],      # forward
                     [-s, c, 0.0],     # left
                     [0.0, 0.0, 1.0]]) # up
    half = np.array(v.dims) / 2.0
    signs = np.array([[sx, sy, sz]
                      for sx in (-1.0, 1.0)
                      for sy in (-1.0, 1.0)
                      for sz in (-1.0, 1.0)])
    return v.position.as_array() + (signs * half) @ axes


def project_cuboid(v: VehicleState, pose: CameraPose,
                   intr: CameraIntrinsics) -> BoundingBox | None:
    """Axis-aligned image box covering a vehicle's cuboid, or None when
    the vehicle is not fully in front of the camera or projects outside
    the image."""
    corners = _cuboid_corners(v)
    cam = (corners - pose.translation) @ pose.rotation
    if np.any(cam[:, 2] < NEAR_PLANE):
        return None
    us = intr.u0 + intr.fx * cam[:, 0] / cam[:, 2]
    vs = intr.v0 + intr.fy * cam[:, 1] / cam[:, 2]
    raw = BoundingBox(x_min=float(us.min()), y_min=float(vs.min()),
                      x_max=float(us.max()), y_max=float(vs.max()),
                      source=BoxSource.GROUND_TRUTH)
    return raw.clamped(intr.width, intr.height)


def render_depth(vehicles: Sequence[VehicleState], pose: CameraPose,
                 intr: CameraIntrinsics) -> DepthImage:
    """Paint each vehicle's projected box with its centroid range,
    far to near, over a no-return background."""
    raster = np.full((intr.height, intr.width), np.inf)
    ranged = []
    for v in vehicles:
        box = project_cuboid(v, pose, intr)
        if box is None:
            continue
        ranged.append((world_to_camera(v.position, pose).norm(), box))
    ranged.sort(key=lambda rb: rb[0], reverse=True)
    for rng_m, box in ranged:
        c0 = int(math.floor(box.x_min))
        c1 = int(math.ceil(box.x_max))
        r0 = int(math.floor(box.y_min))
        r1 = int(math.ceil(box.y_max))
        raster[r0:r1, c0:c1] = rng_m
    return DepthImage(raster)


def perturb_detections(gt: Sequence[BoundingBox], *, drop_prob: float,
                       box_jitter_sigma: float, merge_prob: float,
                       seed, image_width: int,
                       image_height: int) -> list[BoundingBox]:
    """Degrade ground-truth boxes into detector-like output.

    Each box is independently dropped, the survivors get i.i.d. Gaussian
    jitter on every coordinate (then re-ordered and re-clamped), and
    overlapping pairs may be fused into their union box, mimicking a
    detector that cannot separate overlapped vehicles.
    """
    rng = np.random.default_rng(seed)

    jittered: list[BoundingBox] = []
    for box in gt:
        if rng.random() < drop_prob:
            continue
        dx0, dy0, dx1, dy1 = rng.normal(0.0, box_jitter_sigma, 4)
        x0, x1 = sorted((box.x_min + dx0, box.x_max + dx1))
        y0, y1 = sorted((box.y_min + dy0, box.y_max + dy1))
        moved = BoundingBox(x_min=x0, y_min=y0, x_max=x1, y_max=y1,
                            class_id=box.class_id, source=BoxSource.DETECTOR,
                            score=box.score)
        clamped = moved.clamped(image_width, image_height)
        if clamped is not None:
            jittered.append(clamped)

    consumed = [False] * len(jittered)
    out: list[BoundingBox] = []
    for i, a in enumerate(jittered):
        if consumed[i]:
            continue
        merged = a
        for j in range(i + 1, len(jittered)):
            if consumed[j]:
                continue
            b = jittered[j]
            overlaps = (min(merged.x_max, b.x_max) > max(merged.x_min, b.x_min)
                        and min(merged.y_max, b.y_max) > max(merged.y_min, b.y_min))
            if overlaps and rng.random() < merge_prob:
                merged = merged.union(b)
                consumed[j] = True
        out.append(merged)
    return out


def twin_snapshot(tracks: Sequence[VehicleTrack], t: float, *,
                  twin_latency: float, gnss_sigma: float,
                  seed) -> list[TwinRecord]:
    """Cloud records as the ego would receive them at time t: truth
    sampled one latency ago, blurred per-axis by the GNSS error."""
    rng = np.random.default_rng(seed)
    t_report = t - twin_latency
    t_sample = max(0.0, t_report)
    records = []
    for trk in tracks:
        state = trk.state_at(t_sample)
        noise = rng.normal(0.0, gnss_sigma, 3)
        pos = WorldPoint(state.position.x + noise[0],
                         state.position.y + noise[1],
                         state.position.z + noise[2])
        records.append(TwinRecord(
            vehicle_id=state.id,
            report_time=t_report,
            position=pos,
            speed=state.speed,
            driver_type=state.driver_type,
        ))
    return records


def build_frame(timeline: Timeline, config: ScenarioConfig, index: int) -> Frame:
    """Assemble one complete frame from the timeline. Pure per index."""
    t = timeline.time(index)
    states = timeline.states_at(index)
    ego = states[timeline.ego_index]
    pose = camera_pose_for(ego, config.camera_mount)
    others = [s for s in states if s.id != ego.id]

    gt_boxes: dict[int, BoundingBox] = {}
    for s in others:
        box = project_cuboid(s, pose, config.intrinsics)
        if box is not None:
            gt_boxes[s.id] = box

    depth = render_depth(others, pose, config.intrinsics)
    ordered_ids = sorted(gt_boxes)
    detections = perturb_detections(
        [gt_boxes[i] for i in ordered_ids],
        drop_prob=config.drop_prob,
        box_jitter_sigma=config.box_jitter_sigma,
        merge_prob=config.merge_prob,
        seed=[config.seed, 1, index],
        image_width=config.intrinsics.width,
        image_height=config.intrinsics.height,
    )
    other_tracks = [trk for k, trk in enumerate(timeline.tracks)
                    if k != timeline.ego_index]
    twin = twin_snapshot(other_tracks, t,
                         twin_latency=config.twin_latency,
                         gnss_sigma=config.gnss_sigma,
                         seed=[config.seed, 2, index])

    return Frame(
        index=index,
        timestamp=t,
        ego_pose=pose,
        intrinsics=config.intrinsics,
        vehicles=tuple(states),
        gt_boxes=gt_boxes,
        depth=depth,
        detections=tuple(detections),
        twin=tuple(twin),
    )


def simulate(config: ScenarioConfig) -> Iterator[Frame]:
    """Yield every frame of a scenario in order.

    A generator so long runs can stream to disk without holding every
    depth raster in memory at once.
    """
    timeline = generate_scenario(config)
    for index in range(timeline.n_frames):
        yield build_frame(timeline, config, index)
