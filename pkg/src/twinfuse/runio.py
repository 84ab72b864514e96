"""On-disk run format.

A run directory holds one scenario's complete sensor record::

    scenario.json        echo of the generating configuration
    frames/000000.json   per-frame metadata (pose, truth, boxes, twin)
    frames/000000.dpt    depth raster for the same frame
    frames/000001.json   ...

Frame files are dense from 000000.  Metadata is JSON with sorted keys so
regenerating a run with the same seed reproduces identical bytes; depth
is a small binary format (magic ``DPT1``, little-endian u32 width and
height, then width*height little-endian float32 ranges, row-major, +inf
for no-return pixels).
"""

from __future__ import annotations

import json
import os
import re
import struct
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .errors import RunDirectoryError
from .fusion import BoundingBox, BoxSource, DepthImage
from .geometry import CameraIntrinsics, CameraPose
from .scenesim.config import ScenarioConfig
from .scenesim.sensors import Frame, TwinRecord
from .scenesim.world import VehicleState

DEPTH_MAGIC = b"DPT1"
_FRAME_NAME = re.compile(r"^(\d{6})\.json$")


def write_depth(img: DepthImage, path) -> None:
    """Serialize a depth raster; float64 ranges are narrowed to float32."""
    header = DEPTH_MAGIC + struct.pack("<II", img.width, img.height)
    payload = np.ascontiguousarray(img.ranges, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_depth(path) -> DepthImage:
    """Load a depth raster file.

    Raises:
        RunDirectoryError: truncated, mis-sized, or non-raster content.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 12 or blob[:4] != DEPTH_MAGIC:
        raise RunDirectoryError(f"{path}: not a depth raster (bad magic)")
    width, height = struct.unpack("<II", blob[4:12])
    expected = 12 + 4 * width * height
    if len(blob) != expected:
        raise RunDirectoryError(
            f"{path}: expected {expected} bytes for {width}x{height}, "
            f"got {len(blob)}")
    flat = np.frombuffer(blob, dtype="<f4", offset=12)
    try:
        return DepthImage(flat.reshape(height, width).astype(float))
    except ValueError as exc:
        raise RunDirectoryError(f"{path}: {exc}") from exc


def box_to_dict(box: BoundingBox) -> dict:
    d = {"x_min": box.x_min, "y_min": box.y_min,
         "x_max": box.x_max, "y_max": box.y_max,
         "class_id": box.class_id, "source": box.source.value}
    if box.score is not None:
        d["score"] = box.score
    return d


def box_from_dict(d: dict) -> BoundingBox:
    return BoundingBox(
        x_min=float(d["x_min"]), y_min=float(d["y_min"]),
        x_max=float(d["x_max"]), y_max=float(d["y_max"]),
        class_id=int(d.get("class_id", 0)),
        source=BoxSource(d.get("source", BoxSource.DETECTOR.value)),
        score=None if d.get("score") is None else float(d["score"]),
    )


def frame_to_dict(frame: Frame) -> dict:
    return {
        "index": frame.index,
        "timestamp": frame.timestamp,
        "ego_pose": frame.ego_pose.to_dict(),
        "intrinsics": frame.intrinsics.to_dict(),
        "vehicles": [v.to_dict() for v in frame.vehicles],
        "gt_boxes": {str(vid): box_to_dict(b)
                     for vid, b in sorted(frame.gt_boxes.items())},
        "detections": [box_to_dict(b) for b in frame.detections],
        "twin": [r.to_dict() for r in frame.twin],
    }


def frame_from_dict(d: dict, depth: DepthImage | None = None) -> Frame:
    return Frame(
        index=int(d["index"]),
        timestamp=float(d["timestamp"]),
        ego_pose=CameraPose.from_dict(d["ego_pose"]),
        intrinsics=CameraIntrinsics.from_dict(d["intrinsics"]),
        vehicles=tuple(VehicleState.from_dict(v) for v in d["vehicles"]),
        gt_boxes={int(k): box_from_dict(v) for k, v in d["gt_boxes"].items()},
        depth=depth,
        detections=tuple(box_from_dict(b) for b in d["detections"]),
        twin=tuple(TwinRecord.from_dict(r) for r in d["twin"]),
    )


def _dump_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def write_run(config: ScenarioConfig, frames: Iterable[Frame], out_dir) -> int:
    """Write a complete run directory; returns the number of frames written.

    ``frames`` may be a generator — rasters are flushed as they arrive.
    """
    frames_dir = os.path.join(out_dir, "frames")
    os.makedirs(frames_dir, exist_ok=True)
    _dump_json(config.to_dict(), os.path.join(out_dir, "scenario.json"))
    count = 0
    for frame in frames:
        stem = os.path.join(frames_dir, f"{frame.index:06d}")
        _dump_json(frame_to_dict(frame), stem + ".json")
        if frame.depth is None:
            raise ValueError(f"frame {frame.index} has no depth raster to write")
        write_depth(frame.depth, stem + ".dpt")
        count += 1
    return count


@dataclass
class RunReader:
    """Random access over a stored run.

    Depth rasters are only opened when a frame is requested with
    ``with_depth=True``, so distance-free consumers never touch ``.dpt``
    files (and a run whose rasters were deleted still serves them).
    """

    root: str

    def __post_init__(self):
        self.root = os.fspath(self.root)
        scenario_path = os.path.join(self.root, "scenario.json")
        frames_dir = os.path.join(self.root, "frames")
        if not os.path.isfile(scenario_path):
            raise RunDirectoryError(f"{scenario_path}: missing")
        if not os.path.isdir(frames_dir):
            raise RunDirectoryError(f"{frames_dir}: missing")
        try:
            with open(scenario_path, "r", encoding="utf-8") as fh:
                self.config = ScenarioConfig.from_dict(json.load(fh))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise RunDirectoryError(f"{scenario_path}: {exc}") from exc
        indices = []
        for name in os.listdir(frames_dir):
            m = _FRAME_NAME.match(name)
            if m:
                indices.append(int(m.group(1)))
        indices.sort()
        if indices != list(range(len(indices))):
            raise RunDirectoryError(
                f"{frames_dir}: frame files must be dense from 000000, "
                f"found indices {indices[:5]}{'...' if len(indices) > 5 else ''}")
        if not indices:
            raise RunDirectoryError(f"{frames_dir}: no frame files")
        self._frames_dir = frames_dir
        self._n = len(indices)

    @property
    def n_frames(self) -> int:
        return self._n

    def _stem(self, index: int) -> str:
        if not 0 <= index < self._n:
            raise IndexError(f"frame {index} outside [0, {self._n})")
        return os.path.join(self._frames_dir, f"{index:06d}")

    def frame(self, index: int, with_depth: bool = True) -> Frame:
        stem = self._stem(index)
        json_path = stem + ".json"
        try:
            with open(json_path, "r", encoding="utf-8") as fh:
                payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise RunDirectoryError(f"{json_path}: invalid JSON: {exc.msg}") from exc
        depth = None
        if with_depth:
            dpt_path = stem + ".dpt"
            if not os.path.isfile(dpt_path):
                raise RunDirectoryError(f"{dpt_path}: missing")
            depth = read_depth(dpt_path)
        try:
            frame = frame_from_dict(payload, depth=depth)
        except (KeyError, TypeError, ValueError) as exc:
            raise RunDirectoryError(f"{json_path}: {exc}") from exc
        if frame.index != index:
            raise RunDirectoryError(
                f"{json_path}: holds frame {frame.index}, expected {index}")
        return frame

    def frames(self, with_depth: bool = True) -> Iterator[Frame]:
        for i in range(self._n):
            yield self.frame(i, with_depth=with_depth)
