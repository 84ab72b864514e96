"""Target-vehicle matching: depth evaluation over detected boxes and
anchor-based box selection.

Two matchers are provided.  ``baseline_match`` uses only the projected
anchor pixel and resolves multi-box containment by nearest box center.
``match_target`` additionally compares per-box depth estimates against
the range derived from the cloud-reported position and picks the box
with the smallest absolute distance difference.  ``fuse_frame`` runs the
full per-frame pipeline (projection, depth evaluation, matching) in
either mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Literal, Sequence

import numpy as np

from .errors import (
    AllSamplesInvalid,
    BehindCamera,
    DegenerateRegion,
    LengthMismatch,
    UnknownTarget,
)
from .geometry import PixelPoint, gnss_range, project_anchor

if TYPE_CHECKING:  # Frame is duck-typed here to avoid a circular import
    from .scenesim.sensors import Frame

#: Depth-raster value marking pixels with no surface return.
NO_RETURN = math.inf

#: Draws allowed per box, as a multiple of the requested sample count,
#: before sentinel rejection gives up.
RESAMPLE_BUDGET_FACTOR = 10


class BoxSource(str, Enum):
    GROUND_TRUTH = "ground_truth"
    DETECTOR = "detector"


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned 2D box in continuous pixel coordinates.

    ``score`` is carried through from detectors for external tooling but
    never participates in matching.
    """

    x_min: float
    y_min: float
    x_max: float
    y_max: float
    class_id: int = 0
    source: BoxSource = BoxSource.DETECTOR
    score: float | None = None

    def __post_init__(self):
        coords = (self.x_min, self.y_min, self.x_max, self.y_max)
        if not all(math.isfinite(c) for c in coords):
            raise ValueError(f"box coordinates must be finite, got {coords}")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"box must have positive extent, got {coords}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))

    def contains(self, px: PixelPoint) -> bool:
        """Closed-rectangle containment (edges count as inside)."""
        return (self.x_min <= px.u <= self.x_max
                and self.y_min <= px.v <= self.y_max)

    def clamped(self, width: float, height: float) -> "BoundingBox | None":
        """Restrict to the image rectangle; None if nothing remains."""
        x0 = max(self.x_min, 0.0)
        y0 = max(self.y_min, 0.0)
        x1 = min(self.x_max, float(width))
        y1 = min(self.y_max, float(height))
        if x0 >= x1 or y0 >= y1:
            return None
        return BoundingBox(x0, y0, x1, y1, class_id=self.class_id,
                           source=self.source, score=self.score)

    def union(self, other: "BoundingBox") -> "BoundingBox":
        """Smallest box covering both; keeps this box's class and source."""
        return BoundingBox(
            min(self.x_min, other.x_min), min(self.y_min, other.y_min),
            max(self.x_max, other.x_max), max(self.y_max, other.y_max),
            class_id=self.class_id, source=self.source,
        )


@dataclass(frozen=True)
class DepthImage:
    """Per-pixel Euclidean range raster, camera to surface, meters.

    ``ranges`` is (height, width), row-major, float64; pixels with no
    return hold ``NO_RETURN`` (+inf).  Every other value must be finite
    and > 0.
    """

    ranges: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.ranges, dtype=float)
        if r.ndim != 2 or r.size == 0:
            raise ValueError(f"ranges must be a non-empty 2D raster, got shape {r.shape}")
        bad = ~((r > 0.0) & (np.isfinite(r) | np.isposinf(r)))
        if bad.any():
            raise ValueError("depth raster must hold positive finite ranges or +inf")
        r = r.copy()
        r.flags.writeable = False
        object.__setattr__(self, "ranges", r)

    @property
    def width(self) -> int:
        return self.ranges.shape[1]

    @property
    def height(self) -> int:
        return self.ranges.shape[0]

    @classmethod
    def filled(cls, width: int, height: int, value: float = NO_RETURN) -> "DepthImage":
        return cls(np.full((height, width), value, dtype=float))


@dataclass(frozen=True)
class DepthParams:
    """Depth-evaluation knobs: box shrink fraction ``th``, sample count
    ``n``, and the sampling seed."""

    th: float = 0.1
    n: int = 25
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.th < 1.0:
            raise ValueError(f"th must be in (0, 1), got {self.th}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")


@dataclass(frozen=True)
class SampleRegion:
    """Pixel rectangle that depth samples for one box are drawn from."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float


class NoMatchReason(str, Enum):
    ANCHOR_OUTSIDE_ALL = "anchor_outside_all"
    BEHIND_CAMERA = "behind_camera"
    NO_DETECTIONS = "no_detections"


@dataclass(frozen=True)
class MatchOutcome:
    """Result of one matching query.

    Either ``box_index`` is set (with the signed residual ``delta_d``,
    depth estimate minus GNSS range, for the chosen box) or ``reason``
    explains the abstention.
    """

    box_index: int | None = None
    delta_d: float = 0.0
    reason: NoMatchReason | None = None

    @property
    def matched(self) -> bool:
        return self.box_index is not None

    @classmethod
    def hit(cls, box_index: int, delta_d: float) -> "MatchOutcome":
        return cls(box_index=box_index, delta_d=delta_d)

    @classmethod
    def miss(cls, reason: NoMatchReason) -> "MatchOutcome":
        return cls(reason=reason)


def sample_region(box: BoundingBox, th: float, image_w: int,
                  image_h: int) -> SampleRegion:
    """Sampling rectangle for one box: the box scaled about its center by
    (1 - th), restricted to its lowest quarter by height (largest v, i.e.
    the vehicle body near the road), then clamped to the image.

    Raises:
        DegenerateRegion: if clamping leaves an empty rectangle.
    """
    if not 0.0 < th < 1.0:
        raise ValueError(f"th must be in (0, 1), got {th}")
    cx, cy = box.center
    half_w = 0.5 * box.width * (1.0 - th)
    half_h = 0.5 * box.height * (1.0 - th)
    x0, x1 = cx - half_w, cx + half_w
    y1 = cy + half_h
    y0 = y1 - 0.5 * half_h  # lowest quarter of the shrunk height
    x0, x1 = max(x0, 0.0), min(x1, float(image_w))
    y0, y1 = max(y0, 0.0), min(y1, float(image_h))
    if x0 >= x1 or y0 >= y1:
        raise DegenerateRegion(
            f"box {(box.x_min, box.y_min, box.x_max, box.y_max)} leaves no "
            f"sampling area inside a {image_w}x{image_h} image")
    return SampleRegion(x0, y0, x1, y1)


def _box_distance(img: DepthImage, box: BoundingBox, params: DepthParams,
                  rng: np.random.Generator) -> float:
    region = sample_region(box, params.th, img.width, img.height)
    budget = RESAMPLE_BUDGET_FACTOR * params.n
    values: list[float] = []
    drawn = 0
    while len(values) < params.n and drawn < budget:
        k = min(params.n - len(values), budget - drawn)
        us = rng.uniform(region.x_min, region.x_max, size=k)
        vs = rng.uniform(region.y_min, region.y_max, size=k)
        drawn += k
        cols = np.minimum(us.astype(np.int64), img.width - 1)
        rows = np.minimum(vs.astype(np.int64), img.height - 1)
        got = img.ranges[rows, cols]
        values.extend(got[np.isfinite(got)].tolist())
    if len(values) < params.n:
        raise AllSamplesInvalid(
            f"collected {len(values)}/{params.n} valid depth readings after "
            f"{budget} draws; region holds no usable returns")
    return float(np.mean(values))


def depth_evaluate(img: DepthImage, boxes: Sequence[BoundingBox],
                   params: DepthParams, *,
                   on_invalid: Literal["raise", "inf"] = "raise") -> list[float]:
    """Estimate camera-to-vehicle distance for each box by averaging ``n``
    depth readings sampled uniformly at random from the box's sampling
    region.  No-return pixels are rejected and redrawn within a budget of
    ``10 * n`` draws per box.

    Deterministic for fixed inputs: box ``i`` samples from a generator
    seeded with ``(params.seed, i)``, so results do not depend on how the
    box list is batched.

    Args:
        on_invalid: "raise" propagates DegenerateRegion / AllSamplesInvalid;
            "inf" records +inf for the offending box instead, which can
            never win a distance-difference comparison.

    Returns:
        One distance per box, in input order.
    """
    out: list[float] = []
    for i, box in enumerate(boxes):
        rng = np.random.default_rng([params.seed, i])
        try:
            out.append(_box_distance(img, box, params, rng))
        except (DegenerateRegion, AllSamplesInvalid):
            if on_invalid == "raise":
                raise
            out.append(math.inf)
    return out


def anchor_containment(anchor: PixelPoint,
                       boxes: Sequence[BoundingBox]) -> list[int]:
    """Ascending indices of boxes whose closed rectangle contains the anchor."""
    return [i for i, b in enumerate(boxes) if b.contains(anchor)]


def match_target(anchor: PixelPoint, boxes: Sequence[BoundingBox],
                 distances: Sequence[float], d_gnss: float) -> MatchOutcome:
    """Select the target box by anchor containment, breaking multi-box
    containment with the minimum absolute difference between the box's
    depth estimate and the GNSS-derived range (ties: lowest index).

    A single containing box is returned outright, whatever the distances
    say; with none, the matcher abstains rather than guess.

    Raises:
        LengthMismatch: if ``distances`` and ``boxes`` disagree in length.
    """
    if len(distances) != len(boxes):
        raise LengthMismatch(
            f"{len(boxes)} boxes but {len(distances)} distances")
    if d_gnss <= 0.0:
        raise ValueError(f"GNSS range must be > 0, got {d_gnss}")
    containing = anchor_containment(anchor, boxes)
    if not containing:
        return MatchOutcome.miss(NoMatchReason.ANCHOR_OUTSIDE_ALL)
    if len(containing) == 1:
        i = containing[0]
        return MatchOutcome.hit(i, distances[i] - d_gnss)
    best = min(containing, key=lambda j: (abs(distances[j] - d_gnss), j))
    return MatchOutcome.hit(best, distances[best] - d_gnss)


def baseline_match(anchor: PixelPoint,
                   boxes: Sequence[BoundingBox]) -> MatchOutcome:
    """Anchor-only matcher: multi-box containment falls back to the box
    whose center is nearest the anchor (ties: lowest index).  The depth
    residual is undefined here and reported as 0.
    """
    containing = anchor_containment(anchor, boxes)
    if not containing:
        return MatchOutcome.miss(NoMatchReason.ANCHOR_OUTSIDE_ALL)
    if len(containing) == 1:
        return MatchOutcome.hit(containing[0], 0.0)

    def center_dist(j: int) -> float:
        cx, cy = boxes[j].center
        return math.hypot(cx - anchor.u, cy - anchor.v)

    best = min(containing, key=lambda j: (center_dist(j), j))
    return MatchOutcome.hit(best, 0.0)


def fuse_frame(frame: "Frame", target_id: int,
               mode: Literal["baseline", "fused"],
               params: DepthParams = DepthParams()) -> MatchOutcome:
    """Run the full per-frame pipeline for one target vehicle.

    Projects the target's cloud-reported position to its anchor pixel,
    derives the GNSS range from the camera origin, and matches against
    the frame's detections.  Baseline mode never touches the depth
    raster; fused mode runs depth evaluation first and matches on
    distance differences.  Per-box depth failures (off-image or
    no-return-only boxes) are treated as +inf distances rather than
    aborting the frame.

    Raises:
        UnknownTarget: if the frame has no twin record for ``target_id``.
        ValueError: fused mode on a frame without a depth raster.
    """
    if mode not in ("baseline", "fused"):
        raise ValueError(f"mode must be 'baseline' or 'fused', got {mode!r}")
    twin = next((r for r in frame.twin if r.vehicle_id == target_id), None)
    if twin is None:
        raise UnknownTarget(f"no twin record for vehicle {target_id}")
    if not frame.detections:
        return MatchOutcome.miss(NoMatchReason.NO_DETECTIONS)
    try:
        anchor = project_anchor(twin.position, frame.ego_pose, frame.intrinsics)
    except BehindCamera:
        return MatchOutcome.miss(NoMatchReason.BEHIND_CAMERA)
    if mode == "baseline":
        return baseline_match(anchor, frame.detections)
    if frame.depth is None:
        raise ValueError("fused mode requires a frame with a depth raster")
    d_gnss = gnss_range(frame.ego_pose.origin, twin.position)
    distances = depth_evaluate(frame.depth, frame.detections, params,
                               on_invalid="inf")
    return match_target(anchor, frame.detections, distances, d_gnss)
