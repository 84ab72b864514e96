"""Pinhole camera geometry: world/camera transforms and pixel projection.

Conventions
-----------
* Camera frame: X right, Y down, Z forward along the optical axis, so a
  point with positive Z is in front of the lens and maps near the
  principal point.
* ``CameraPose`` stores the camera-to-world transform: ``rotation`` holds
  the camera axes expressed in world coordinates and ``translation`` is
  the camera origin in the world frame.  Projecting a world point
  therefore applies the inverse, ``R.T @ (p - t)``.
* Pixel coordinates are continuous, origin at the image top-left, u
  rightward, v downward.  Projection never clamps to the image
  rectangle; containment is the caller's concern.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BehindCamera, NonPositiveRange

ORTHONORMALITY_TOL = 1e-9


@dataclass(frozen=True)
class WorldPoint:
    """3D point in the world reference frame, meters."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(c) for c in (self.x, self.y, self.z)):
            raise ValueError(f"world point must be finite, got {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)


@dataclass(frozen=True)
class CameraPoint:
    """3D point in the camera frame (X right, Y down, Z forward), meters."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(c) for c in (self.x, self.y, self.z)):
            raise ValueError(f"camera point must be finite, got {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def norm(self) -> float:
        """Euclidean distance from the camera origin."""
        return math.hypot(self.x, self.y, self.z)


@dataclass(frozen=True)
class PixelPoint:
    """Continuous pixel coordinates; may lie outside the image rectangle."""

    u: float
    v: float

    def __post_init__(self):
        if not (math.isfinite(self.u) and math.isfinite(self.v)):
            raise ValueError(f"pixel point must be finite, got {self}")


@dataclass(frozen=True)
class CameraPose:
    """Camera-to-world pose: rotation columns are the camera axes in world
    coordinates, translation is the camera origin in the world frame."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        if r.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got shape {r.shape}")
        if not np.isfinite(r).all() or not np.isfinite(t).all():
            raise ValueError("pose entries must be finite")
        err = np.abs(r.T @ r - np.eye(3)).max()
        if err >= ORTHONORMALITY_TOL:
            raise ValueError(f"rotation not orthonormal (|R'R - I| = {err:.3e})")
        if np.linalg.det(r) < 0.0:
            raise ValueError("rotation must be proper (det +1), got a reflection")
        r = r.copy()
        t = t.copy()
        r.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "CameraPose":
        return cls(np.eye(3), np.zeros(3))

    @property
    def origin(self) -> WorldPoint:
        """Camera origin in the world frame."""
        t = self.translation
        return WorldPoint(float(t[0]), float(t[1]), float(t[2]))

    def to_dict(self) -> dict:
        return {
            "rotation": self.rotation.tolist(),
            "translation": self.translation.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CameraPose":
        return cls(np.array(d["rotation"], dtype=float),
                   np.array(d["translation"], dtype=float))


@dataclass(frozen=True)
class CameraIntrinsics:
    """Internal camera parameters.

    ``f`` is the focal length in meters, ``dx``/``dy`` the physical pixel
    pitch in meters per pixel, ``(u0, v0)`` the principal point in pixels
    and ``width``/``height`` the image size in pixels.
    """

    f: float
    dx: float
    dy: float
    u0: float
    v0: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.f > 0 and self.dx > 0 and self.dy > 0):
            raise ValueError("focal length and pixel pitch must be > 0")
        if self.width < 1 or self.height < 1:
            raise ValueError("image size must be at least 1x1")
        if not (0 <= self.u0 < self.width and 0 <= self.v0 < self.height):
            raise ValueError("principal point must lie inside the image")

    @property
    def fx(self) -> float:
        """Focal length in horizontal pixels (f / dx)."""
        return self.f / self.dx

    @property
    def fy(self) -> float:
        """Focal length in vertical pixels (f / dy)."""
        return self.f / self.dy

    def contains(self, px: PixelPoint) -> bool:
        return 0.0 <= px.u <= self.width and 0.0 <= px.v <= self.height

    def to_dict(self) -> dict:
        return {
            "f": self.f, "dx": self.dx, "dy": self.dy,
            "u0": self.u0, "v0": self.v0,
            "width": self.width, "height": self.height,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CameraIntrinsics":
        return cls(f=d["f"], dx=d["dx"], dy=d["dy"], u0=d["u0"], v0=d["v0"],
                   width=int(d["width"]), height=int(d["height"]))


def world_to_camera(p: WorldPoint, pose: CameraPose) -> CameraPoint:
    """Express a world point in the camera frame: ``R.T @ (p - t)``."""
    v = pose.rotation.T @ (p.as_array() - pose.translation)
    return CameraPoint(float(v[0]), float(v[1]), float(v[2]))


def camera_to_world(p: CameraPoint, pose: CameraPose) -> WorldPoint:
    """Inverse of :func:`world_to_camera`: ``R @ p + t``."""
    v = pose.rotation @ p.as_array() + pose.translation
    return WorldPoint(float(v[0]), float(v[1]), float(v[2]))


def camera_to_pixel(p: CameraPoint, intr: CameraIntrinsics) -> PixelPoint:
    """Project a camera-frame point onto the image plane.

    Raises:
        BehindCamera: if the point is at or behind the image plane
            (z <= 0), where the projection is undefined.
    """
    if p.z <= 0.0:
        raise BehindCamera(f"point at z={p.z} is not in front of the camera")
    return PixelPoint(
        intr.u0 + intr.fx * (p.x / p.z),
        intr.v0 + intr.fy * (p.y / p.z),
    )


def project_anchor(p_world: WorldPoint, pose: CameraPose,
                   intr: CameraIntrinsics) -> PixelPoint:
    """Project a world point (e.g. a GNSS-reported vehicle position) to its
    anchor pixel: the world-to-camera transform followed by the pinhole
    projection.

    Raises:
        BehindCamera: propagated when the point lies behind the camera.
    """
    return camera_to_pixel(world_to_camera(p_world, pose), intr)


def back_project(px: PixelPoint, range_m: float, intr: CameraIntrinsics,
                 pose: CameraPose) -> WorldPoint:
    """Invert the projection: the world point along the ray through ``px``
    at Euclidean distance ``range_m`` from the camera origin.

    Raises:
        NonPositiveRange: if ``range_m`` is not > 0.
    """
    if range_m <= 0.0:
        raise NonPositiveRange(f"range must be > 0, got {range_m}")
    ray = np.array([
        (px.u - intr.u0) / intr.fx,
        (px.v - intr.v0) / intr.fy,
        1.0,
    ])
    cam = ray * (range_m / np.linalg.norm(ray))
    return camera_to_world(CameraPoint(float(cam[0]), float(cam[1]), float(cam[2])), pose)


def gnss_range(ego_camera_origin: WorldPoint, target: WorldPoint) -> float:
    """Euclidean distance between two world points, meters."""
    return math.hypot(target.x - ego_camera_origin.x,
                      target.y - ego_camera_origin.y,
                      target.z - ego_camera_origin.z)
