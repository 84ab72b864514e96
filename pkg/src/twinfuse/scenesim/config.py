"""Scenario configuration: road layout, traffic, camera, and noise knobs.

The world frame is X forward along the road, Y left, Z up; lane ``i`` is
centered at ``i * lane_width``.  All randomness in a scenario derives
from ``seed``, so identical configs reproduce identical scenarios.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..errors import ConfigInvalid
from ..geometry import CameraIntrinsics

DEFAULT_VEHICLE_DIMS = (4.6, 1.9, 1.5)


@dataclass(frozen=True)
class CameraMount:
    """Camera position relative to the ego centroid, in the vehicle frame
    (forward, left, up), meters.  The camera looks along the vehicle's
    heading."""

    forward: float = 1.2
    left: float = 0.0
    up: float = 0.85

    def to_dict(self) -> dict:
        return {"forward": self.forward, "left": self.left, "up": self.up}

    @classmethod
    def from_dict(cls, d: dict) -> "CameraMount":
        return cls(**d)


@dataclass(frozen=True)
class LaneChange:
    """One lateral maneuver: vehicle ``vehicle`` ramps sinusoidally from
    its current lane to ``target_lane`` over [start, start + duration]."""

    vehicle: int
    start: float
    duration: float
    target_lane: int

    def to_dict(self) -> dict:
        return {"vehicle": self.vehicle, "start": self.start,
                "duration": self.duration, "target_lane": self.target_lane}

    @classmethod
    def from_dict(cls, d: dict) -> "LaneChange":
        return cls(vehicle=int(d["vehicle"]), start=float(d["start"]),
                   duration=float(d["duration"]),
                   target_lane=int(d["target_lane"]))


@dataclass(frozen=True)
class VehiclePlacement:
    """Explicit initial condition for one vehicle.

    ``offset`` is the longitudinal position at t=0 relative to the ego
    start, meters (the ego's own offset is conventionally 0).
    """

    lane: int
    offset: float
    speed: float
    dims: tuple[float, float, float] = DEFAULT_VEHICLE_DIMS
    driver_type: str = "normal"

    def to_dict(self) -> dict:
        return {"lane": self.lane, "offset": self.offset, "speed": self.speed,
                "dims": list(self.dims), "driver_type": self.driver_type}

    @classmethod
    def from_dict(cls, d: dict) -> "VehiclePlacement":
        return cls(lane=int(d["lane"]), offset=float(d["offset"]),
                   speed=float(d["speed"]),
                   dims=tuple(d.get("dims", DEFAULT_VEHICLE_DIMS)),
                   driver_type=d.get("driver_type", "normal"))


def _default_intrinsics() -> CameraIntrinsics:
    # 640x480, ~1000 px focal length: a compact desk-scale camera.
    return CameraIntrinsics(f=0.01, dx=1e-5, dy=1e-5, u0=320.0, v0=240.0,
                            width=640, height=480)


@dataclass(frozen=True)
class ScenarioConfig:
    lanes: int = 5
    lane_width: float = 3.5
    n_vehicles: int = 6
    ego_index: int = 0
    camera_mount: CameraMount = field(default_factory=CameraMount)
    intrinsics: CameraIntrinsics = field(default_factory=_default_intrinsics)
    duration: float = 30.0
    frame_rate: float = 10.0
    gnss_sigma: float = 0.0
    box_jitter_sigma: float = 0.0
    drop_prob: float = 0.0
    merge_prob: float = 0.0
    overlap_injection: int = 0
    twin_latency: float = 0.0
    seed: int = 0
    base_speed: float = 25.0
    vehicle_dims: tuple[float, float, float] = DEFAULT_VEHICLE_DIMS
    vehicles: tuple[VehiclePlacement, ...] | None = None
    lane_changes: tuple[LaneChange, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "vehicle_dims", tuple(self.vehicle_dims))
        if self.vehicles is not None:
            object.__setattr__(self, "vehicles", tuple(self.vehicles))
        object.__setattr__(self, "lane_changes", tuple(self.lane_changes))
        self.validate()

    def validate(self) -> None:
        """Raise ConfigInvalid naming the first violated field."""
        if self.lanes < 1:
            raise ConfigInvalid("lanes", f"must be >= 1, got {self.lanes}")
        if self.lane_width <= 0:
            raise ConfigInvalid("lane_width", f"must be > 0, got {self.lane_width}")
        if self.n_vehicles < 1:
            raise ConfigInvalid("n_vehicles", f"must be >= 1, got {self.n_vehicles}")
        if not 0 <= self.ego_index < self.n_vehicles:
            raise ConfigInvalid("ego_index",
                                f"must index into {self.n_vehicles} vehicles, "
                                f"got {self.ego_index}")
        if self.duration <= 0:
            raise ConfigInvalid("duration", f"must be > 0, got {self.duration}")
        if self.frame_rate <= 0:
            raise ConfigInvalid("frame_rate", f"must be > 0, got {self.frame_rate}")
        if self.gnss_sigma < 0:
            raise ConfigInvalid("gnss_sigma", f"must be >= 0, got {self.gnss_sigma}")
        if self.box_jitter_sigma < 0:
            raise ConfigInvalid("box_jitter_sigma",
                                f"must be >= 0, got {self.box_jitter_sigma}")
        for name in ("drop_prob", "merge_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ConfigInvalid(name, f"must be in [0, 1], got {p}")
        if self.overlap_injection < 0:
            raise ConfigInvalid("overlap_injection",
                                f"must be >= 0, got {self.overlap_injection}")
        if self.vehicles is None and self.n_vehicles < 1 + 2 * self.overlap_injection:
            raise ConfigInvalid("n_vehicles",
                                f"{self.overlap_injection} overlap pair(s) need "
                                f"{1 + 2 * self.overlap_injection} vehicles, "
                                f"got {self.n_vehicles}")
        if self.twin_latency < 0:
            raise ConfigInvalid("twin_latency",
                                f"must be >= 0, got {self.twin_latency}")
        if self.seed < 0:
            raise ConfigInvalid("seed", f"must be >= 0, got {self.seed}")
        if self.base_speed <= 0:
            raise ConfigInvalid("base_speed", f"must be > 0, got {self.base_speed}")
        if any(d <= 0 for d in self.vehicle_dims) or len(self.vehicle_dims) != 3:
            raise ConfigInvalid("vehicle_dims",
                                f"must be three positive extents, got {self.vehicle_dims}")
        if self.vehicles is not None:
            if len(self.vehicles) != self.n_vehicles:
                raise ConfigInvalid("vehicles",
                                    f"explicit placements ({len(self.vehicles)}) must "
                                    f"match n_vehicles ({self.n_vehicles})")
            for i, p in enumerate(self.vehicles):
                if not 0 <= p.lane < self.lanes:
                    raise ConfigInvalid("vehicles",
                                        f"placement {i}: lane {p.lane} outside "
                                        f"[0, {self.lanes})")
                if p.speed < 0:
                    raise ConfigInvalid("vehicles",
                                        f"placement {i}: speed must be >= 0")
                if any(d <= 0 for d in p.dims) or len(p.dims) != 3:
                    raise ConfigInvalid("vehicles",
                                        f"placement {i}: dims must be three "
                                        f"positive extents")
        for i, lc in enumerate(self.lane_changes):
            if not 0 <= lc.vehicle < self.n_vehicles:
                raise ConfigInvalid("lane_changes",
                                    f"event {i}: vehicle {lc.vehicle} outside "
                                    f"[0, {self.n_vehicles})")
            if not 0 <= lc.target_lane < self.lanes:
                raise ConfigInvalid("lane_changes",
                                    f"event {i}: target lane {lc.target_lane} "
                                    f"outside [0, {self.lanes})")
            if lc.start < 0 or lc.duration <= 0:
                raise ConfigInvalid("lane_changes",
                                    f"event {i}: needs start >= 0 and duration > 0")

    @property
    def n_frames(self) -> int:
        return max(1, round(self.duration * self.frame_rate))

    def frame_time(self, index: int) -> float:
        return index / self.frame_rate

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return replace(self, seed=seed)

    def to_dict(self) -> dict:
        d = {
            "lanes": self.lanes,
            "lane_width": self.lane_width,
            "n_vehicles": self.n_vehicles,
            "ego_index": self.ego_index,
            "camera_mount": self.camera_mount.to_dict(),
            "intrinsics": self.intrinsics.to_dict(),
            "duration": self.duration,
            "frame_rate": self.frame_rate,
            "gnss_sigma": self.gnss_sigma,
            "box_jitter_sigma": self.box_jitter_sigma,
            "drop_prob": self.drop_prob,
            "merge_prob": self.merge_prob,
            "overlap_injection": self.overlap_injection,
            "twin_latency": self.twin_latency,
            "seed": self.seed,
            "base_speed": self.base_speed,
            "vehicle_dims": list(self.vehicle_dims),
            "lane_changes": [lc.to_dict() for lc in self.lane_changes],
        }
        if self.vehicles is not None:
            d["vehicles"] = [p.to_dict() for p in self.vehicles]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        known = {
            "lanes", "lane_width", "n_vehicles", "ego_index", "duration",
            "frame_rate", "gnss_sigma", "box_jitter_sigma", "drop_prob",
            "merge_prob", "overlap_injection", "twin_latency", "seed",
            "base_speed",
        }
        kwargs = {k: d[k] for k in known if k in d}
        if "camera_mount" in d:
            kwargs["camera_mount"] = CameraMount.from_dict(d["camera_mount"])
        if "intrinsics" in d:
            kwargs["intrinsics"] = CameraIntrinsics.from_dict(d["intrinsics"])
        if "vehicle_dims" in d:
            kwargs["vehicle_dims"] = tuple(d["vehicle_dims"])
        if d.get("vehicles") is not None:
            kwargs["vehicles"] = tuple(VehiclePlacement.from_dict(p)
                                       for p in d["vehicles"])
        if "lane_changes" in d:
            kwargs["lane_changes"] = tuple(LaneChange.from_dict(lc)
                                           for lc in d["lane_changes"])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigInvalid("config", str(exc)) from exc
