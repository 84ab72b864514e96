"""Vehicle kinematics on a straight multi-lane road.

Vehicles keep constant longitudinal speed and hold their lane except
during explicitly scheduled lane changes, which follow a sinusoidal
lateral ramp (smooth position and rate at both ends).  Trajectories are
closed-form in time, so any instant can be queried without integration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..errors import ConfigInvalid
from ..geometry import WorldPoint
from .config import LaneChange, ScenarioConfig, VehiclePlacement


class DriverType(str, Enum):
    AGGRESSIVE = "aggressive"
    NORMAL = "normal"
    CONSERVATIVE = "conservative"


def lane_center(lane: int, lane_width: float) -> float:
    """Lateral (leftward) coordinate of a lane's centerline."""
    return lane * lane_width


@dataclass(frozen=True)
class VehicleState:
    """One vehicle at one instant.

    ``position`` is the cuboid centroid; ``heading`` is measured in the
    world ground plane (0 = along the road); ``speed`` is the velocity
    magnitude along the heading.  ``dims`` is (length, width, height).
    """

    id: int
    position: WorldPoint
    heading: float
    speed: float
    dims: tuple[float, float, float]
    driver_type: DriverType = DriverType.NORMAL

    def __post_init__(self):
        if len(self.dims) != 3 or any(d <= 0 for d in self.dims):
            raise ValueError(f"dims must be three positive extents, got {self.dims}")
        if self.speed < 0:
            raise ValueError(f"speed must be >= 0, got {self.speed}")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "position": [self.position.x, self.position.y, self.position.z],
            "heading": self.heading,
            "speed": self.speed,
            "dims": list(self.dims),
            "driver_type": self.driver_type.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VehicleState":
        return cls(
            id=int(d["id"]),
            position=WorldPoint(*d["position"]),
            heading=float(d["heading"]),
            speed=float(d["speed"]),
            dims=tuple(d["dims"]),
            driver_type=DriverType(d["driver_type"]),
        )


@dataclass(frozen=True)
class _Maneuver:
    start: float
    duration: float
    from_y: float
    to_y: float

    @property
    def end(self) -> float:
        return self.start + self.duration


@dataclass(frozen=True)
class VehicleTrack:
    """Closed-form trajectory of one vehicle.

    ``x0`` is the longitudinal position at t=0 and ``lane0`` the starting
    lane.  ``maneuvers`` must be time-sorted and non-overlapping; they are
    precompiled from LaneChange events by :func:`generate_scenario`.
    """

    vehicle_id: int
    x0: float
    speed: float
    lane0: int
    dims: tuple[float, float, float]
    driver_type: DriverType
    lane_width: float
    maneuvers: tuple[_Maneuver, ...] = ()

    def _lateral(self, t: float) -> tuple[float, float]:
        """Return (y, dy/dt) at time t."""
        y = lane_center(self.lane0, self.lane_width)
        for m in self.maneuvers:
            if t >= m.end:
                y = m.to_y
            elif t > m.start:
                tau = (t - m.start) / m.duration
                delta = m.to_y - m.from_y
                y = m.from_y + delta * (1.0 - math.cos(math.pi * tau)) / 2.0
                rate = delta * math.pi * math.sin(math.pi * tau) / (2.0 * m.duration)
                return y, rate
            else:
                break
        return y, 0.0

    def state_at(self, t: float) -> VehicleState:
        y, vy = self._lateral(t)
        x = self.x0 + self.speed * t
        heading = math.atan2(vy, self.speed) if (vy or self.speed) else 0.0
        return VehicleState(
            id=self.vehicle_id,
            position=WorldPoint(x, y, self.dims[2] / 2.0),
            heading=heading,
            speed=math.hypot(self.speed, vy),
            dims=self.dims,
            driver_type=self.driver_type,
        )


@dataclass(frozen=True)
class Timeline:
    """All vehicle tracks plus the frame clock of one scenario."""

    tracks: tuple[VehicleTrack, ...]
    frame_rate: float
    n_frames: int
    ego_index: int

    def time(self, index: int) -> float:
        return index / self.frame_rate

    def states_at(self, index: int) -> list[VehicleState]:
        t = self.time(index)
        return [trk.state_at(t) for trk in self.tracks]

    @property
    def ego_track(self) -> VehicleTrack:
        return self.tracks[self.ego_index]

    def track(self, vehicle_id: int) -> VehicleTrack:
        for trk in self.tracks:
            if trk.vehicle_id == vehicle_id:
                return trk
        raise KeyError(f"no track for vehicle {vehicle_id}")


def _compile_maneuvers(track_specs: list[VehiclePlacement],
                       events: tuple[LaneChange, ...],
                       lane_width: float) -> list[tuple[_Maneuver, ...]]:
    """Turn per-config LaneChange events into per-vehicle maneuver chains.

    Each vehicle's events are sorted by start time; the lateral origin of
    each ramp is wherever the previous one left the vehicle.
    """
    per_vehicle: list[list[_Maneuver]] = [[] for _ in track_specs]
    by_vehicle: dict[int, list[LaneChange]] = {}
    for ev in events:
        by_vehicle.setdefault(ev.vehicle, []).append(ev)
    for vid, evs in by_vehicle.items():
        evs.sort(key=lambda e: e.start)
        current_y = lane_center(track_specs[vid].lane, lane_width)
        prev_end = -math.inf
        for ev in evs:
            if ev.start < prev_end:
                raise ConfigInvalid(
                    "lane_changes",
                    f"vehicle {vid} has overlapping maneuvers at t={ev.start}")
            to_y = lane_center(ev.target_lane, lane_width)
            per_vehicle[vid].append(
                _Maneuver(start=ev.start, duration=ev.duration,
                          from_y=current_y, to_y=to_y))
            current_y = to_y
            prev_end = ev.start + ev.duration
    return [tuple(ms) for ms in per_vehicle]


def _procedural_placements(config: ScenarioConfig) -> list[VehiclePlacement]:
    """Lay out traffic around the ego when no explicit placement is given.

    The ego drives the middle lane at base speed.  Each injected overlap
    pair straddles it: a near vehicle one lane over at range L and a far
    one two lanes over at roughly 2L, so both sit at nearly the same
    bearing from the camera.  The far vehicle gets a small speed offset
    so the alignment drifts through exact collinearity during the run.
    Remaining vehicles are background traffic placed where they cannot
    shadow the pairs (behind the ego or far ahead).
    """
    rng = np.random.default_rng([config.seed, 0])
    ego_lane = config.lanes // 2
    placements: list[VehiclePlacement | None] = [None] * config.n_vehicles
    slots = [i for i in range(config.n_vehicles) if i != config.ego_index]

    placements[config.ego_index] = VehiclePlacement(
        lane=ego_lane, offset=0.0, speed=config.base_speed,
        dims=config.vehicle_dims)

    for k in range(config.overlap_injection):
        side = 1 if k % 2 == 0 else -1
        near_lane = ego_lane + side
        far_lane = ego_lane + 2 * side
        if not (0 <= near_lane < config.lanes and 0 <= far_lane < config.lanes):
            # Road too narrow for the staggered layout: stack the pair in
            # the ego's own lane, where the bearings coincide exactly.
            near_lane = far_lane = ego_lane
        near_gap = 18.0 + 8.0 * k
        far_bias = rng.uniform(-9.0, -5.0)
        drift = 0.30 + 0.10 * rng.random()
        near = VehiclePlacement(
            lane=near_lane, offset=near_gap, speed=config.base_speed,
            dims=config.vehicle_dims)
        far = VehiclePlacement(
            lane=far_lane, offset=2.0 * near_gap + far_bias,
            speed=config.base_speed + drift, dims=config.vehicle_dims)
        placements[slots.pop(0)] = near
        placements[slots.pop(0)] = far

    for j, slot in enumerate(slots):
        lane = int(rng.integers(0, config.lanes))
        if j % 2 == 0:
            offset = float(rng.uniform(-80.0, -15.0))
        else:
            offset = float(rng.uniform(120.0, 200.0))
        speed = config.base_speed + float(rng.uniform(-3.0, 3.0))
        kind = DriverType(rng.choice([d.value for d in DriverType]))
        placements[slot] = VehiclePlacement(
            lane=lane, offset=offset, speed=max(0.0, speed),
            dims=config.vehicle_dims, driver_type=kind.value)

    return [p for p in placements if p is not None]


def generate_scenario(config: ScenarioConfig) -> Timeline:
    """Build the deterministic kinematic timeline for a scenario."""
    config.validate()
    specs = (list(config.vehicles) if config.vehicles is not None
             else _procedural_placements(config))
    maneuvers = _compile_maneuvers(specs, config.lane_changes, config.lane_width)

    tracks = []
    for i, spec in enumerate(specs):
        try:
            kind = DriverType(spec.driver_type)
        except ValueError:
            raise ConfigInvalid(
                "vehicles",
                f"placement {i}: unknown driver type {spec.driver_type!r}") from None
        tracks.append(VehicleTrack(
            vehicle_id=i,
            x0=spec.offset,
            speed=spec.speed,
            lane0=spec.lane,
            dims=tuple(spec.dims),
            driver_type=kind,
            lane_width=config.lane_width,
            maneuvers=maneuvers[i],
        ))

    return Timeline(tracks=tuple(tracks), frame_rate=config.frame_rate,
                    n_frames=config.n_frames, ego_index=config.ego_index)
