"""Canonical scenario configurations shipped with the package.

The JSON files under ``configs/`` in the source tree are generated from
these builders (see ``configs/README`` note in the repository); a test
keeps them in sync.
"""

from __future__ import annotations

from .scenesim.config import LaneChange, ScenarioConfig, VehiclePlacement

#: Vehicle id of the matching target in the benchmark and zero-noise
#: scenarios (the near member of the first overlap pair, resp. the lead).
BENCHMARK_TARGET_ID = 1


def benchmark_config() -> ScenarioConfig:
    """Noisy 500-frame highway run with two deliberately ambiguous
    vehicle pairs; the evaluation target is vehicle 1."""
    return ScenarioConfig(
        lanes=5,
        n_vehicles=7,
        ego_index=0,
        duration=50.0,
        frame_rate=10.0,
        gnss_sigma=0.5,
        box_jitter_sigma=3.0,
        drop_prob=0.02,
        merge_prob=0.3,
        overlap_injection=2,
        twin_latency=0.0,
        seed=20260819,
    )


def zero_noise_config() -> ScenarioConfig:
    """Noise- and latency-free run with the target always in view: the
    target leads the ego in its own lane at matched speed."""
    return ScenarioConfig(
        lanes=3,
        n_vehicles=4,
        ego_index=0,
        duration=25.0,
        frame_rate=10.0,
        gnss_sigma=0.0,
        box_jitter_sigma=0.0,
        drop_prob=0.0,
        merge_prob=0.0,
        overlap_injection=0,
        twin_latency=0.0,
        seed=7,
        vehicles=(
            VehiclePlacement(lane=1, offset=0.0, speed=25.0),
            VehiclePlacement(lane=1, offset=18.0, speed=25.0),
            VehiclePlacement(lane=0, offset=30.0, speed=25.0),
            VehiclePlacement(lane=2, offset=-20.0, speed=25.0),
        ),
    )


def default_cutin_config() -> ScenarioConfig:
    """Two-vehicle scenario for the scripted advisory experiment: a
    slower neighbor cuts into the ego's lane 70 m ahead."""
    return ScenarioConfig(
        lanes=3,
        n_vehicles=2,
        ego_index=0,
        duration=30.0,
        frame_rate=10.0,
        seed=0,
        vehicles=(
            VehiclePlacement(lane=1, offset=0.0, speed=27.0),
            VehiclePlacement(lane=2, offset=70.0, speed=21.0),
        ),
        lane_changes=(
            LaneChange(vehicle=1, start=6.0, duration=3.0, target_lane=1),
        ),
    )
