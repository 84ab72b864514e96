"""Evaluation metrics and the scripted advisory-braking experiment.

Box matching is scored with IoU-threshold accuracy curves; driving
comfort and safety are scored with speed variance and time-to-collision
over ego trajectory logs.  The scripted experiment replaces a
human-in-the-loop study: a deterministic ego policy reacts to a cut-in
either at its normal reaction delay or earlier by an advisory lead time,
and the two resulting logs are compared.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .errors import ConfigInvalid, EmptyInput, NoEvent
from .fusion import BoundingBox, MatchOutcome
from .scenesim.config import ScenarioConfig
from .scenesim.world import Timeline, generate_scenario

#: TTC values above this are ignored when averaging; a nearly-open road
#: would otherwise dominate the mean.
TTC_CAP = 20.0

TRAJECTORY_HEADER = ("t", "ego_speed", "gap_to_lead", "lead_speed")


@dataclass(frozen=True)
class EvalRecord:
    """Outcome of one matching query plus its score against ground truth.

    ``iou_with_truth`` is 0 when the matcher abstained or the target had
    no ground-truth box that frame.
    """

    frame: int
    mode: Literal["baseline", "fused"]
    outcome: MatchOutcome
    iou_with_truth: float

    def __post_init__(self):
        if self.mode not in ("baseline", "fused"):
            raise ValueError(f"mode must be 'baseline' or 'fused', got {self.mode!r}")
        if not 0.0 <= self.iou_with_truth <= 1.0:
            raise ValueError(f"iou must be in [0, 1], got {self.iou_with_truth}")


@dataclass(frozen=True)
class TrajectoryLog:
    """Ego-centric time series: timestamps, ego speed, bumper gap to the
    lead vehicle, and the lead's speed."""

    t: np.ndarray
    ego_speed: np.ndarray
    gap_to_lead: np.ndarray
    lead_speed: np.ndarray

    def __post_init__(self):
        arrays = {}
        n = None
        for name in ("t", "ego_speed", "gap_to_lead", "lead_speed"):
            a = np.asarray(getattr(self, name), dtype=float)
            if a.ndim != 1:
                raise ValueError(f"{name} must be 1-D, got shape {a.shape}")
            if n is None:
                n = a.size
            elif a.size != n:
                raise ValueError(f"column lengths differ: {name} has {a.size}, "
                                 f"expected {n}")
            a = a.copy()
            a.flags.writeable = False
            arrays[name] = a
        if n and np.any(np.diff(arrays["t"]) <= 0):
            raise ValueError("timestamps must be strictly increasing")
        if n and np.any(arrays["gap_to_lead"] < 0):
            raise ValueError("gap_to_lead must be >= 0")
        for name, a in arrays.items():
            object.__setattr__(self, name, a)

    def __len__(self) -> int:
        return self.t.size

    def save_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRAJECTORY_HEADER)
            for row in zip(self.t, self.ego_speed, self.gap_to_lead,
                           self.lead_speed):
                writer.writerow([repr(float(v)) for v in row])

    @classmethod
    def load_csv(cls, path) -> "TrajectoryLog":
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != list(TRAJECTORY_HEADER):
                raise ValueError(f"unexpected header {header!r} in {path}")
            cols = ([], [], [], [])
            for row in reader:
                if not row:
                    continue
                for col, value in zip(cols, row):
                    col.append(float(value))
        return cls(*cols)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection-over-union of two boxes; 0 when disjoint."""
    ix = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    iy = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if ix <= 0.0 or iy <= 0.0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


def accuracy_at(records: Sequence[EvalRecord], tau: float) -> float:
    """Fraction of records whose IoU against truth reaches ``tau``.

    Unmatched records stay in the denominator and fail every threshold.
    """
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must be in (0, 1], got {tau}")
    if not records:
        raise EmptyInput("no evaluation records")
    hits = sum(1 for r in records if r.iou_with_truth >= tau)
    return hits / len(records)


def accuracy_curve(records: Sequence[EvalRecord],
                   taus: Sequence[float]) -> list[tuple[float, float]]:
    """Accuracy at each threshold; non-increasing in tau by construction."""
    if len(taus) == 0:
        raise ValueError("taus must be non-empty")
    if any(b <= a for a, b in zip(taus, taus[1:])):
        raise ValueError(f"taus must be strictly ascending, got {list(taus)}")
    return [(float(tau), accuracy_at(records, tau)) for tau in taus]


def speed_variance(log: TrajectoryLog) -> float:
    """Population variance of the ego speed over the whole log."""
    if len(log) == 0:
        raise EmptyInput("trajectory log has no rows")
    return float(np.var(log.ego_speed))


def ttc_series(log: TrajectoryLog) -> list[tuple[float, float | None]]:
    """Per-row time-to-collision: gap over closing speed while the ego is
    closing on the lead; None when not closing."""
    if len(log) == 0:
        raise EmptyInput("trajectory log has no rows")
    out: list[tuple[float, float | None]] = []
    for t, v_e, gap, v_l in zip(log.t, log.ego_speed, log.gap_to_lead,
                                log.lead_speed):
        closing = v_e - v_l
        out.append((float(t), float(gap / closing) if closing > 0 else None))
    return out


def average_ttc(log: TrajectoryLog, cap: float = TTC_CAP) -> float | None:
    """Mean TTC over rows where it is defined and at most ``cap`` seconds;
    None when no row qualifies."""
    values = [ttc for _, ttc in ttc_series(log) if ttc is not None and ttc <= cap]
    return float(np.mean(values)) if values else None


def min_ttc(log: TrajectoryLog) -> float | None:
    """Smallest defined TTC in the log; None when the ego never closes."""
    values = [ttc for _, ttc in ttc_series(log) if ttc is not None]
    return min(values) if values else None


@dataclass(frozen=True)
class PolicyParams:
    """Knobs of the scripted ego policy.

    After braking starts the ego decelerates at ``comfort_decel``; if TTC
    ever falls under ``panic_ttc`` it slams ``hard_decel`` and deliberately
    undershoots the lead's speed by ``dip_speed`` before recovering at
    ``recovery_accel`` — the overshoot a startled late reaction produces.
    """

    reaction_delay: float = 2.5
    comfort_decel: float = 2.0
    hard_decel: float = 6.0
    panic_ttc: float = 2.0
    dip_speed: float = 3.0
    recovery_accel: float = 1.0
    dt: float = 0.02

    def __post_init__(self):
        for name in ("reaction_delay",):
            if getattr(self, name) < 0:
                raise ConfigInvalid(name, f"must be >= 0, got {getattr(self, name)}")
        for name in ("comfort_decel", "hard_decel", "recovery_accel",
                     "panic_ttc", "dt"):
            if getattr(self, name) <= 0:
                raise ConfigInvalid(name, f"must be > 0, got {getattr(self, name)}")
        if self.dip_speed < 0:
            raise ConfigInvalid("dip_speed", f"must be >= 0, got {self.dip_speed}")


def _find_cut_in(config: ScenarioConfig, timeline: Timeline):
    """Locate the first lane change that puts another vehicle into the
    ego's lane ahead of it; returns (cutter track, time the cutter crosses
    the lane boundary)."""
    ego = timeline.ego_track
    events = sorted(config.lane_changes, key=lambda e: e.start)
    for ev in events:
        if ev.vehicle == timeline.ego_index or ev.target_lane != ego.lane0:
            continue
        t_cross = ev.start + ev.duration / 2.0
        cutter = timeline.tracks[ev.vehicle]
        ahead = (cutter.x0 + cutter.speed * t_cross
                 > ego.x0 + ego.speed * t_cross)
        if ahead:
            return cutter, t_cross
    raise NoEvent("scenario has no lane change cutting in ahead of the ego")


def _run_policy(ego_x0: float, ego_v0: float, ego_len: float,
                lead_x0: float, lead_v: float, lead_len: float,
                t_brake: float, duration: float,
                params: PolicyParams) -> TrajectoryLog:
    """Integrate the scripted ego response and log every step."""
    dt = params.dt
    n = max(1, int(round(duration / dt)))
    offset = (ego_len + lead_len) / 2.0

    ts = np.empty(n)
    speeds = np.empty(n)
    gaps = np.empty(n)
    leads = np.empty(n)

    x_e, v_e = ego_x0, ego_v0
    panicked = False
    recovering = False
    following = False
    for i in range(n):
        t = i * dt
        x_l = lead_x0 + lead_v * t
        gap = max(0.0, x_l - x_e - offset)

        if t < t_brake:
            a = 0.0
        elif following:
            a = 0.0
        elif recovering:
            a = params.recovery_accel
            if v_e >= lead_v:
                v_e = lead_v
                recovering, following = False, True
                a = 0.0
        else:
            closing = v_e - lead_v
            current_ttc = gap / closing if closing > 0 else math.inf
            if current_ttc < params.panic_ttc:
                panicked = True
            if panicked:
                a = -params.hard_decel
                if v_e <= lead_v - params.dip_speed:
                    recovering = True
                    a = params.recovery_accel
            else:
                a = -params.comfort_decel
                if v_e <= lead_v:
                    v_e = lead_v
                    following = True
                    a = 0.0

        ts[i] = t
        speeds[i] = v_e
        gaps[i] = gap
        leads[i] = lead_v

        v_e = max(0.0, v_e + a * dt)
        x_e += v_e * dt

    return TrajectoryLog(ts, speeds, gaps, leads)


def scripted_reaction_experiment(config: ScenarioConfig,
                                 advisory_lead_time: float,
                                 params: PolicyParams = PolicyParams()
                                 ) -> tuple[TrajectoryLog, TrajectoryLog]:
    """Run the scripted ego twice against the scenario's cut-in.

    Without an advisory the ego starts braking ``reaction_delay`` seconds
    after the cutter crosses into its lane; with one it starts
    ``advisory_lead_time`` seconds earlier.  Returns
    (no-advisory log, advisory log) over the same scenario.

    Raises:
        NoEvent: the scenario contains no cut-in ahead of the ego.
    """
    if advisory_lead_time < 0:
        raise ConfigInvalid("advisory_lead_time",
                            f"must be >= 0, got {advisory_lead_time}")
    timeline = generate_scenario(config)
    cutter, t_cross = _find_cut_in(config, timeline)
    ego = timeline.ego_track

    def run(lead_time: float) -> TrajectoryLog:
        t_brake = max(0.0, t_cross + params.reaction_delay - lead_time)
        return _run_policy(
            ego_x0=ego.x0, ego_v0=ego.speed, ego_len=ego.dims[0],
            lead_x0=cutter.x0, lead_v=cutter.speed, lead_len=cutter.dims[0],
            t_brake=t_brake, duration=config.duration, params=params)

    return run(0.0), run(advisory_lead_time)
