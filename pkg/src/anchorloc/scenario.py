"""Simulation scenarios, trajectories, ground truth and the measurement log.

Scenario files use degrees for every attitude angle; everything in memory is
radians. Drone positions are in the anchor frame, and the anchor faces -y,
so a hovering drone sits at negative y looking along +y.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .config import AnchorConfig, NoiseModel, RadarPair, max_unambiguous_range
from .exceptions import ConfigurationError, ExtrapolationError
from .geometry import (
    EulerAngles,
    anchor_in_flight_frame,
    euler_to_rotation,
    rot_z,
    rotation_to_euler,
    wrap_angle,
)

SCHEMA_VERSION = 1
TRAJECTORY_KINDS = ("hover", "line", "circle", "waypoints")


def calibration_maneuver(start=0.0, amplitude=30.0, yaw=0.0):
    """Yaw keyframes (degrees) for a left-right turn usable for clock calibration.

    The uneven segment lengths keep the rate profile from repeating, so its
    autocorrelation has a single peak.
    """
    return [
        [start, 0.0, 0.0, yaw],
        [start + 1.0, 0.0, 0.0, yaw + amplitude],
        [start + 2.6, 0.0, 0.0, yaw - amplitude],
        [start + 4.0, 0.0, 0.0, yaw],
    ]


@dataclass
class Trajectory:
    """Drone position primitive plus attitude keyframes.

    ``kind`` selects the position model:

    * ``hover``: ``position``
    * ``line``: ``start`` to ``end`` over the scenario duration
    * ``circle``: horizontal circle of ``radius`` about ``center`` with ``period``
    * ``waypoints``: ``[[t, x, y, z], ...]``, linear, held at the ends

    ``attitude`` is ``[[t, roll, pitch, yaw], ...]`` in degrees, linear per
    angle and held at the ends.
    """

    kind: str = "hover"
    params: dict = field(default_factory=lambda: {"position": [0.0, -2.0, 0.0]})
    attitude: list = field(default_factory=lambda: [[0.0, 0.0, 0.0, 0.0]])

    def __post_init__(self):
        if self.kind not in TRAJECTORY_KINDS:
            raise ConfigurationError(f"trajectory.kind must be one of {TRAJECTORY_KINDS}, got {self.kind!r}")
        if not self.attitude:
            raise ConfigurationError("trajectory.attitude needs at least one keyframe")

    def positions(self, t, duration):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        p = self.params
        if self.kind == "hover":
            return np.tile(np.asarray(p["position"], dtype=float), (t.size, 1))
        if self.kind == "line":
            a, b = np.asarray(p["start"], float), np.asarray(p["end"], float)
            u = np.clip(t / duration, 0.0, 1.0)[:, None]
            return a + u * (b - a)
        if self.kind == "circle":
            c = np.asarray(p["center"], float)
            ang = 2 * np.pi * t / float(p["period"]) + math.radians(p.get("phase", 0.0))
            r = float(p["radius"])
            return c + np.stack([r * np.cos(ang), r * np.sin(ang), np.zeros_like(ang)], axis=1)
        wp = np.asarray(p["waypoints"], dtype=float)
        return np.stack([np.interp(t, wp[:, 0], wp[:, k]) for k in (1, 2, 3)], axis=1)

    def attitudes(self, t):
        """(n, 3) roll, pitch, yaw in radians."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        kf = np.asarray(self.attitude, dtype=float).reshape(-1, 4)
        out = np.stack([np.interp(t, kf[:, 0], np.radians(kf[:, k])) for k in (1, 2, 3)], axis=1)
        return wrap_angle(out)

    def to_dict(self):
        return {"kind": self.kind, **self.params, "attitude": [list(map(float, k)) for k in self.attitude]}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        kind = d.pop("kind", "hover")
        attitude = d.pop("attitude", [[0.0, 0.0, 0.0, 0.0]])
        if attitude == "maneuver":
            attitude = calibration_maneuver()
        return cls(kind=kind, params=d, attitude=attitude)


@dataclass
class Scenario:
    duration: float = 10.0
    trajectory: Trajectory = field(default_factory=Trajectory)
    radars: RadarPair = field(default_factory=RadarPair)
    anchor: AnchorConfig = field(default_factory=AnchorConfig)
    noise_power: float = 0.0
    chirp_rate: float = 20.0
    chirp_jitter: float = 1e-3
    imu_rate: float = 100.0
    imu_clock_offset: float = 0.0
    imu_noise: float = 0.0  # degrees, per angle
    truth_rate: float = 200.0
    anchor_yaw: float = 0.0  # degrees, yaw of the anchor frame in the IMU world frame
    crosstalk: bool = True
    fov_limit: float = 60.0  # degrees
    min_range: float = 0.3
    seed: int = 0

    def noise_model(self, seed=None):
        return NoiseModel(self.noise_power, self.seed if seed is None else seed)

    @property
    def anchor_rotation(self):
        """R_dw^a; ``None`` when the frames are aligned."""
        return None if self.anchor_yaw == 0 else rot_z(math.radians(self.anchor_yaw))

    def truth_times(self):
        n = int(math.floor(self.duration * self.truth_rate + 1e-9)) + 1
        return np.arange(n) / self.truth_rate

    def violations(self):
        v = []
        for name in ("duration", "chirp_rate", "imu_rate", "truth_rate"):
            if not getattr(self, name) > 0:
                v.append(f"{name} must be > 0")
        if self.chirp_jitter < 0:
            v.append("chirp_jitter must be >= 0")
        if self.noise_power < 0:
            v.append("noise_power must be >= 0")
        for key in ("H", "V"):
            v += [f"radars.{key}: {m}" for m in self.radars[key].violations()]
        if v:
            return v

        t = self.truth_times()
        pos = self.trajectory.positions(t, self.duration)
        att = self.trajectory.attitudes(t)
        if not np.all(np.isfinite(pos)):
            v.append("trajectory: positions must be finite")
            return v
        ranges, bad_fov = [], 0
        lim = math.radians(self.fov_limit)
        for p, e in zip(pos, att):
            q = anchor_in_flight_frame(p, euler_to_rotation(e))
            r = float(np.linalg.norm(q))
            ranges.append(r)
            if q[1] <= 0 or r == 0:
                bad_fov += 1
                continue
            if abs(math.atan2(q[0], q[1])) > lim or abs(math.asin(q[2] / r)) > lim:
                bad_fov += 1
        if bad_fov:
            v.append(f"trajectory: {bad_fov} samples leave the {self.fov_limit:g} deg field-of-view cone")
        r_max = max(ranges)
        if min(ranges) < self.min_range:
            v.append(f"trajectory: range {min(ranges):.3g} m below min_range {self.min_range:g} m")
        limit = min(max_unambiguous_range(self.radars[k], self.anchor) for k in ("H", "V"))
        if r_max > limit:
            v.append(f"trajectory: range {r_max:.3g} m exceeds the {limit:.3g} m the anchor bands support")
        max_beat = max(self.radars[k].beat_frequency(r_max) for k in ("H", "V"))
        v += [f"anchor: {m}" for m in self.anchor.violations(max_beat)]
        return v

    def validate(self):
        v = self.violations()
        if v:
            raise ConfigurationError(v)
        return self

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        d = {}
        for f in dataclasses.fields(self):
            val = getattr(self, f.name)
            if hasattr(val, "to_dict"):
                val = val.to_dict()
            d[f.name] = val
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError([f"{k}: unknown scenario field" for k in sorted(unknown)])
        kw = {}
        try:
            if "trajectory" in d:
                kw["trajectory"] = Trajectory.from_dict(d.pop("trajectory"))
            if "radars" in d:
                kw["radars"] = RadarPair.from_dict(d.pop("radars"))
            if "anchor" in d:
                kw["anchor"] = AnchorConfig.from_dict(d.pop("anchor"))
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from None
        for k, val in d.items():
            default = getattr(cls(), k)
            if isinstance(default, bool):
                if not isinstance(val, bool):
                    raise ConfigurationError(f"{k}: expected a boolean")
            elif isinstance(default, (int, float)):
                if isinstance(val, bool) or not isinstance(val, (int, float)):
                    raise ConfigurationError(f"{k}: expected a number, got {val!r}")
                val = type(default)(val) if isinstance(default, float) else int(val)
            kw[k] = val
        return cls(**kw)


class GroundTruthTrack:
    """Dense truth poses: timestamps, anchor-frame positions and Euler angles."""

    def __init__(self, times, positions, angles):
        self.times = np.asarray(times, dtype=float)
        self.positions = np.asarray(positions, dtype=float).reshape(-1, 3)
        self.angles = np.asarray(angles, dtype=float).reshape(-1, 3)
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("ground-truth timestamps must be strictly increasing")

    def __len__(self):
        return self.times.size

    def covers(self, t):
        return len(self) > 0 and self.times[0] <= t <= self.times[-1]

    def at(self, t):
        """Linearly interpolated position and shortest-arc Euler angles at ``t``."""
        if not self.covers(t):
            raise ExtrapolationError(f"t={t} outside ground-truth span")
        i = int(np.searchsorted(self.times, t, side="left"))
        if self.times[i] == t:
            return self.positions[i].copy(), EulerAngles(*map(float, self.angles[i]))
        t0, t1 = self.times[i - 1], self.times[i]
        u = (t - t0) / (t1 - t0)
        p = self.positions[i - 1] + u * (self.positions[i] - self.positions[i - 1])
        a0 = self.angles[i - 1]
        a = wrap_angle(a0 + u * wrap_angle(self.angles[i] - a0))
        return p, EulerAngles(*map(float, a))

    def translated(self, offset):
        return GroundTruthTrack(self.times, self.positions + np.asarray(offset, float), self.angles)

    @classmethod
    def from_poses(cls, poses):
        poses = list(poses)
        return cls(
            [p.timestamp for p in poses],
            [p.position for p in poses],
            [tuple(rotation_to_euler(p.attitude)) for p in poses],
        )


@dataclass
class MeasurementLog:
    """Everything one simulated flight produced.

    ``header`` holds ``schema_version``, the radar/anchor configs and the
    seed; ``frames`` are :class:`~anchorloc.channel.BasebandFrame` objects
    for both radars, ``imu`` the IMU samples (IMU clock) and ``truth`` the
    dense ground truth.
    """

    header: dict
    frames: list = field(default_factory=list)
    imu: list = field(default_factory=list)
    truth: GroundTruthTrack = field(default_factory=lambda: GroundTruthTrack([], [], []))

    @property
    def radars(self):
        return RadarPair.from_dict(self.header.get("radars", {}))

    @property
    def anchor(self):
        return AnchorConfig.from_dict(self.header.get("anchor", {}))

    def frames_for(self, radar_id):
        return [f for f in self.frames if f.radar_id.value == str(getattr(radar_id, "value", radar_id))]
