"""RF-IMU fusion: clock-offset calibration, attitude interpolation, pose fusion."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import CalibrationFailed, ExtrapolationError
from .geometry import EulerAngles, euler_to_rotation, wrap_angle


@dataclass(frozen=True)
class ImuSample:
    timestamp: float
    attitude: EulerAngles


@dataclass(frozen=True)
class Pose6DoF:
    """Drone pose in the anchor frame: ``position`` is p_drone^a and
    ``attitude`` is R_df^a."""

    timestamp: float
    position: np.ndarray
    attitude: np.ndarray
    quality: float = math.nan


@dataclass(frozen=True)
class ClockOffset:
    """IMU clock minus radar clock, with the peak correlation that found it."""

    offset: float
    confidence: float
    grid_step: float = math.nan


class ImuTrack:
    """Array view of an IMU stream (timestamps strictly increasing)."""

    def __init__(self, times, angles):
        self.times = np.asarray(times, dtype=float)
        self.angles = np.asarray(angles, dtype=float).reshape(-1, 3)
        if self.times.size != self.angles.shape[0]:
            raise ValueError("times and angles must have the same length")
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("IMU timestamps must be strictly increasing")

    @classmethod
    def from_samples(cls, samples):
        if isinstance(samples, cls):
            return samples
        samples = list(samples)
        return cls([s.timestamp for s in samples], [tuple(s.attitude) for s in samples])

    def __len__(self):
        return self.times.size

    def shifted(self, dt):
        return ImuTrack(self.times + dt, self.angles)

    @property
    def span(self):
        return float(self.times[0]), float(self.times[-1])


def interpolate_attitude(imu, t):
    """Euler angles at time ``t`` (IMU clock), per-angle shortest-arc linear.

    Exact at sample times. Raises :class:`ExtrapolationError` outside the
    stream span.
    """
    track = ImuTrack.from_samples(imu)
    if len(track) == 0 or not track.times[0] <= t <= track.times[-1]:
        raise ExtrapolationError(f"t={t} outside IMU span")
    i = int(np.searchsorted(track.times, t, side="left"))
    if track.times[i] == t:
        return EulerAngles(*map(float, track.angles[i]))
    t0, t1 = track.times[i - 1], track.times[i]
    a0, a1 = track.angles[i - 1], track.angles[i]
    u = (t - t0) / (t1 - t0)
    a = wrap_angle(a0 + u * wrap_angle(a1 - a0))
    return EulerAngles(*map(float, a))


def fuse(fix, attitude, anchor_rotation=None):
    """6DoF pose from an anchor fix in the flight frame and the IMU attitude.

    ``anchor_rotation`` is R_dw^a (identity when the IMU world frame is
    aligned with the anchor frame).
    """
    R_df_dw = euler_to_rotation(attitude)
    p_anch_dw = R_df_dw @ np.asarray(fix.point, dtype=float)
    if anchor_rotation is None:
        return Pose6DoF(fix.timestamp, -p_anch_dw, R_df_dw, fix.quality)
    R_dw_a = np.asarray(anchor_rotation, dtype=float)
    return Pose6DoF(fix.timestamp, -(R_dw_a @ p_anch_dw), R_dw_a @ R_df_dw, fix.quality)


def _rates(times, values):
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    dt = np.diff(times)
    ok = dt > 0
    mid = 0.5 * (times[1:] + times[:-1])
    return mid[ok], (np.diff(values)[ok] / dt[ok])


def calibrate_offset(imu, detections, window=1.0, grid_step=None, min_confidence=0.5):
    """Find the IMU-minus-radar clock offset from a yaw maneuver.

    The yaw rate from the IMU is cross-correlated with the azimuth rate seen
    by the H radar over lags in ``[-window, window]``. Yawing the drone left
    moves the anchor right in the flight frame, so at the true lag the two
    rates agree in sign and magnitude. The best grid lag is refined by a
    parabola through its neighbours.
    """
    track = ImuTrack.from_samples(imu)
    dets = sorted(detections, key=lambda d: d.timestamp)
    if len(track) < 3 or len(dets) < 3:
        raise CalibrationFailed("not enough samples for calibration")
    az_t = np.array([d.timestamp for d in dets])
    az = np.unwrap(np.array([d.angle for d in dets]))
    yaw = np.unwrap(track.angles[:, 2])

    if grid_step is None:
        grid_step = min(np.median(np.diff(track.times)), np.median(np.diff(az_t))) / 4.0
    ty, yaw_rate = _rates(track.times, yaw)
    ta, az_rate = _rates(az_t, az)
    if np.std(yaw_rate) < 1e-6:
        raise CalibrationFailed("no yaw maneuver in the IMU stream")
    if np.std(az_rate) < 1e-6:
        raise CalibrationFailed("no azimuth change in the radar stream")

    # Resample yaw at the shifted radar instants so both rate series go
    # through the same finite difference; differencing at different rates
    # would blur the maneuver corners unevenly and bias the lag.
    dt = np.diff(az_t)
    n_lags = int(round(window / grid_step))
    lags = np.arange(-n_lags, n_lags + 1) * grid_step
    corr = np.full(lags.size, -np.inf)
    min_overlap = max(8, az_rate.size // 4)
    for k, lag in enumerate(lags):
        q = az_t + lag
        inside = (q >= track.times[0]) & (q <= track.times[-1])
        ok = inside[1:] & inside[:-1] & (dt > 0)
        if ok.sum() < min_overlap:
            continue
        y = np.interp(q, track.times, yaw)
        a = (np.diff(az)[ok] / dt[ok])
        b = (np.diff(y)[ok] / dt[ok])
        sa, sb = a.std(), b.std()
        if sa == 0 or sb == 0:
            continue
        corr[k] = float(np.mean((a - a.mean()) * (b - b.mean())) / (sa * sb))
    k = int(np.argmax(corr))
    best = corr[k]
    if not np.isfinite(best) or best < min_confidence:
        raise CalibrationFailed(f"peak correlation {best:.3f} below {min_confidence}")
    offset = float(lags[k])
    if 0 < k < lags.size - 1 and np.all(np.isfinite(corr[k - 1 : k + 2])):
        c0, c1, c2 = corr[k - 1 : k + 2]
        denom = c0 - 2 * c1 + c2
        if denom < 0:
            offset += float(np.clip(0.5 * (c0 - c2) / denom, -0.5, 0.5)) * grid_step
    return ClockOffset(offset=offset, confidence=float(best), grid_step=float(grid_step))
