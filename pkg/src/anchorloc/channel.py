"""FMCW backscatter forward model: dechirped two-channel baseband frames.

Each anchor antenna set ``j`` (1 = horizontal at ``f1_mod``, 2 = vertical at
``f2_mod``) contributes a sideband pair at ``f_j +/- f_beat`` with
``f_beat = 2 k r / c``: the real dechirped beat up-shifted by the anchor's
switch modulation. Square-wave harmonics are omitted.

Both sidebands travel the same RF path back to the radar, so RX channel
``n`` lags channel 0 by ``n * 2 pi d sin(alpha) / lambda`` on both, where
``alpha`` is the anchor azimuth (H radar) or elevation (V radar) in the
flight frame.

Paths with a polarization mismatch lose ``cross_pol_isolation`` dB of
power. A radar's own chirp through the mismatched antenna set has one
mismatch. So does the other radar's chirp through either set. The
cross-radar return is dechirped against a chirp that started
``crosstalk_delay`` seconds apart, which shifts it by ``k * delay``. If that
pushes it past Nyquist, the IF filter removes it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import SPEED_OF_LIGHT, AoaAxis, Polarization
from .fusion import ImuSample, Pose6DoF
from .geometry import EulerAngles, anchor_in_flight_frame, euler_to_rotation, rotation_to_euler
from .scenario import SCHEMA_VERSION, GroundTruthTrack, MeasurementLog

_RADAR_CODE = {Polarization.H: 0, Polarization.V: 1}


@dataclass(frozen=True)
class BasebandFrame:
    radar_id: Polarization
    timestamp: float
    rx: np.ndarray  # (2, samples_per_frame) complex128
    sample_rate: float
    frame_index: int = 0
    in_view: bool = True


def noise_stream(seed, frame_index, radar_id):
    """Independent generator per (seed, frame, radar)."""
    code = _RADAR_CODE[Polarization(radar_id)]
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(frame_index), code]))


def _aoa(q, axis):
    r = float(np.linalg.norm(q))
    if axis is AoaAxis.AZIMUTH:
        return math.atan2(q[0], q[1])
    return math.asin(max(-1.0, min(1.0, q[2] / r)))


def _sideband_pair(tau, f_mod, f_beat, phase_mod, phase_beat):
    upper = np.exp(1j * (2 * np.pi * (f_mod + f_beat) * tau + phase_mod + phase_beat))
    lower = np.exp(1j * (2 * np.pi * (f_mod - f_beat) * tau + phase_mod - phase_beat))
    return upper + lower


def simulate_frame(drone_pose, radar, anchor, noise, t, frame_index=0, crosstalk_delay=None):
    """Synthesize one radar's dechirped frame at time ``t``.

    ``drone_pose`` is a :class:`~anchorloc.fusion.Pose6DoF` (position
    p_drone^a, attitude R_df^a). When the anchor is behind the radar
    (``y <= 0`` in the flight frame) the frame holds noise only and
    ``in_view`` is False.
    """
    pol = Polarization(radar.polarization)
    n = radar.samples_per_frame
    tau = np.arange(n) / radar.sample_rate
    rx = np.zeros((2, n), dtype=complex)

    q = anchor_in_flight_frame(drone_pose.position, drone_pose.attitude, anchor.position)
    r = float(np.linalg.norm(q))
    in_view = bool(q[1] > 0 and r > 0)
    if in_view:
        alpha = _aoa(q, radar.aoa_axis)
        psi = 2 * np.pi * radar.rx_spacing * math.sin(alpha) / radar.carrier_wavelength
        steer = np.exp(-1j * psi * np.arange(2))[:, None]
        gain = anchor.reflection_gain * (1.0 / r**2 if anchor.path_loss else 1.0)
        f_beat = 2 * radar.chirp_slope * r / SPEED_OF_LIGHT
        phase_beat = -4 * np.pi * r / radar.carrier_wavelength
        m = anchor.mismatch_amplitude
        sig = np.zeros(n, dtype=complex)
        for set_pol in (Polarization.H, Polarization.V):
            f_mod = anchor.modulation(set_pol)
            phase_mod = 2 * np.pi * f_mod * t
            amp = gain * (1.0 if set_pol is pol else m)
            if amp:
                sig += amp * _sideband_pair(tau, f_mod, f_beat, phase_mod, phase_beat)
            if crosstalk_delay is not None and m:
                fx = f_beat + radar.chirp_slope * crosstalk_delay
                if abs(f_mod) + abs(fx) < radar.sample_rate / 2:
                    sig += gain * m * _sideband_pair(tau, f_mod, fx, phase_mod, phase_beat)
        rx += steer * sig

    if noise.noise_power > 0:
        rng = noise_stream(noise.seed, frame_index, pol)
        sd = math.sqrt(noise.noise_power / 2.0)
        rx += sd * (rng.standard_normal((2, n)) + 1j * rng.standard_normal((2, n)))
    return BasebandFrame(pol, float(t), rx, float(radar.sample_rate), int(frame_index), in_view)


def chirp_times(scn, rng):
    """Jittered chirp start times for the H and V radars.

    Both radars chirp at the same nominal rate; V trails H by a tenth of a
    period, so each V chirp has one clear H partner while the two never share
    a timestamp.
    """
    period = 1.0 / scn.chirp_rate
    count = int(math.floor(scn.duration * scn.chirp_rate + 1e-9))
    jitter_cap = 0.04 * period
    out = {}
    for pol, start in ((Polarization.H, 0.25 * period), (Polarization.V, 0.35 * period)):
        j = np.clip(rng.normal(0.0, scn.chirp_jitter, count), -jitter_cap, jitter_cap) if scn.chirp_jitter else 0.0
        out[pol] = start + np.arange(count) * period + j
    return out


def _truth(scn, t):
    pos = scn.trajectory.positions(t, scn.duration)
    att = scn.trajectory.attitudes(t)
    return pos, att


def simulate_scenario(scn):
    """Run the forward model over a whole scenario; deterministic in ``scn.seed``."""
    scn.validate()
    timing_rng = np.random.default_rng(np.random.SeedSequence([int(scn.seed), 0x7131]))
    imu_rng = np.random.default_rng(np.random.SeedSequence([int(scn.seed), 0x1A0]))
    noise = scn.noise_model()
    times = chirp_times(scn, timing_rng)

    frames = []
    other = {Polarization.H: Polarization.V, Polarization.V: Polarization.H}
    for pol in (Polarization.H, Polarization.V):
        radar = scn.radars[pol]
        ts = times[pol]
        pos, att = _truth(scn, ts)
        others = times[other[pol]]
        for i, t in enumerate(ts):
            delay = None
            if scn.crosstalk and others.size:
                delay = float(t - others[np.argmin(np.abs(others - t))])
            pose = Pose6DoF(float(t), pos[i], euler_to_rotation(att[i]))
            frames.append(simulate_frame(pose, radar, scn.anchor, noise, t, i, crosstalk_delay=delay))
    frames.sort(key=lambda f: (f.timestamp, f.radar_id.value))

    n_imu = int(math.floor(scn.duration * scn.imu_rate + 1e-9)) + 1
    t_imu = np.arange(n_imu) / scn.imu_rate
    att = scn.trajectory.attitudes(t_imu)
    R_dw_a = scn.anchor_rotation
    if R_dw_a is not None:
        att = np.array([tuple(rotation_to_euler(R_dw_a.T @ euler_to_rotation(e))) for e in att])
    if scn.imu_noise > 0:
        att = att + imu_rng.normal(0.0, math.radians(scn.imu_noise), att.shape)
    imu = [ImuSample(float(t + scn.imu_clock_offset), EulerAngles(*map(float, a))) for t, a in zip(t_imu, att)]

    tt = scn.truth_times()
    tp, ta = _truth(scn, tt)
    header = {
        "schema_version": SCHEMA_VERSION,
        "seed": int(scn.seed),
        "radars": scn.radars.to_dict(),
        "anchor": scn.anchor.to_dict(),
        "noise_power": float(scn.noise_power),
        "scenario": scn.to_dict(),
    }
    return MeasurementLog(header, frames, imu, GroundTruthTrack(tt, tp, ta))
