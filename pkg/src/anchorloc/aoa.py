"""Single-shot 3D localization from one H and one V radar detection."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .config import FilterConfig, Polarization
from .exceptions import DomainError, PairingError
from .geometry import SphericalFix, spherical_to_point, wrap_angle
from .spectrum import range_from_beat


@dataclass(frozen=True)
class RadarDetection:
    radar_id: Polarization
    timestamp: float
    range: float
    angle: float
    snr: float
    delta_phi: float
    channel_ranges: tuple = (math.nan, math.nan)
    frame_index: int = -1
    # diagnostics from the mismatched-polarization band (nan when absent)
    mismatched_snr: float = math.nan
    mismatched_power_ratio: float = math.nan

    @property
    def range_diff(self):
        return abs(self.channel_ranges[0] - self.channel_ranges[1])


@dataclass(frozen=True)
class Fix3D:
    timestamp: float
    point: np.ndarray
    spherical: SphericalFix
    quality: float
    detections: tuple = field(default=(), repr=False, compare=False)


def angle_from_phase(delta_phi, d, wavelength):
    """Angle of arrival from the inter-channel phase difference.

    ``delta_phi`` is wrapped to (-pi, pi] first. With ``d < wavelength / 2``
    some phases map to a sine beyond 1; those raise :class:`DomainError`.
    """
    dphi = wrap_angle(delta_phi)
    s = dphi * wavelength / (2.0 * math.pi * d)
    if abs(s) > 1.0 + 1e-12:
        raise DomainError(f"|sin(angle)| = {abs(s):.6g} > 1 for rx_spacing {d:g} m")
    return math.asin(max(-1.0, min(1.0, s)))


def detect(pairs, radar, timestamp, radar_id=None, frame_index=-1):
    """Combine the two RX channels' peak pairs into one radar detection.

    The phase difference is taken between the complex FFT values at the
    upper-sideband peak, ``arg(ch0 * conj(ch1))``.
    """
    p0, p1 = pairs
    r0 = range_from_beat(p0.f_beat, radar.chirp_slope)
    r1 = range_from_beat(p1.f_beat, radar.chirp_slope)
    dphi = float(np.angle(p0.upper_value * np.conj(p1.upper_value)))
    return RadarDetection(
        radar_id=Polarization(radar_id if radar_id is not None else radar.polarization),
        timestamp=float(timestamp),
        range=0.5 * (r0 + r1),
        angle=angle_from_phase(dphi, radar.rx_spacing, radar.carrier_wavelength),
        snr=min(p0.snr, p1.snr),
        delta_phi=dphi,
        channel_ranges=(r0, r1),
        frame_index=frame_index,
    )


def combine(h, v, max_pairing_gap=math.inf):
    """Merge an azimuth (H) and an elevation (V) detection into a 3D fix."""
    gap = abs(h.timestamp - v.timestamp)
    if gap > max_pairing_gap:
        raise PairingError(f"detections {gap:.4g} s apart exceed max_pairing_gap={max_pairing_gap:g} s")
    s = SphericalFix(0.5 * (h.range + v.range), h.angle, v.angle)
    return Fix3D(
        timestamp=0.5 * (h.timestamp + v.timestamp),
        point=spherical_to_point(s),
        spherical=s,
        quality=min(h.snr, v.snr),
        detections=(h, v),
    )


def filter_outliers(detections, cfg=FilterConfig()):
    """Drop low-SNR detections and those whose RX channels disagree on range.

    A detection is kept when ``snr >= cfg.snr_threshold``; equality passes.
    Returns the kept detections in input order and a Counter of drop reasons
    (``LowSNR``, ``RangeMismatch``).
    """
    kept, drops = [], Counter()
    for det in detections:
        if det.snr < cfg.snr_threshold:
            drops["LowSNR"] += 1
        elif det.range_diff > cfg.max_rx_range_diff:
            drops["RangeMismatch"] += 1
        else:
            kept.append(det)
    return kept, drops


def pair_detections(h_dets, v_dets, max_gap):
    """Match H and V detections closest in time, each used at most once.

    Candidate pairs within ``max_gap`` are taken greedily in order of
    increasing gap. Returns the pairs sorted by H timestamp and the number
    of detections left unpaired.
    """
    h_t = np.array([d.timestamp for d in h_dets])
    v_t = np.array([d.timestamp for d in v_dets])
    cands = []
    if h_t.size and v_t.size:
        order = np.argsort(v_t, kind="stable")
        vs = v_t[order]
        for i, t in enumerate(h_t):
            lo = np.searchsorted(vs, t - max_gap, side="left")
            hi = np.searchsorted(vs, t + max_gap, side="right")
            for j in order[lo:hi]:
                cands.append((abs(t - v_t[j]), i, int(j)))
    cands.sort()
    used_h, used_v, pairs = set(), set(), []
    for _, i, j in cands:
        if i in used_h or j in used_v:
            continue
        used_h.add(i)
        used_v.add(j)
        pairs.append((h_dets[i], v_dets[j]))
    pairs.sort(key=lambda p: p[0].timestamp)
    unpaired = len(h_dets) + len(v_dets) - 2 * len(pairs)
    return pairs, unpaired
