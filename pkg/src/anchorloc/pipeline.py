"""End-to-end localization as a scikit-learn style estimator.

``fit`` learns the IMU/radar clock offset from the log (when a yaw maneuver
is present); ``predict`` turns every measurement instant into a 6DoF pose::

    frames -> spectra -> peak pairs -> detections -> SNR/range filter
           -> H/V pairing -> 3D fix -> IMU attitude -> fused pose
"""
from __future__ import annotations

import dataclasses
import math
import weakref
from collections import Counter

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .aoa import combine, detect, filter_outliers, pair_detections
from .config import FilterConfig, Polarization, default_bands
from .exceptions import AmbiguousDetection, CalibrationFailed, ConfigurationError, ExtrapolationError, NoDetection
from .fusion import ImuTrack, calibrate_offset, fuse, interpolate_attitude
from .geometry import rot_z, rotation_to_euler
from .spectrum import compute_spectrum, find_peak_pair
from .validation import check_frame, check_log

_CALIBRATE_MODES = (True, False, "auto")


class SingleAnchorLocalizer(BaseEstimator):
    """Localize a drone against one dual-polarization backscatter anchor.

    Parameters
    ----------
    snr_threshold : float
        Detections with SNR below this are dropped (equality is kept).
    max_rx_range_diff : float
        Largest allowed range disagreement between the two RX channels (m).
    max_pairing_gap : float or None
        Largest H/V timestamp gap for pairing. ``None`` uses 1.5 chirp
        periods estimated from the log.
    guard_bins : int
        Bins excluded on each side of both peaks in the SNR noise sum.
    symmetry_tol_bins : float
        Allowed offset of a peak pair's midpoint from the modulation tone.
    apply_filter : bool
        Disable to keep every detection (used to measure filter efficacy).
    calibrate : {True, False, "auto"}
        Estimate the clock offset in ``fit``. ``"auto"`` falls back to
        ``clock_offset`` when the log has no usable yaw maneuver.
    calibration_window : float
        Half-width of the lag search (s).
    clock_offset : float
        IMU-minus-radar clock offset used when not calibrating (s).
    anchor_yaw : float
        Yaw of the anchor frame relative to the IMU world frame (rad).
    """

    def __init__(
        self,
        snr_threshold=4.0,
        max_rx_range_diff=0.5,
        max_pairing_gap=None,
        guard_bins=3,
        symmetry_tol_bins=2.0,
        apply_filter=True,
        calibrate="auto",
        calibration_window=1.0,
        clock_offset=0.0,
        anchor_yaw=0.0,
    ):
        self.snr_threshold = snr_threshold
        self.max_rx_range_diff = max_rx_range_diff
        self.max_pairing_gap = max_pairing_gap
        self.guard_bins = guard_bins
        self.symmetry_tol_bins = symmetry_tol_bins
        self.apply_filter = apply_filter
        self.calibrate = calibrate
        self.calibration_window = calibration_window
        self.clock_offset = clock_offset
        self.anchor_yaw = anchor_yaw

    def _check_params(self):
        if self.calibrate not in _CALIBRATE_MODES:
            raise ConfigurationError(f"calibrate must be one of {_CALIBRATE_MODES}")
        FilterConfig(self.snr_threshold, self.max_rx_range_diff, self.max_pairing_gap or 1.0).validate()

    def _setup(self, log):
        self._check_params()
        self.radars_ = log.radars
        self.anchor_ = log.anchor
        self.bands_ = default_bands(self.anchor_, guard_bins=self.guard_bins, snr_threshold=self.snr_threshold)
        if self.bands_[Polarization.H].overlaps(self.bands_[Polarization.V]):
            raise ConfigurationError("anchor search bands overlap")

    def detect_frames(self, log, radar_id):
        """Unfiltered detections for one radar plus per-reason failure counts."""
        pol = Polarization(radar_id)
        radar = self.radars_[pol]
        matched = self.bands_[pol]
        other = self.bands_[Polarization.V if pol is Polarization.H else Polarization.H]
        dets, fails = [], Counter()
        for frame in log.frames_for(pol):
            check_frame(frame)
            spectra = compute_spectrum(frame)
            try:
                pairs = tuple(
                    find_peak_pair(s, matched, matched.center, symmetry_tol_bins=self.symmetry_tol_bins)
                    for s in spectra
                )
            except NoDetection:
                fails["NoDetection"] += 1
                continue
            except AmbiguousDetection:
                fails["AmbiguousDetection"] += 1
                continue
            det = detect(pairs, radar, frame.timestamp, pol, frame.frame_index)
            try:
                res = find_peak_pair(spectra[0], other, other.center, symmetry_tol_bins=self.symmetry_tol_bins)
                det = dataclasses.replace(
                    det, mismatched_snr=res.snr, mismatched_power_ratio=res.peak_power / pairs[0].peak_power
                )
            except (NoDetection, AmbiguousDetection):
                det = dataclasses.replace(det, mismatched_power_ratio=0.0)
            dets.append(det)
        return dets, fails

    def _all_detections(self, log):
        cache = getattr(self, "_det_cache", None)
        if cache is not None and cache[0]() is log:
            return cache[1]
        out = {pol: self.detect_frames(log, pol) for pol in Polarization}
        self._det_cache = (weakref.ref(log), out)
        return out

    def fit(self, log, y=None):
        check_log(log)
        self._setup(log)
        self.calibration_ = None
        self.clock_offset_ = float(self.clock_offset)
        if self.calibrate:
            h_dets, _ = self._all_detections(log)[Polarization.H]
            try:
                self.calibration_ = calibrate_offset(log.imu, h_dets, window=self.calibration_window)
                self.clock_offset_ = self.calibration_.offset
            except CalibrationFailed:
                if self.calibrate != "auto":
                    raise
        return self

    def _pairing_gap(self, log):
        if self.max_pairing_gap is not None:
            return float(self.max_pairing_gap)
        t = np.array([f.timestamp for f in log.frames_for(Polarization.H)])
        if t.size >= 2:
            return 1.5 * float(np.median(np.diff(t)))
        return FilterConfig().max_pairing_gap

    def predict(self, log):
        """List of :class:`~anchorloc.fusion.Pose6DoF`, one per surviving shot.

        Per-stage counts are left in ``stats_`` and the 3D fixes in ``fixes_``.
        """
        check_is_fitted(self, "clock_offset_")
        check_log(log)
        dets = self._all_detections(log)
        stats = Counter()
        kept = {}
        cfg = FilterConfig(self.snr_threshold, self.max_rx_range_diff, self._pairing_gap(log))
        for pol in Polarization:
            d, fails = dets[pol]
            stats[f"frames_{pol.value}"] = len(log.frames_for(pol))
            stats.update(fails)
            stats[f"detections_{pol.value}"] = len(d)
            if self.apply_filter:
                d, drops = filter_outliers(d, cfg)
                stats.update(drops)
            kept[pol] = d
        pairs, unpaired = pair_detections(kept[Polarization.H], kept[Polarization.V], cfg.max_pairing_gap)
        stats["Unpaired"] += unpaired

        imu = ImuTrack.from_samples(log.imu) if log.imu else None
        R_dw_a = None if self.anchor_yaw == 0 else rot_z(self.anchor_yaw)
        fixes, poses = [], []
        for h, v in pairs:
            fix = combine(h, v, cfg.max_pairing_gap)
            fixes.append(fix)
            if imu is None:
                stats["AttitudeUnavailable"] += 1
                continue
            try:
                att = interpolate_attitude(imu, fix.timestamp + self.clock_offset_)
            except ExtrapolationError:
                stats["AttitudeUnavailable"] += 1
                continue
            poses.append(fuse(fix, att, R_dw_a))
        stats["fixes"] = len(fixes)
        stats["poses"] = len(poses)
        self.fixes_ = fixes
        self.stats_ = dict(stats)
        self.detections_ = {pol: dets[pol][0] for pol in Polarization}
        return poses

    def fit_predict(self, log, y=None):
        return self.fit(log).predict(log)

    def transform(self, log):
        """Poses as an ``(n, 8)`` array: t, x, y, z, roll, pitch, yaw (rad), quality."""
        poses = self.predict(log)
        return poses_to_array(poses)


def poses_to_array(poses):
    rows = [(p.timestamp, *p.position, *rotation_to_euler(p.attitude), p.quality) for p in poses]
    return np.array(rows, dtype=float).reshape(-1, 8)


def run_pipeline(log, **params):
    """Fit and apply :class:`SingleAnchorLocalizer`; returns ``(poses, stats)``."""
    est = SingleAnchorLocalizer(**params)
    if not log.frames:
        check_log(log)
        return [], {"poses": 0, "fixes": 0}
    poses = est.fit_predict(log)
    stats = dict(est.stats_)
    if est.calibration_ is not None:
        stats["clock_offset"] = est.calibration_.offset
        stats["calibration_confidence"] = est.calibration_.confidence
    return poses, stats


def interference_summary(detections):
    """Median mismatched-band diagnostics over a detection list (nan if empty)."""
    ratio = [d.mismatched_power_ratio for d in detections if not math.isnan(d.mismatched_power_ratio)]
    snr = [d.mismatched_snr for d in detections if not math.isnan(d.mismatched_snr)]
    return {
        "mismatched_power_ratio": float(np.median(ratio)) if ratio else math.nan,
        "mismatched_snr": float(np.median(snr)) if snr else math.nan,
    }
