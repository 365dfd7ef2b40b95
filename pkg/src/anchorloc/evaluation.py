"""Error metrics, time binning and Monte-Carlo sweeps.

Percentiles use the nearest-rank definition throughout: the q-th percentile
of ``n`` sorted values is the value at rank ``ceil(q/100 * n)`` (rank 1 for
``q = 0``).
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .config import Polarization
from .exceptions import ConfigurationError
from .geometry import rotation_to_euler, wrap_angle

POSITION_AXES = ("X", "Y", "Z")
ANGLE_AXES = ("roll", "pitch", "yaw")
AXES = POSITION_AXES + ANGLE_AXES + ("3D",)
PERCENTILES = (10, 50, 90)
SWEEP_AXES = ("noise_power", "cross_pol_isolation", "P_thresh")


def percentile(values, q):
    """Nearest-rank percentile of ``values`` for ``q`` in [0, 100]."""
    v = np.sort(np.asarray(values, dtype=float).ravel())
    if v.size == 0:
        raise ValueError("percentile of an empty sequence")
    if not 0 <= q <= 100:
        raise ValueError("q must be in [0, 100]")
    rank = max(1, math.ceil(q / 100.0 * v.size - 1e-9))
    return float(v[rank - 1])


def angle_error_deg(estimate, truth):
    """Absolute wrapped difference in degrees, in [0, 180]."""
    return np.abs(np.degrees(wrap_angle(np.subtract(estimate, truth))))


def cdf_points(errors):
    """``(error, cumulative fraction)`` pairs of the empirical CDF."""
    e = np.sort(np.asarray(errors, dtype=float))
    return [(float(x), (i + 1) / e.size) for i, x in enumerate(e)]


@dataclass
class ErrorReport:
    """Per-shot errors with percentile and time-bin summaries.

    Position errors are metres (absolute, per axis) and attitude errors
    degrees.
    """

    timestamps: np.ndarray
    errors: dict
    n_excluded: int = 0
    time_bins: list = field(default_factory=list)
    drops: dict = field(default_factory=dict)

    @property
    def n_poses(self):
        return int(self.timestamps.size)

    def table(self):
        out = {}
        for axis in AXES:
            e = self.errors[axis]
            out[axis] = {f"p{q}": (percentile(e, q) if e.size else None) for q in PERCENTILES}
        return out

    def to_dict(self, include_cdf=True):
        d = {
            "n_poses": self.n_poses,
            "n_excluded": self.n_excluded,
            "units": {"X": "m", "Y": "m", "Z": "m", "roll": "deg", "pitch": "deg", "yaw": "deg", "3D": "m"},
            "table": self.table(),
            "time_bins": self.time_bins,
            "drops": {k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in self.drops.items()},
        }
        if include_cdf:
            d["cdf_3d"] = cdf_points(self.errors["3D"])
        return d

    @classmethod
    def pooled(cls, reports):
        reports = list(reports)
        ts = np.concatenate([r.timestamps for r in reports]) if reports else np.empty(0)
        errors = {a: np.concatenate([r.errors[a] for r in reports]) if reports else np.empty(0) for a in AXES}
        drops = Counter()
        for r in reports:
            drops.update({k: v for k, v in r.drops.items() if isinstance(v, (int, np.integer))})
        return cls(ts, errors, sum(r.n_excluded for r in reports), [], dict(drops))


def _shot_errors(poses, truth):
    ts, rows, excluded = [], [], 0
    for p in poses:
        if not truth.covers(p.timestamp):
            excluded += 1
            continue
        pos, eul = truth.at(p.timestamp)
        d = np.abs(np.asarray(p.position, float) - pos)
        a = angle_error_deg(tuple(rotation_to_euler(p.attitude)), tuple(eul))
        rows.append((*d, *a, float(np.linalg.norm(np.asarray(p.position, float) - pos))))
        ts.append(p.timestamp)
    arr = np.array(rows, dtype=float).reshape(-1, len(AXES))
    return np.asarray(ts, float), {axis: arr[:, k] for k, axis in enumerate(AXES)}, excluded


def binned_percentiles(times, values, bin_width, start, end=None):
    """Nearest-rank p10/p50/p90 of ``values`` in bins ``[start + k w, start + (k+1) w)``.

    Empty bins are kept as gaps (``n = 0``, percentiles ``None``).
    """
    if not bin_width > 0:
        raise ConfigurationError("bin_width must be > 0")
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if end is None:
        end = float(times.max()) if times.size else start
    n_bins = max(1, math.ceil((end - start) / bin_width - 1e-9))
    k = np.floor((times - start) / bin_width + 1e-12).astype(int)
    k = np.clip(k, 0, n_bins - 1)
    out = []
    for b in range(n_bins):
        sel = values[k == b]
        row = {"t_start": start + b * bin_width, "t_end": start + (b + 1) * bin_width, "n": int(sel.size)}
        for q in PERCENTILES:
            row[f"p{q}"] = percentile(sel, q) if sel.size else None
        out.append(row)
    return out


def evaluate(poses, truth, bin_width=None, drops=None):
    """Compare estimated poses with interpolated ground truth.

    Poses outside the truth span are excluded and counted. With
    ``bin_width`` the 3D error is also binned from the start of the truth.
    """
    ts, errors, excluded = _shot_errors(poses, truth)
    report = ErrorReport(ts, errors, excluded, drops=dict(drops or {}))
    if bin_width is not None and len(truth):
        report.time_bins = binned_percentiles(ts, errors["3D"], bin_width, float(truth.times[0]), float(truth.times[-1]))
    return report


def error_vs_time(poses, truth, bin_width):
    ts, errors, _ = _shot_errors(poses, truth)
    start = float(truth.times[0]) if len(truth) else 0.0
    end = float(truth.times[-1]) if len(truth) else None
    return binned_percentiles(ts, errors["3D"], bin_width, start, end)


def trial_seed(base_seed, trial):
    return int(np.random.SeedSequence([int(base_seed), int(trial)]).generate_state(1)[0])


@dataclass
class SweepPoint:
    value: float
    report: ErrorReport
    diagnostics: dict


@dataclass
class SweepReport:
    axis: str
    points: list

    def summary(self):
        return {
            "axis": self.axis,
            "values": [p.value for p in self.points],
            "median_3d": [p.report.table()["3D"]["p50"] for p in self.points],
            "p90_3d": [p.report.table()["3D"]["p90"] for p in self.points],
            "diagnostics": [p.diagnostics for p in self.points],
        }


def _run_trial(scn, localizer_params):
    from .channel import simulate_scenario
    from .pipeline import SingleAnchorLocalizer, interference_summary

    log = simulate_scenario(scn)
    est = SingleAnchorLocalizer(**localizer_params)
    poses = est.fit_predict(log)
    report = evaluate(poses, log.truth, drops=est.stats_)
    dets = est.detections_[Polarization.H] + est.detections_[Polarization.V]
    shots = min(len(log.frames_for("H")), len(log.frames_for("V")))
    return report, len(poses), shots, interference_summary(dets)


def monte_carlo_sweep(base, axis, values, trials, localizer_params=None):
    """Pool errors over ``trials`` seeded runs for each value of one parameter.

    ``axis`` is ``noise_power``, ``cross_pol_isolation`` (dB) or ``P_thresh``.
    Trial ``i`` uses the seed derived from ``(base.seed, i)`` for every value,
    so values are compared on common random numbers.
    """
    if axis not in SWEEP_AXES:
        raise ConfigurationError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    values = list(values)
    if not values:
        raise ConfigurationError("sweep needs at least one value")
    points = []
    for value in values:
        params = dict(localizer_params or {})
        reports, n_poses, n_shots, interf = [], 0, 0, []
        for trial in range(trials):
            scn = base.replace(seed=trial_seed(base.seed, trial))
            if axis == "noise_power":
                scn = scn.replace(noise_power=float(value))
            elif axis == "cross_pol_isolation":
                scn = scn.replace(anchor=scn.anchor.replace(cross_pol_isolation=float(value)))
            else:
                params["snr_threshold"] = float(value)
            rep, n, shots, diag = _run_trial(scn, params)
            reports.append(rep)
            n_poses += n
            n_shots += shots
            interf.append(diag)
        pooled = ErrorReport.pooled(reports)
        ratios = [d["mismatched_power_ratio"] for d in interf if not math.isnan(d["mismatched_power_ratio"])]
        snrs = [d["mismatched_snr"] for d in interf if not math.isnan(d["mismatched_snr"])]
        diagnostics = {
            "yield": n_poses / n_shots if n_shots else 0.0,
            "mismatched_power_ratio": float(np.mean(ratios)) if ratios else None,
            "mismatched_snr": float(np.mean(snrs)) if snrs else None,
        }
        points.append(SweepPoint(float(value), pooled, diagnostics))
    return SweepReport(axis, points)
