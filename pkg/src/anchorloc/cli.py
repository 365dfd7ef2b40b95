"""``anchorloc`` command-line interface.

Exit codes: 0 success, 2 bad input (parse, validation, schema, sweep spec,
no overlap with truth), 3 empty result (no surviving fixes, failed
calibration).

A run config (``--config`` or ``$ANCHORLOC_CONFIG``) is a JSON/YAML mapping
with optional sections ``scenario``, ``localizer`` (estimator parameters,
``anchor_yaw`` in degrees) and ``evaluate`` (``bin_width``). Command-line
flags override the file, which overrides built-in defaults.
"""
from __future__ import annotations

import argparse
import inspect
import json
import math
import os
import sys
from pathlib import Path

from .evaluation import SWEEP_AXES, evaluate, monte_carlo_sweep
from .exceptions import AnchorLocError, CalibrationFailed, ConfigurationError, SchemaError
from .fusion import ImuTrack, calibrate_offset
from .io import load_mapping, read_log, read_poses, write_log, write_poses, write_report
from .pipeline import SingleAnchorLocalizer, run_pipeline
from .scenario import Scenario

CONFIG_ENV = "ANCHORLOC_CONFIG"
EXIT_OK, EXIT_INPUT, EXIT_EMPTY = 0, 2, 3
_LOCALIZER_KEYS = tuple(inspect.signature(SingleAnchorLocalizer).parameters)


class InputError(Exception):
    pass


def _err(msg):
    print(f"error: {msg}", file=sys.stderr)


def _run_config(args):
    path = args.config or os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    try:
        cfg = load_mapping(path)
    except (OSError, ValueError) as exc:
        raise InputError(str(exc)) from None
    unknown = sorted(set(cfg) - {"scenario", "localizer", "evaluate"})
    if unknown:
        raise InputError(f"config: unknown section(s) {', '.join(unknown)}")
    return cfg


def _scenario(args, cfg):
    data = dict(cfg.get("scenario") or {})
    if getattr(args, "scenario", None):
        try:
            data.update(load_mapping(args.scenario))
        except (OSError, ValueError) as exc:
            raise InputError(str(exc)) from None
    if args.seed is not None:
        data["seed"] = args.seed
    scn = Scenario.from_dict(data)
    scn.validate()
    return scn


def localizer_params(args, cfg):
    """Estimator parameters: defaults < config ``localizer`` section < flags."""
    section = dict(cfg.get("localizer") or {})
    unknown = sorted(set(section) - set(_LOCALIZER_KEYS))
    if unknown:
        raise InputError(f"config: localizer.{unknown[0]} is not a known parameter")
    if "anchor_yaw" in section:
        section["anchor_yaw"] = math.radians(float(section["anchor_yaw"]))
    flags = {
        "snr_threshold": getattr(args, "p_thresh", None),
        "max_rx_range_diff": getattr(args, "max_range_diff", None),
        "max_pairing_gap": getattr(args, "pairing_gap", None),
        "clock_offset": getattr(args, "clock_offset", None),
    }
    if getattr(args, "anchor_yaw", None) is not None:
        flags["anchor_yaw"] = math.radians(args.anchor_yaw)
    if getattr(args, "no_filter", False):
        flags["apply_filter"] = False
    if getattr(args, "no_calibrate", False):
        flags["calibrate"] = False
    section.update({k: v for k, v in flags.items() if v is not None})
    return section


def cmd_simulate(args):
    cfg = _run_config(args)
    scn = _scenario(args, cfg)
    from .channel import simulate_scenario

    log = simulate_scenario(scn)
    write_log(args.out, log, binary=args.binary)
    h, v = len(log.frames_for("H")), len(log.frames_for("V"))
    n = scn.radars.H.samples_per_frame
    print(f"frames H={h} V={v} samples_per_frame={n} imu={len(log.imu)} truth={len(log.truth)}")
    return EXIT_OK


def cmd_localize(args):
    cfg = _run_config(args)
    params = localizer_params(args, cfg)
    log = read_log(args.log)
    poses, stats = run_pipeline(log, **params)
    write_poses(args.out, poses, stats)
    print(f"poses={len(poses)} " + " ".join(f"{k}={stats[k]}" for k in sorted(stats) if k != "poses"))
    if not poses:
        _err("no fixes survived filtering")
        return EXIT_EMPTY
    return EXIT_OK


def cmd_evaluate(args):
    cfg = _run_config(args)
    bin_width = args.bin_width if args.bin_width is not None else (cfg.get("evaluate") or {}).get("bin_width", 1.0)
    poses, summary = read_poses(args.poses)
    log = read_log(args.log)
    report = evaluate(poses, log.truth, bin_width=bin_width, drops=summary)
    if report.n_poses == 0:
        raise InputError("no pose timestamps overlap the ground truth")
    write_report(args.out, report.to_dict())
    p = report.table()["3D"]
    print(f"n={report.n_poses} excluded={report.n_excluded} 3D p10={p['p10']:.4f} p50={p['p50']:.4f} p90={p['p90']:.4f}")
    return EXIT_OK


def _sweep_spec(path):
    try:
        spec = load_mapping(path)
    except (OSError, ValueError) as exc:
        raise InputError(str(exc)) from None
    axis = spec.get("axis")
    if axis not in SWEEP_AXES:
        raise InputError(f"sweep: unknown axis {axis!r}; expected one of {', '.join(SWEEP_AXES)}")
    values = spec.get("values")
    if not isinstance(values, list) or not values:
        raise InputError("sweep: values must be a non-empty list")
    try:
        values = [float(v) for v in values]
    except (TypeError, ValueError):
        raise InputError("sweep: values must be numbers (or 'inf')") from None
    trials = spec.get("trials", 1)
    if not isinstance(trials, int) or trials < 1:
        raise InputError("sweep: trials must be a positive integer")
    return axis, values, trials


def cmd_sweep(args):
    cfg = _run_config(args)
    axis, values, trials = _sweep_spec(args.sweep)
    if args.trials is not None:
        trials = args.trials
    scn = _scenario(args, cfg)
    params = localizer_params(args, cfg)
    result = monte_carlo_sweep(scn, axis, values, trials, params)
    out = Path(args.out)
    for i, point in enumerate(result.points):
        write_report(out / f"report_{i:03d}.json", {"axis": axis, "value": point.value,
                                                    "diagnostics": point.diagnostics, **point.report.to_dict()})
    write_report(out / "summary.json", {"trials": trials, **result.summary()})
    for point in result.points:
        p50 = point.report.table()["3D"]["p50"]
        print(f"{axis}={point.value:g} median_3d={p50 if p50 is None else round(p50, 4)} yield={point.diagnostics['yield']:.3f}")
    return EXIT_OK


def cmd_calibrate(args):
    cfg = _run_config(args)
    params = localizer_params(args, cfg)
    window = args.window if args.window is not None else params.get("calibration_window", 1.0)
    log = read_log(args.log)
    if not log.imu:
        raise InputError("log has no IMU samples")
    est = SingleAnchorLocalizer(**{**params, "calibrate": False}).fit(log)
    h_dets, _ = est.detect_frames(log, "H")
    try:
        off = calibrate_offset(ImuTrack.from_samples(log.imu), h_dets, window=window)
    except CalibrationFailed as exc:
        _err(str(exc))
        return EXIT_EMPTY
    print(json.dumps({"offset": off.offset, "confidence": off.confidence, "grid_step": off.grid_step}, sort_keys=True))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="anchorloc", description="Single-anchor mmWave 6DoF localization toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help=f"run config (JSON/YAML); default ${CONFIG_ENV}")
        sp.add_argument("--seed", type=int, help="override the scenario seed")
        sp.add_argument("--out", required=True, help="output path")

    def loc_flags(sp):
        sp.add_argument("--p-thresh", type=float, help="SNR threshold for outlier rejection")
        sp.add_argument("--max-range-diff", type=float, help="max RX range disagreement (m)")
        sp.add_argument("--pairing-gap", type=float, help="max H/V timestamp gap (s)")
        sp.add_argument("--clock-offset", type=float, help="IMU minus radar clock offset (s)")
        sp.add_argument("--anchor-yaw", type=float, help="anchor frame yaw in the IMU world frame (deg)")
        sp.add_argument("--no-filter", action="store_true", help="keep every detection")
        sp.add_argument("--no-calibrate", action="store_true", help="skip clock-offset calibration")

    sp = sub.add_parser("simulate", help="simulate a scenario into a measurement log")
    sp.add_argument("scenario", nargs="?", help="scenario file (JSON/YAML)")
    common(sp)
    sp.add_argument("--binary", action="store_true", help="store samples in a raw binary section")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("localize", help="estimate poses from a measurement log")
    sp.add_argument("log")
    common(sp)
    loc_flags(sp)
    sp.set_defaults(func=cmd_localize)

    sp = sub.add_parser("evaluate", help="score poses against the log's ground truth")
    sp.add_argument("poses")
    sp.add_argument("log")
    common(sp)
    sp.add_argument("--bin-width", type=float, help="time-bin width (s)")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("sweep", help="Monte-Carlo sweep of one parameter")
    sp.add_argument("scenario")
    sp.add_argument("sweep", help="sweep spec: axis, values, trials")
    common(sp)
    sp.add_argument("--trials", type=int, help="override the spec's trial count")
    loc_flags(sp)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("calibrate", help="estimate the IMU/radar clock offset")
    sp.add_argument("log")
    sp.add_argument("--config")
    sp.add_argument("--seed", type=int, help=argparse.SUPPRESS)
    sp.add_argument("--window", type=float, help="lag search half-width (s)")
    sp.set_defaults(func=cmd_calibrate)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigurationError as exc:
        for v in exc.violations:
            _err(v)
        return EXIT_INPUT
    except (InputError, SchemaError, AnchorLocError, ValueError, TypeError, KeyError, OSError) as exc:
        _err(str(exc))
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
