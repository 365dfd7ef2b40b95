"""File formats: measurement logs, pose streams, reports and config files.

Logs and pose streams are newline-delimited JSON. The first line is a
header carrying ``schema_version``; every later line is a record with a
``type`` tag. Complex samples are little-endian float64 ``(re, im)`` pairs,
base64 encoded inline or, with ``binary=True``, stored raw after a marker
line and referenced by byte offset.

All writers are atomic (temporary file plus rename) and deterministic:
keys are sorted and floats use Python's shortest round-trip repr.
"""
from __future__ import annotations

import base64
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np
import yaml

from .channel import BasebandFrame
from .config import Polarization
from .exceptions import SchemaError
from .fusion import ImuSample, Pose6DoF
from .geometry import EulerAngles, euler_to_rotation, rotation_to_euler
from .scenario import SCHEMA_VERSION, GroundTruthTrack, MeasurementLog

BINARY_MARKER = b"--binary-samples--\n"
_SAMPLE_DTYPE = np.dtype("<f8")


def atomic_write(path, data):
    """Write ``data`` (str or bytes) to ``path`` via a temp file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": "\n"})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dumps(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def _json_safe(x):
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return x


def _pack(rx):
    return np.ascontiguousarray(np.asarray(rx, dtype=np.complex128)).view(np.float64).astype(_SAMPLE_DTYPE).tobytes()


def _unpack(buf, n):
    return np.frombuffer(buf, dtype=_SAMPLE_DTYPE).astype(np.float64).view(np.complex128).reshape(2, n).copy()


def _check_version(header, what):
    if header.get("type") != "header":
        raise SchemaError(f"{what}: first record must be the header")
    version = header.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"{what}: schema_version {version!r} != supported {SCHEMA_VERSION}")


def dump_log(log, binary=False):
    """Serialize a :class:`MeasurementLog` to bytes."""
    header = _json_safe({**log.header, "type": "header", "binary": bool(binary)})
    lines = [_dumps(header)]
    blobs, offset = [], 0
    for f in sorted(log.frames, key=lambda f: (f.timestamp, f.radar_id.value)):
        rec = {
            "type": "frame",
            "radar_id": f.radar_id.value,
            "timestamp": float(f.timestamp),
            "frame_index": int(f.frame_index),
            "sample_rate": float(f.sample_rate),
            "in_view": bool(f.in_view),
            "n": int(np.shape(f.rx)[1]),
        }
        raw = _pack(f.rx)
        if binary:
            rec["offset"], rec["nbytes"] = offset, len(raw)
            blobs.append(raw)
            offset += len(raw)
        else:
            rec["rx"] = base64.b64encode(raw).decode("ascii")
        lines.append(_dumps(rec))
    for s in sorted(log.imu, key=lambda s: s.timestamp):
        lines.append(_dumps({"type": "imu", "timestamp": float(s.timestamp), "angles": [float(a) for a in s.attitude]}))
    tr = log.truth
    for t, p, a in zip(tr.times, tr.positions, tr.angles):
        lines.append(
            _dumps({"type": "truth", "timestamp": float(t), "position": p.tolist(), "angles": a.tolist()})
        )
    text = ("\n".join(lines) + "\n").encode("utf-8")
    if binary:
        return text + BINARY_MARKER + b"".join(blobs)
    return text


def load_log(data):
    """Parse bytes produced by :func:`dump_log`."""
    blob = b""
    cut = data.find(b"\n" + BINARY_MARKER)
    if cut >= 0:
        blob = data[cut + 1 + len(BINARY_MARKER):]
        data = data[: cut + 1]
    lines = [ln for ln in data.decode("utf-8").splitlines() if ln.strip()]
    if not lines:
        raise SchemaError("log: empty file")
    try:
        records = [json.loads(ln) for ln in lines]
    except json.JSONDecodeError as exc:
        raise SchemaError(f"log: malformed record ({exc})") from None
    header = records[0]
    _check_version(header, "log")
    header = {k: v for k, v in header.items() if k not in ("type", "binary")}
    frames, imu, truth = [], [], ([], [], [])
    for rec in records[1:]:
        kind = rec.get("type")
        if kind == "frame":
            n = rec["n"]
            if "rx" in rec:
                raw = base64.b64decode(rec["rx"])
            else:
                raw = blob[rec["offset"]: rec["offset"] + rec["nbytes"]]
            frames.append(
                BasebandFrame(
                    Polarization(rec["radar_id"]), rec["timestamp"], _unpack(raw, n),
                    rec["sample_rate"], rec["frame_index"], rec["in_view"],
                )
            )
        elif kind == "imu":
            imu.append(ImuSample(rec["timestamp"], EulerAngles(*rec["angles"])))
        elif kind == "truth":
            truth[0].append(rec["timestamp"])
            truth[1].append(rec["position"])
            truth[2].append(rec["angles"])
        else:
            raise SchemaError(f"log: unknown record type {kind!r}")
    return MeasurementLog(header, frames, imu, GroundTruthTrack(*truth))


def write_log(path, log, binary=False):
    atomic_write(path, dump_log(log, binary))


def read_log(path):
    return load_log(Path(path).read_bytes())


def dump_poses(poses, stats=None):
    """Pose stream: header, one record per pose (degrees), drop summary."""
    lines = [_dumps({"type": "header", "schema_version": SCHEMA_VERSION, "kind": "poses",
                     "units": {"position": "m", "attitude": "deg"}})]
    for p in poses:
        roll, pitch, yaw = np.degrees(tuple(rotation_to_euler(p.attitude)))
        x, y, z = (float(v) for v in p.position)
        lines.append(_dumps(_json_safe({
            "type": "pose", "timestamp": float(p.timestamp), "x": x, "y": y, "z": z,
            "roll": float(roll), "pitch": float(pitch), "yaw": float(yaw), "quality": float(p.quality),
        })))
    lines.append(_dumps({"type": "summary", "drops": _json_safe(dict(sorted((stats or {}).items())))}))
    return "\n".join(lines) + "\n"


def load_poses(text):
    """Inverse of :func:`dump_poses`; returns ``(poses, summary)``."""
    records = [json.loads(ln) for ln in text.splitlines() if ln.strip()]
    if not records:
        raise SchemaError("poses: empty file")
    _check_version(records[0], "poses")
    poses, summary = [], {}
    for rec in records[1:]:
        if rec.get("type") == "pose":
            att = EulerAngles.from_degrees(rec["roll"], rec["pitch"], rec["yaw"])
            q = rec.get("quality")
            poses.append(Pose6DoF(rec["timestamp"], np.array([rec["x"], rec["y"], rec["z"]], float),
                                  euler_to_rotation(att), math.nan if q is None else q))
        elif rec.get("type") == "summary":
            summary = rec.get("drops", {})
        else:
            raise SchemaError(f"poses: unknown record type {rec.get('type')!r}")
    return poses, summary


def write_poses(path, poses, stats=None):
    atomic_write(path, dump_poses(poses, stats))


def read_poses(path):
    return load_poses(Path(path).read_text(encoding="utf-8"))


def dump_report(report_dict):
    return json.dumps(_json_safe({"schema_version": SCHEMA_VERSION, **report_dict}),
                      sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_report(path, report_dict):
    atomic_write(path, dump_report(report_dict))


def load_mapping(path):
    """Read a JSON (``.json``) or YAML file holding a mapping."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text) if path.suffix.lower() == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ValueError(f"{path}: cannot parse ({exc})") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ValueError(f"{path}: top level must be a mapping")
    return data
