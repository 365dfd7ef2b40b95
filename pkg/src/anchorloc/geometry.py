"""Frames, rotations and the spherical/Cartesian conversions.

Axis convention used everywhere in the package: x points right, y points
forward along the radar boresight (at zero attitude) and z points up.

Euler angles compose as ``R = Rz(yaw) @ Rx(pitch) @ Ry(roll)``: with a
y-forward body, pitch tilts about x and roll about y. Angles are radians
internally; degrees only appear at file and CLI boundaries.

Three frames exist: ``a`` (anchor), ``dw`` (drone world: drone translation,
anchor-aligned rotation) and ``df`` (drone flight: rotates with the airframe).
Rotation matrices are plain ``(3, 3)`` ndarrays and points are ``(3,)``
ndarrays.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .exceptions import DomainError

_GIMBAL_EPS = 1e-12


class EulerAngles(NamedTuple):
    roll: float
    pitch: float
    yaw: float

    @classmethod
    def from_degrees(cls, roll, pitch, yaw):
        return cls(math.radians(roll), math.radians(pitch), math.radians(yaw))

    def to_degrees(self):
        return tuple(math.degrees(a) for a in self)


class SphericalFix(NamedTuple):
    range: float
    azimuth: float
    elevation: float


def wrap_angle(a):
    """Wrap angle(s) to (-pi, pi]; values already in range pass through unchanged."""
    a = np.asarray(a, dtype=float)
    w = np.where((a > -np.pi) & (a <= np.pi), a, np.pi - np.mod(np.pi - a, 2 * np.pi))
    if np.ndim(w) == 0:
        return float(w)
    return w


def rot_x(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def euler_to_rotation(e):
    """Rotation matrix ``Rz(yaw) @ Rx(pitch) @ Ry(roll)``."""
    roll, pitch, yaw = e
    return rot_z(yaw) @ rot_x(pitch) @ rot_y(roll)


def rotation_to_euler(R):
    """Inverse of :func:`euler_to_rotation`.

    The bottom row of ``R`` is ``(-cos p sin r, sin p, cos p cos r)``, which
    gives pitch and roll directly; yaw comes from the middle column. At the
    gimbal singularity (``|pitch| = pi/2``) roll is set to 0 and yaw absorbs
    the free angle.
    """
    R = np.asarray(R, dtype=float)
    sp = float(np.clip(R[2, 1], -1.0, 1.0))
    pitch = math.asin(sp)
    if math.hypot(R[2, 0], R[2, 2]) < _GIMBAL_EPS:
        roll = 0.0
        yaw = math.atan2(R[1, 0], R[0, 0])
    else:
        roll = math.atan2(-R[2, 0], R[2, 2])
        yaw = math.atan2(-R[0, 1], R[1, 1])
    return EulerAngles(wrap_angle(roll), pitch, wrap_angle(yaw))


def is_rotation(R, tol=1e-9):
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        return False
    return bool(
        np.allclose(R.T @ R, np.eye(3), atol=tol, rtol=0)
        and abs(np.linalg.det(R) - 1.0) <= tol
    )


def spherical_to_point(s):
    r, az, el = s
    ce = math.cos(el)
    return np.array([r * math.sin(az) * ce, r * math.cos(az) * ce, r * math.sin(el)])


def point_to_spherical(p):
    """Range, azimuth and elevation of a point in front of the radar.

    Raises :class:`DomainError` for the origin or for points with ``y <= 0``
    (outside the forward field-of-view half-space).
    """
    x, y, z = (float(v) for v in p)
    r = math.sqrt(x * x + y * y + z * z)
    if not math.isfinite(r) or r == 0.0:
        raise DomainError("point_to_spherical: degenerate point at the origin")
    if y <= 0.0:
        raise DomainError(f"point_to_spherical: y={y} is outside the field of view (y must be > 0)")
    elevation = math.asin(max(-1.0, min(1.0, z / r)))
    azimuth = math.atan2(x, y)
    return SphericalFix(r, azimuth, elevation)


def anchor_in_flight_frame(drone_position, drone_attitude, anchor_position=(0.0, 0.0, 0.0)):
    """Anchor position expressed in the drone flight frame ``df``.

    ``drone_attitude`` is ``R_df^a`` (flight frame to anchor frame).
    """
    d = np.asarray(anchor_position, dtype=float) - np.asarray(drone_position, dtype=float)
    return np.asarray(drone_attitude, dtype=float).T @ d
