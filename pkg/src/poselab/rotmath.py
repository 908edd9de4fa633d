"""Rotation representations and angle arithmetic.

Convention used throughout the package: intrinsic Tait-Bryan angles in
degrees, applied yaw (about y), then pitch (about the rotated x), then
roll (about the rotated z).  Written as a single matrix acting on column
vectors this is

    R = rot_y(yaw) @ rot_x(pitch) @ rot_z(roll)

Rotation matrices are plain (3, 3) float64 arrays, rotation vectors
(axis * angle, in radians) plain (3,) arrays.  Degrees are used at every
public boundary, radians only internally.

Canonical angle ranges after any conversion: yaw in [-180, 180),
pitch in [-90, 90], roll in [-180, 180).
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "EulerAngles",
    "GimbalLockWarning",
    "angle_error",
    "axis_angle_to_rotation",
    "check_rotation",
    "euler_to_rotation",
    "rotation_to_axis_angle",
    "rotation_to_euler",
    "skew",
    "wrap_degrees",
]


class GimbalLockWarning(UserWarning):
    """Pitch is at +/-90 degrees; yaw and roll are no longer separable."""


@dataclass(frozen=True)
class EulerAngles:
    """Orientation as yaw/pitch/roll in degrees."""

    yaw: float
    pitch: float
    roll: float

    def __post_init__(self):
        for name in ("yaw", "pitch", "roll"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.yaw, self.pitch, self.roll], dtype=float)


def wrap_degrees(angle: float) -> float:
    """Wrap an angle in degrees into [-180, 180)."""
    return (angle + 180.0) % 360.0 - 180.0


def angle_error(a, b):
    """Wrap-aware absolute difference in degrees, elementwise, in [0, 180]."""
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) % 360.0
    err = np.minimum(d, 360.0 - d)
    return err if err.ndim else float(err)


def check_rotation(m, tol: float = 1e-9) -> np.ndarray:
    """Validate that ``m`` is a proper rotation matrix and return it as float64.

    Raises ValueError when the matrix is not 3x3, not orthogonal to within
    ``tol``, or has determinant different from 1 by more than ``tol``.
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        raise ValueError(f"rotation matrix must be 3x3, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("rotation matrix has non-finite entries")
    err = np.abs(m.T @ m - np.eye(3)).max()
    if err > tol:
        raise ValueError(f"matrix is not orthogonal (|M'M - I| = {err:.3e})")
    det = float(np.linalg.det(m))
    if abs(det - 1.0) > tol:
        raise ValueError(f"matrix determinant is {det!r}, expected 1")
    return m


def euler_to_rotation(e: EulerAngles) -> np.ndarray:
    """Rotation matrix for intrinsic yaw -> pitch -> roll angles in degrees."""
    y = math.radians(e.yaw)
    p = math.radians(e.pitch)
    r = math.radians(e.roll)
    cy, sy = math.cos(y), math.sin(y)
    cp, sp = math.cos(p), math.sin(p)
    cr, sr = math.cos(r), math.sin(r)
    # rot_y(yaw) @ rot_x(pitch) @ rot_z(roll), expanded entrywise.
    return np.array(
        [
            [cy * cr + sy * sp * sr, -cy * sr + sy * sp * cr, sy * cp],
            [cp * sr, cp * cr, -sp],
            [-sy * cr + cy * sp * sr, sy * sr + cy * sp * cr, cy * cp],
        ]
    )


def rotation_to_euler(m, lock_tolerance_deg: float = 1e-6) -> EulerAngles:
    """Recover canonical-range Euler angles from a rotation matrix.

    Within ``lock_tolerance_deg`` of pitch = +/-90 the yaw/roll split is
    degenerate: roll is fixed to 0, yaw absorbs the whole in-plane angle,
    and a GimbalLockWarning is emitted.
    """
    m = check_rotation(m)
    sp = min(1.0, max(-1.0, -float(m[1, 2])))
    pitch = math.degrees(math.asin(sp))
    if 90.0 - abs(pitch) < lock_tolerance_deg:
        warnings.warn(
            "pitch at +/-90 degrees; fixing roll = 0",
            GimbalLockWarning,
            stacklevel=2,
        )
        if sp > 0.0:
            yaw = math.degrees(math.atan2(m[0, 1], m[0, 0]))
        else:
            yaw = math.degrees(math.atan2(-m[0, 1], m[0, 0]))
        return EulerAngles(wrap_degrees(yaw), pitch, 0.0)
    yaw = math.degrees(math.atan2(m[0, 2], m[2, 2]))
    roll = math.degrees(math.atan2(m[1, 0], m[1, 1]))
    return EulerAngles(wrap_degrees(yaw), pitch, wrap_degrees(roll))


def skew(v) -> np.ndarray:
    """Cross-product matrix: skew(v) @ u == cross(v, u)."""
    x, y, z = np.asarray(v, dtype=float)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def axis_angle_to_rotation(rvec) -> np.ndarray:
    """Rodrigues map from a rotation vector (radians) to a rotation matrix."""
    r = np.asarray(rvec, dtype=float)
    if r.shape != (3,):
        raise ValueError(f"rotation vector must have shape (3,), got {r.shape}")
    theta2 = float(r @ r)
    theta = math.sqrt(theta2)
    if theta < 1e-4:
        # Series for sin(t)/t and (1-cos t)/t^2; exact through O(t^4).
        a = 1.0 - theta2 / 6.0 * (1.0 - theta2 / 20.0)
        b = 0.5 * (1.0 - theta2 / 12.0 * (1.0 - theta2 / 30.0))
    else:
        a = math.sin(theta) / theta
        b = (1.0 - math.cos(theta)) / theta2
    k = skew(r)
    return np.eye(3) + a * k + b * (k @ k)


def rotation_to_axis_angle(m) -> np.ndarray:
    """Inverse Rodrigues map; the result magnitude is in [0, pi]."""
    m = check_rotation(m)
    cos_theta = min(1.0, max(-1.0, (float(np.trace(m)) - 1.0) / 2.0))
    theta = math.acos(cos_theta)
    # v = sin(theta) * axis
    v = 0.5 * np.array(
        [m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]]
    )
    if theta < 1e-6:
        return v * (1.0 + theta * theta / 6.0)
    if math.pi - theta < 1e-4:
        # Off-diagonal differences vanish near pi; recover the axis from
        # (M + I)/2 ~ axis axis^T using its largest diagonal entry.
        a = (m + np.eye(3)) / 2.0
        i = int(np.argmax(np.diag(a)))
        axis = a[:, i] / math.sqrt(a[i, i])
        axis = axis / np.linalg.norm(axis)
        if axis @ v < 0.0:
            axis = -axis
        return axis * theta
    return v * (theta / math.sin(theta))
