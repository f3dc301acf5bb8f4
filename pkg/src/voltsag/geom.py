"""Frame conventions and rotation utilities shared by the whole package.

The earth frame is NED (north-east-down), so gravity points along +z and
"altitude" is -z.  The body frame carries its z axis down through the belly
of the vehicle.  Attitude is stored as a rotation matrix R mapping body to
earth coordinates, v_earth = R @ v_body, parameterized where convenient by
ZYX (yaw-pitch-roll) Euler angles:

    R = Rz(yaw) @ Ry(pitch) @ Rx(roll)

With this convention the third column of R is the body z axis expressed in
earth coordinates, which is the direction thrust (and any thrust deficit)
acts along.  All angles are radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

# pitch magnitude beyond which the Euler-rate kinematics are unusable
PITCH_GUARD = math.pi / 2.0 - 1e-6


class GimbalLockError(ValueError):
    """Pitch too close to +-90 deg for the Euler-rate matrix to exist."""


def wrap_angle(angle: float) -> float:
    """Wrap an angle to the interval (-pi, pi]."""
    r = (angle + math.pi) % TWO_PI
    return math.pi if r == 0.0 else r - math.pi


@dataclass(frozen=True)
class EulerAngles:
    """ZYX Euler angles: roll about body x, pitch about y, yaw about z."""

    roll: float
    pitch: float
    yaw: float

    def as_array(self) -> np.ndarray:
        return np.array([self.roll, self.pitch, self.yaw])

    @classmethod
    def from_array(cls, a) -> "EulerAngles":
        return cls(float(a[0]), float(a[1]), float(a[2]))

    def wrapped(self) -> "EulerAngles":
        """Roll and yaw wrapped to (-pi, pi]; pitch left untouched."""
        return EulerAngles(wrap_angle(self.roll), self.pitch, wrap_angle(self.yaw))


def skew(v) -> np.ndarray:
    """Skew-symmetric cross-product matrix, skew(v) @ w == cross(v, w)."""
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def rotation_from_euler(eta: EulerAngles) -> np.ndarray:
    """Body-to-earth rotation matrix for ZYX Euler angles."""
    cph, sph = math.cos(eta.roll), math.sin(eta.roll)
    cth, sth = math.cos(eta.pitch), math.sin(eta.pitch)
    cps, sps = math.cos(eta.yaw), math.sin(eta.yaw)
    return np.array([
        [cps * cth, cps * sth * sph - sps * cph, cps * sth * cph + sps * sph],
        [sps * cth, sps * sth * sph + cps * cph, sps * sth * cph - cps * sph],
        [-sth, cth * sph, cth * cph],
    ])


def euler_from_rotation(R) -> EulerAngles:
    """Extract ZYX Euler angles from a (proper) rotation matrix.

    Inverse of rotation_from_euler away from the pitch singularity.  The
    pitch entry is clipped before asin so slightly denormalized matrices
    do not raise.
    """
    pitch = -math.asin(min(1.0, max(-1.0, float(R[2, 0]))))
    roll = math.atan2(float(R[2, 1]), float(R[2, 2]))
    yaw = math.atan2(float(R[1, 0]), float(R[0, 0]))
    return EulerAngles(roll, pitch, yaw)


def theta_vector(eta: EulerAngles) -> np.ndarray:
    """Unit vector of the body z axis in earth coordinates.

    Equals rotation_from_euler(eta)[:, 2].  Thrust pushes along the
    negative of this direction, a thrust deficit along the positive.
    """
    cph, sph = math.cos(eta.roll), math.sin(eta.roll)
    cth, sth = math.cos(eta.pitch), math.sin(eta.pitch)
    cps, sps = math.cos(eta.yaw), math.sin(eta.yaw)
    return np.array([
        cps * sth * cph + sps * sph,
        sps * sth * cph - cps * sph,
        cth * cph,
    ])


def euler_rate_matrix(eta: EulerAngles) -> np.ndarray:
    """Matrix C(eta) mapping body rates to Euler-angle rates, eta_dot = C @ omega.

    Raises GimbalLockError when |pitch| >= pi/2 - 1e-6; near the guard the
    entries grow like 1/cos(pitch) but stay finite.
    """
    if abs(eta.pitch) >= PITCH_GUARD:
        raise GimbalLockError(f"pitch {eta.pitch:.6f} rad too close to +-pi/2")
    cph, sph = math.cos(eta.roll), math.sin(eta.roll)
    cth = math.cos(eta.pitch)
    tth = math.tan(eta.pitch)
    return np.array([
        [1.0, sph * tth, cph * tth],
        [0.0, cph, -sph],
        [0.0, sph / cth, cph / cth],
    ])


def body_rate_matrix(eta: EulerAngles) -> np.ndarray:
    """Inverse map of euler_rate_matrix: omega = body_rate_matrix(eta) @ eta_dot.

    Exists for all pitch (no singularity), so the rate loop prefers it over
    inverting C numerically.
    """
    cph, sph = math.cos(eta.roll), math.sin(eta.roll)
    cth, sth = math.cos(eta.pitch), math.sin(eta.pitch)
    return np.array([
        [1.0, 0.0, -sth],
        [0.0, cph, sph * cth],
        [0.0, -sph, cph * cth],
    ])


def orthonormalize(R) -> np.ndarray:
    """Project a nearly orthonormal matrix back onto SO(3).

    A single Newton step of the polar decomposition handles the tiny
    per-step drift of the integrator; badly deformed inputs fall back to
    the SVD projection.
    """
    E = R.T @ R
    defect = np.abs(E - np.eye(3)).max()
    if defect < 1e-4:
        return R @ (1.5 * np.eye(3) - 0.5 * E)
    U, _, Vt = np.linalg.svd(R)
    return U @ Vt


def assert_rotation(R, tol: float = 1e-9) -> None:
    """Raise ValueError unless R is orthonormal with determinant +1."""
    R = np.asarray(R)
    if R.shape != (3, 3):
        raise ValueError(f"rotation must be 3x3, got {R.shape}")
    defect = np.abs(R.T @ R - np.eye(3)).max()
    if defect > tol:
        raise ValueError(f"matrix not orthonormal, defect {defect:.3e}")
    if np.linalg.det(R) < 0.0:
        raise ValueError("matrix has determinant -1 (reflection)")
