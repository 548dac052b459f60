"""Rotations and SO(3) helpers.

Frames: world W (z up), body B, and the yaw-only intermediate frame C.
A rotation array ``R`` maps body coordinates to world coordinates, so its
columns are X_B, Y_B, Z_B expressed in W.

Euler angles follow the Z-X-Y order: ``R = Rz(yaw) @ Rx(roll) @ Ry(pitch)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GimbalLock, NonAntisymmetric

ANTISYM_TOL = 1e-9
GIMBAL_TOL = 1e-6


@dataclass(frozen=True)
class EulerZXY:
    roll: float
    pitch: float
    yaw: float

    def as_array(self) -> np.ndarray:
        return np.array([self.roll, self.pitch, self.yaw])


@dataclass
class VehicleState:
    """Ground-truth rigid-body state.

    ``p`` and ``v`` are in the world frame, ``omega`` is the body angular rate.
    """

    p: np.ndarray
    v: np.ndarray
    R: np.ndarray
    omega: np.ndarray
    grounded: bool = False

    @classmethod
    def at_rest(cls, p=(0.0, 0.0, 0.0), yaw: float = 0.0, grounded: bool = False) -> "VehicleState":
        return cls(
            p=np.array(p, dtype=float),
            v=np.zeros(3),
            R=rot_z(yaw),
            omega=np.zeros(3),
            grounded=grounded,
        )

    def copy(self) -> "VehicleState":
        return VehicleState(self.p.copy(), self.v.copy(), self.R.copy(), self.omega.copy(), self.grounded)

    def is_finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.p))
            and np.all(np.isfinite(self.v))
            and np.all(np.isfinite(self.R))
            and np.all(np.isfinite(self.omega))
        )

    @property
    def euler(self) -> EulerZXY:
        return rotation_to_euler_zxy(self.R)


def hat(v) -> np.ndarray:
    """Skew-symmetric matrix with ``hat(v) @ w == cross(v, w)``."""
    x, y, z = (float(c) for c in v)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee(A) -> np.ndarray:
    """Inverse of :func:`hat`. Rejects arrays that are not antisymmetric."""
    A = np.asarray(A, dtype=float)
    if A.shape != (3, 3):
        raise NonAntisymmetric(f"expected a 3x3 array, got shape {A.shape}")
    if np.linalg.norm(A + A.T) >= ANTISYM_TOL:
        raise NonAntisymmetric("input is not antisymmetric")
    return np.array([A[2, 1], A[0, 2], A[1, 0]])


def rot_x(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def euler_zxy_to_rotation(e: EulerZXY) -> np.ndarray:
    return rot_z(e.yaw) @ rot_x(e.roll) @ rot_y(e.pitch)


def rotation_to_euler_zxy(R) -> EulerZXY:
    """Recover (roll, pitch, yaw) from ``R = Rz(yaw) Rx(roll) Ry(pitch)``.

    Roll lies in [-pi/2, pi/2]; raises :class:`GimbalLock` when cos(roll)
    vanishes and yaw and pitch can no longer be separated.
    """
    R = np.asarray(R, dtype=float)
    # R[2,1] = sin(roll); R[0,1] = -cos(roll) sin(yaw); R[1,1] = cos(roll) cos(yaw)
    # R[2,0] = -cos(roll) sin(pitch); R[2,2] = cos(roll) cos(pitch)
    s_roll = min(1.0, max(-1.0, R[2, 1]))
    c_roll = math.hypot(R[2, 0], R[2, 2])
    if c_roll < GIMBAL_TOL:
        raise GimbalLock("cos(roll) ~ 0; Z-X-Y angles undefined")
    roll = math.atan2(s_roll, c_roll)
    pitch = math.atan2(-R[2, 0], R[2, 2])
    yaw = math.atan2(-R[0, 1], R[1, 1])
    return EulerZXY(roll, pitch, yaw)


def tilt_from_vertical(R) -> float:
    """Angle (rad) between Z_B and Z_W.

    Stays meaningful for tipped poses where the Euler decomposition is not.
    """
    return math.acos(min(1.0, max(-1.0, float(np.asarray(R)[2, 2]))))


def yaw_frame_x(psi: float) -> np.ndarray:
    """X axis of the yaw-only frame C, expressed in W."""
    return np.array([math.cos(psi), math.sin(psi), 0.0])


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]; angles already in range come back untouched."""
    if -math.pi < a <= math.pi:
        return float(a)
    w = math.fmod(a + math.pi, 2.0 * math.pi)
    if w <= 0.0:
        w += 2.0 * math.pi
    return w - math.pi


def orthonormalize(R) -> np.ndarray:
    """Nearest rotation via SVD (polar decomposition)."""
    U, _, Vt = np.linalg.svd(R)
    Q = U @ Vt
    if np.linalg.det(Q) < 0:
        U[:, -1] *= -1.0
        Q = U @ Vt
    return Q


def axis_angle(axis, angle: float) -> np.ndarray:
    """Rodrigues formula for a rotation of ``angle`` about unit ``axis``."""
    K = hat(np.asarray(axis, dtype=float) / np.linalg.norm(axis))
    return np.eye(3) + math.sin(angle) * K + (1.0 - math.cos(angle)) * (K @ K)


def orthonormality_error(R) -> float:
    R = np.asarray(R, dtype=float)
    return float(np.max(np.abs(R.T @ R - np.eye(3))))
