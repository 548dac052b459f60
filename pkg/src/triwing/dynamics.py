"""Rigid-body flight dynamics, sensor models and the ground plane."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .actuation import ControlWrench, VehicleParams
from .errors import NonFiniteState
from .geom import EulerZXY, VehicleState, axis_angle, rot_z, rotation_to_euler_zxy

E3 = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class NoiseConfig:
    """Standard deviations of the observation model (SI units, radians)."""

    attitude: float = 0.0
    gyro: float = 0.0
    gyro_bias: tuple = (0.0, 0.0, 0.0)
    position: float = 0.0
    velocity: float = 0.0
    altitude: float = 0.0
    flow: float = 0.0
    yaw_drift_rate: float = 0.0  # rad/s, constant heading-sensor drift
    yaw_walk: float = 0.0  # rad/sqrt(s)
    flow_max_altitude: float = 2.0

    @classmethod
    def realistic(cls) -> "NoiseConfig":
        """Levels comparable to a small IMU plus motion capture."""
        return cls(
            attitude=math.radians(0.5),
            gyro=0.02,
            position=1e-3,
            velocity=0.01,
            altitude=0.01,
            flow=0.01,
        )


@dataclass(frozen=True)
class SimConfig:
    dt_physics: float = 1e-3
    control_rate: float = 100.0
    sensor_rate: float = 200.0
    # yaw torque from assembly imbalance: constant plus random walk (N m / sqrt(s))
    yaw_imbalance: float = 0.0
    yaw_imbalance_walk: float = 0.0
    angular_damping: tuple = (0.0, 0.0, 0.0)
    linear_drag: float = 0.0
    ground_friction: float = 0.5
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    seed: int = 0

    def validate(self) -> None:
        if not self.dt_physics > 0:
            raise ValueError("violated invariant: dt_physics > 0")
        if not 0 < self.control_rate <= self.sensor_rate:
            raise ValueError("violated invariant: control_rate <= sensor_rate")
        if not self.sensor_rate <= 1.0 / self.dt_physics + 1e-9:
            raise ValueError("violated invariant: sensor_rate <= 1/dt_physics")
        if not 0.0 <= self.ground_friction <= 1.0:
            raise ValueError("violated invariant: 0 <= ground_friction <= 1")

    @property
    def physics_per_control(self) -> int:
        return max(1, int(round(1.0 / (self.control_rate * self.dt_physics))))

    @property
    def physics_per_sensor(self) -> int:
        return max(1, int(round(1.0 / (self.sensor_rate * self.dt_physics))))


@njit(cache=True)
def _derivative(v, R, w, u1, tau, m, g, I, I_inv, damping, drag):
    a = (u1 / m) * R[:, 2]
    a[2] -= g
    if drag != 0.0:
        a -= (drag / m) * v
    W = np.zeros((3, 3))
    W[0, 1] = -w[2]
    W[0, 2] = w[1]
    W[1, 0] = w[2]
    W[1, 2] = -w[0]
    W[2, 0] = -w[1]
    W[2, 1] = w[0]
    Rdot = R @ W
    Iw = I @ w
    gyro = np.array([w[1] * Iw[2] - w[2] * Iw[1], w[2] * Iw[0] - w[0] * Iw[2], w[0] * Iw[1] - w[1] * Iw[0]])
    wdot = I_inv @ (tau - gyro - damping * w)
    return a, Rdot, wdot


@njit(cache=True)
def _rk4(p0, v0, R0, w0, u1, tau, m, g, I, I_inv, damping, drag, h):
    a1, R1, w1 = _derivative(v0, R0, w0, u1, tau, m, g, I, I_inv, damping, drag)
    v_2 = v0 + 0.5 * h * a1
    a2, R2, w2 = _derivative(v_2, R0 + 0.5 * h * R1, w0 + 0.5 * h * w1, u1, tau, m, g, I, I_inv, damping, drag)
    v_3 = v0 + 0.5 * h * a2
    a3, R3, w3 = _derivative(v_3, R0 + 0.5 * h * R2, w0 + 0.5 * h * w2, u1, tau, m, g, I, I_inv, damping, drag)
    v_4 = v0 + h * a3
    a4, R4, w4 = _derivative(v_4, R0 + h * R3, w0 + h * w3, u1, tau, m, g, I, I_inv, damping, drag)
    c = h / 6.0
    p = p0 + c * (v0 + 2.0 * v_2 + 2.0 * v_3 + v_4)
    v = v0 + c * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
    R = R0 + c * (R1 + 2.0 * R2 + 2.0 * R3 + R4)
    w = w0 + c * (w1 + 2.0 * w2 + 2.0 * w3 + w4)
    # one Newton-Schulz polar step; drift per step is at round-off level
    R = R @ (1.5 * np.eye(3) - 0.5 * (R.T @ R))
    return p, v, R, w


def step_dynamics(
    state: VehicleState,
    u: ControlWrench,
    params: VehicleParams,
    cfg: SimConfig,
    dt: float | None = None,
) -> VehicleState:
    """Advance one fixed step with classical RK4; the wrench is held constant.

    Translational: m a = -m g Z_W + u1 Z_B. Rotational: I w_dot = tau - w x I w,
    with ``tau = (u2, u3, u.mz)`` where ``u.mz`` is the unactuated yaw torque.
    The rotation is re-orthonormalized after every step.
    """
    h = cfg.dt_physics if dt is None else dt
    if not h > 0:
        raise ValueError("dt must be positive")
    p, v, R, w = _rk4(
        np.asarray(state.p, dtype=float),
        np.asarray(state.v, dtype=float),
        np.asarray(state.R, dtype=float),
        np.asarray(state.omega, dtype=float),
        float(u.u1),
        np.array([u.u2, u.u3, u.mz], dtype=float),
        params.mass,
        params.gravity,
        params.I,
        params.I_inv,
        np.asarray(cfg.angular_damping, dtype=float),
        float(cfg.linear_drag),
        float(h),
    )
    out = VehicleState(p, v, R, w, state.grounded)
    if not math.isfinite(p.sum() + v.sum() + R.sum() + w.sum()):
        raise NonFiniteState("non-finite state after integration step")
    return out


def ground_contact(state: VehicleState, params: VehicleParams | None = None, friction: float = 0.5) -> VehicleState:
    """Kinematic ground plane at z = 0.

    A vehicle at or below the plane and not climbing is clamped onto it, its
    vertical velocity zeroed and its planar velocity scaled by ``1 - friction``.
    Anything else is returned unchanged apart from the grounded flag.
    """
    s = state.copy()
    if s.p[2] <= 0.0 and s.v[2] <= 0.0:
        s.p[2] = 0.0
        s.v[2] = 0.0
        s.v[:2] *= 1.0 - friction
        s.grounded = True
    else:
        s.grounded = False
    return s


@dataclass
class Observation:
    t: float
    R: np.ndarray  # measured attitude, includes heading drift
    omega: np.ndarray
    p: np.ndarray  # external position fix (motion capture analog)
    v: np.ndarray
    v_flow: np.ndarray  # planar velocity, NaN above the flow sensor range
    altitude: float

    @property
    def euler(self) -> EulerZXY:
        return rotation_to_euler_zxy(self.R)

    @property
    def yaw(self) -> float:
        return math.atan2(self.R[1, 0], self.R[0, 0]) if abs(self.R[2, 0]) < 1e-9 else self.euler.yaw

    def as_state(self) -> VehicleState:
        return VehicleState(self.p.copy(), self.v.copy(), self.R.copy(), self.omega.copy())


def heading(R) -> float:
    """Yaw of the yaw-only frame whose X axis is the horizontal projection closest to X_B.

    Equals the Z-X-Y yaw whenever the decomposition is defined.
    """
    R = np.asarray(R)
    return math.atan2(-R[0, 1], R[1, 1]) if math.hypot(R[0, 1], R[1, 1]) > 1e-9 else math.atan2(R[1, 0], R[0, 0])


class SensorModel:
    """Ground truth corrupted by seeded noise and heading drift.

    Stands in for the onboard IMU, optical flow, barometer and estimator.
    """

    def __init__(self, noise: NoiseConfig, seed: int = 0, rate: float = 200.0):
        self.noise = noise
        self.rng = np.random.default_rng(seed)
        self.dt = 1.0 / rate
        self.yaw_drift = 0.0
        self._last_t: float | None = None

    def observe(self, state: VehicleState, t: float) -> Observation:
        n = self.noise
        rng = self.rng
        if self._last_t is not None:
            if t <= self._last_t:
                raise ValueError("observation timestamps must increase")
            dt = t - self._last_t
            self.yaw_drift += n.yaw_drift_rate * dt
            if n.yaw_walk:
                self.yaw_drift += n.yaw_walk * math.sqrt(dt) * rng.standard_normal()
        self._last_t = t

        R = state.R
        if n.attitude:
            R = R @ axis_angle_vec(n.attitude * rng.standard_normal(3))
        if self.yaw_drift:
            R = rot_z(self.yaw_drift) @ R
        omega = state.omega + np.asarray(n.gyro_bias, dtype=float)
        if n.gyro:
            omega = omega + n.gyro * rng.standard_normal(3)
        p = state.p + (n.position * rng.standard_normal(3) if n.position else 0.0)
        v = state.v + (n.velocity * rng.standard_normal(3) if n.velocity else 0.0)
        alt = float(state.p[2] + (n.altitude * rng.standard_normal() if n.altitude else 0.0))
        if state.p[2] <= n.flow_max_altitude:
            v_flow = state.v[:2] + (n.flow * rng.standard_normal(2) if n.flow else 0.0)
        else:
            v_flow = np.full(2, np.nan)
        return Observation(t, np.array(R, dtype=float), np.asarray(omega, dtype=float), np.asarray(p, dtype=float),
                           np.asarray(v, dtype=float), np.asarray(v_flow, dtype=float), alt)


def axis_angle_vec(rv) -> np.ndarray:
    """Rotation for a rotation vector (axis times angle)."""
    rv = np.asarray(rv, dtype=float)
    angle = float(np.linalg.norm(rv))
    if angle < 1e-15:
        return np.eye(3)
    return axis_angle(rv / angle, angle)


class YawDisturbance:
    """Yaw torque from assembly imbalance: constant plus a seeded random walk."""

    def __init__(self, constant: float = 0.0, walk: float = 0.0, seed: int = 0):
        self.constant = constant
        self.walk = walk
        self.rng = np.random.default_rng(seed)
        self.value = constant

    def step(self, dt: float) -> float:
        if self.walk:
            self.value += self.walk * math.sqrt(dt) * self.rng.standard_normal()
        return self.value


def mechanical_energy(state: VehicleState, params: VehicleParams) -> float:
    return 0.5 * params.mass * float(state.v @ state.v) + params.weight * float(state.p[2])


def world_angular_momentum(state: VehicleState, params: VehicleParams) -> np.ndarray:
    return state.R @ (params.I @ state.omega)
