"""Cascaded PID benchmark controller.

Inner cascade (100 Hz): angle PID -> body-rate setpoint -> rate PID -> torque.
Outer cascade (50 Hz): position PID -> velocity setpoint -> velocity PID ->
world acceleration, rotated into the yaw frame by the observed heading and
mapped onto pitch/roll setpoints. Altitude follows the same position/velocity
pair and sets collective thrust. There is no yaw loop.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import numpy as np

from .actuation import ControlWrench, VehicleParams
from .geom import VehicleState, rotation_to_euler_zxy


def _clip(x: float, lim: float) -> float:
    return max(-lim, min(lim, x))


@dataclass
class LoopGains:
    kp: float
    ki: float = 0.0
    kd: float = 0.0
    out_limit: float = math.inf
    int_limit: float = math.inf

    def __post_init__(self):
        if self.ki < 0:
            raise ValueError("violated invariant: ki >= 0")
        if not (self.out_limit > 0 and self.int_limit > 0):
            raise ValueError("violated invariant: limits positive")


@dataclass
class LoopState:
    integral: float = 0.0  # already multiplied by ki
    prev_meas: float | None = None


def pid_update(g: LoopGains, s: LoopState, error: float, measurement: float, dt: float) -> float:
    """PID with derivative on measurement and a clamped integrator (mutates ``s``)."""
    s.integral = _clip(s.integral + g.ki * error * dt, g.int_limit)
    d = 0.0
    if s.prev_meas is not None:
        d = -(measurement - s.prev_meas) / dt
    s.prev_meas = measurement
    return _clip(g.kp * error + s.integral + g.kd * d, g.out_limit)


@dataclass
class PidGains:
    rate: LoopGains = field(default_factory=lambda: LoopGains(1.2e-3, 2e-3, 0.0, out_limit=4e-3, int_limit=1e-3))
    angle: LoopGains = field(default_factory=lambda: LoopGains(9.0, 0.0, 0.0, out_limit=8.0))
    velocity: LoopGains = field(default_factory=lambda: LoopGains(3.0, 1.0, 0.0, out_limit=4.0, int_limit=1.0))
    position: LoopGains = field(default_factory=lambda: LoopGains(1.5, 0.0, 0.0, out_limit=1.0))
    altitude_velocity: LoopGains = field(default_factory=lambda: LoopGains(4.0, 2.0, 0.0, out_limit=5.0, int_limit=2.0))
    altitude: LoopGains = field(default_factory=lambda: LoopGains(2.0, 0.0, 0.0, out_limit=1.0))
    max_tilt: float = math.radians(30.0)
    position_divider: int = 2


AXES = ("x", "y", "z")


@dataclass
class PidState:
    loops: dict = field(default_factory=dict)
    tick: int = 0
    attitude_sp: "AttitudeSetpoint | None" = None

    def loop(self, name: str) -> LoopState:
        return self.loops.setdefault(name, LoopState())

    def reset(self) -> None:
        self.loops.clear()
        self.tick = 0
        self.attitude_sp = None

    def copy(self) -> "PidState":
        return copy.deepcopy(self)


@dataclass
class AttitudeSetpoint:
    roll: float
    pitch: float
    thrust: float


@dataclass
class PositionSetpoint:
    p: np.ndarray
    v_ff: np.ndarray = field(default_factory=lambda: np.zeros(3))


def _euler(state: VehicleState):
    e = rotation_to_euler_zxy(state.R)
    return e.roll, e.pitch, e.yaw


def pid_position_step(
    state: VehicleState,
    setpoint: PositionSetpoint,
    pid_state: PidState,
    dt: float,
    gains: PidGains,
    params: VehicleParams,
    psi_s: float | None = None,
) -> AttitudeSetpoint:
    """Outer cascade. ``psi_s`` defaults to the yaw of ``state``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    roll, pitch, yaw = _euler(state)
    psi = yaw if psi_s is None else psi_s
    acc = np.zeros(3)
    for i, ax in enumerate(AXES):
        pos_g = gains.altitude if ax == "z" else gains.position
        vel_g = gains.altitude_velocity if ax == "z" else gains.velocity
        v_sp = pid_update(pos_g, pid_state.loop("pos_" + ax), setpoint.p[i] - state.p[i], state.p[i], dt)
        v_sp += setpoint.v_ff[i]
        acc[i] = pid_update(vel_g, pid_state.loop("vel_" + ax), v_sp - state.v[i], state.v[i], dt)
    # world -> yaw frame C
    c, s = math.cos(psi), math.sin(psi)
    a_cx = c * acc[0] + s * acc[1]
    a_cy = -s * acc[0] + c * acc[1]
    g = params.gravity
    # Z_B ~ (sin(pitch), -sin(roll), 1) in C for small angles
    pitch_sp = _clip(math.atan2(a_cx, g), gains.max_tilt)
    roll_sp = _clip(math.atan2(-a_cy, g), gains.max_tilt)
    tilt = max(math.cos(roll) * math.cos(pitch), 0.5)
    thrust = max(0.0, params.mass * (g + acc[2]) / tilt)
    return AttitudeSetpoint(roll_sp, pitch_sp, thrust)


def pid_attitude_step(
    state: VehicleState,
    sp: AttitudeSetpoint,
    pid_state: PidState,
    dt: float,
    gains: PidGains,
) -> ControlWrench:
    """Inner cascade; returns thrust passthrough plus roll/pitch torques, no yaw torque."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    roll, pitch, _ = _euler(state)
    p_sp = pid_update(gains.angle, pid_state.loop("angle_roll"), sp.roll - roll, roll, dt)
    q_sp = pid_update(gains.angle, pid_state.loop("angle_pitch"), sp.pitch - pitch, pitch, dt)
    u2 = pid_update(gains.rate, pid_state.loop("rate_p"), p_sp - state.omega[0], state.omega[0], dt)
    u3 = pid_update(gains.rate, pid_state.loop("rate_q"), q_sp - state.omega[1], state.omega[1], dt)
    return ControlWrench(sp.thrust, u2, u3, 0.0)


class PidController:
    """Runs both cascades at their own rates; call once per control tick."""

    def __init__(self, gains: PidGains, params: VehicleParams, dt: float):
        self.gains = gains
        self.params = params
        self.dt = dt
        self.state = PidState()

    def reset(self) -> None:
        self.state.reset()

    def __call__(self, state: VehicleState, setpoint: PositionSetpoint, psi_s: float | None = None) -> ControlWrench:
        st = self.state
        if st.attitude_sp is None or st.tick % self.gains.position_divider == 0:
            st.attitude_sp = pid_position_step(
                state, setpoint, st, self.dt * self.gains.position_divider, self.gains, self.params, psi_s
            )
        st.tick += 1
        return pid_attitude_step(state, st.attitude_sp, st, self.dt, self.gains)
