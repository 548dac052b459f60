"""Geometric tracking controller on SE(3) without yaw actuation.

Position is the flat output. Heading is never commanded: the observed yaw
sample fixes the desired body axes, and the yaw-torque channel produced by the
attitude law is computed but dropped before allocation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .actuation import ControlWrench, VehicleParams
from .errors import AttitudeSingular, DegenerateForce, ThrustTooLow
from .geom import VehicleState, vee, yaw_frame_x

E3 = np.array([0.0, 0.0, 1.0])
SINGULAR_TOL = 1e-6
THRUST_EPS = 1e-6


@dataclass
class FlatTarget:
    p: np.ndarray
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    a: np.ndarray = field(default_factory=lambda: np.zeros(3))
    j: np.ndarray = field(default_factory=lambda: np.zeros(3))
    psi: float = 0.0  # observed yaw sample, filled in by the caller
    psi_dot: float = 0.0

    @classmethod
    def hover(cls, p) -> "FlatTarget":
        return cls(np.array(p, dtype=float))


def _diag(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return np.diag([float(x)] * 3)
    if x.ndim == 1:
        return np.diag(x)
    return x


@dataclass
class GainSet:
    kp: np.ndarray
    kv: np.ndarray
    kR: np.ndarray
    kw: np.ndarray

    def __post_init__(self):
        self.kp, self.kv, self.kR, self.kw = (_diag(g) for g in (self.kp, self.kv, self.kR, self.kw))
        for name in ("kp", "kv", "kR", "kw"):
            if not np.all(np.diag(getattr(self, name)) > 0):
                raise ValueError(f"violated invariant: {name} diagonal entries > 0")

    @classmethod
    def default(cls) -> "GainSet":
        return cls(kp=DEFAULT_GAINS["kp"], kv=DEFAULT_GAINS["kv"], kR=DEFAULT_GAINS["kR"], kw=DEFAULT_GAINS["kw"])


DEFAULT_GAINS = {
    "kp": [2.0, 2.0, 2.0],
    "kv": [1.2, 1.2, 1.2],
    "kR": [0.02, 0.02, 0.02],
    "kw": [0.004, 0.004, 0.004],
}


def desired_force(state: VehicleState, target: FlatTarget, gains: GainSet, params: VehicleParams):
    """Return ``(F_des, u1, Z_B_des)``; ``u1`` projects onto the current body Z axis."""
    e_p = state.p - target.p
    e_v = state.v - target.v
    F = -gains.kp @ e_p - gains.kv @ e_v + params.weight * E3 + params.mass * np.asarray(target.a, dtype=float)
    norm = float(np.linalg.norm(F))
    if norm < 1e-9:
        raise DegenerateForce("desired force vanishes (free-fall command)")
    u1 = float(F @ state.R[:, 2])
    return F, u1, F / norm


def desired_attitude(z_b_des, psi_s: float) -> np.ndarray:
    """Desired rotation with columns X_B,des, Y_B,des, Z_B,des."""
    z = np.asarray(z_b_des, dtype=float)
    x_c = yaw_frame_x(psi_s)
    y = np.cross(z, x_c)
    n = float(np.linalg.norm(y))
    if n <= SINGULAR_TOL:
        raise AttitudeSingular("desired thrust axis is parallel to the sampled heading")
    y /= n
    x = np.cross(y, z)
    return np.column_stack((x, y, z))


def flatness_rates(target: FlatTarget, u1: float, z_b, x_b, y_b, params: VehicleParams, eps: float = THRUST_EPS):
    """Feed-forward body rates ``(p, q, r)`` from the reference jerk and observed yaw rate."""
    if u1 <= eps:
        raise ThrustTooLow(f"thrust {u1:.3g} N too low for rate feed-forward")
    z_b = np.asarray(z_b, dtype=float)
    jerk = np.asarray(target.j, dtype=float)
    h_w = (params.mass / u1) * (jerk - float(z_b @ jerk) * z_b)
    p = -float(h_w @ y_b)
    q = float(h_w @ x_b)
    r = target.psi_dot * float(E3 @ z_b)
    return p, q, r


def attitude_errors(R, R_des, omega, omega_des):
    R = np.asarray(R, dtype=float)
    R_des = np.asarray(R_des, dtype=float)
    E = R_des.T @ R - R.T @ R_des
    # exact antisymmetrization so round-off never trips the vee guard
    e_R = 0.5 * vee(0.5 * (E - E.T))
    e_w = np.asarray(omega, dtype=float) - np.asarray(omega_des, dtype=float)
    return e_R, e_w


def control_torques(e_R, e_w, gains: GainSet):
    """Return ``(u2, u3, M_Z_cmd)``. The yaw entry has no actuator behind it."""
    t = -gains.kR @ np.asarray(e_R) - gains.kw @ np.asarray(e_w)
    return float(t[0]), float(t[1]), float(t[2])


@dataclass
class Se3Options:
    feedforward_rates: bool = True
    yaw_rate_source: str = "observed"  # or "zero"


@dataclass
class Se3Output:
    wrench: ControlWrench  # wrench.mz carries the discarded yaw command
    F_des: np.ndarray
    R_des: np.ndarray
    omega_des: np.ndarray
    e_R: np.ndarray
    e_w: np.ndarray


def se3_step(
    state: VehicleState,
    target: FlatTarget,
    gains: GainSet,
    params: VehicleParams,
    options: Se3Options | None = None,
    fallback_R_des: np.ndarray | None = None,
) -> Se3Output:
    """One evaluation of the full geometric law.

    ``state`` may be ground truth or an observation converted with
    ``Observation.as_state``. If the desired attitude is singular and
    ``fallback_R_des`` is given it is used instead; otherwise the error
    propagates.
    """
    opts = options or Se3Options()
    F, u1, z_des = desired_force(state, target, gains, params)
    try:
        R_des = desired_attitude(z_des, target.psi)
    except AttitudeSingular:
        if fallback_R_des is None:
            raise
        R_des = fallback_R_des
    if opts.feedforward_rates:
        tgt = target
        if opts.yaw_rate_source == "zero":
            tgt = FlatTarget(target.p, target.v, target.a, target.j, target.psi, 0.0)
        omega_des = np.array(flatness_rates(tgt, max(u1, 2 * THRUST_EPS), R_des[:, 2], R_des[:, 0], R_des[:, 1], params))
    else:
        omega_des = np.zeros(3)
    e_R, e_w = attitude_errors(state.R, R_des, state.omega, omega_des)
    u2, u3, mz_cmd = control_torques(e_R, e_w, gains)
    return Se3Output(ControlWrench(u1, u2, u3, mz_cmd), F, R_des, omega_des, e_R, e_w)


class Se3Controller:
    """Holds the one piece of memory the law needs: the last valid desired attitude."""

    def __init__(self, gains: GainSet, params: VehicleParams, options: Se3Options | None = None):
        self.gains = gains
        self.params = params
        self.options = options or Se3Options()
        self.last_R_des: np.ndarray | None = None
        self.mz_discarded = 0
        self.singular_holds = 0

    def reset(self) -> None:
        self.last_R_des = None
        self._held = False

    def __call__(self, state: VehicleState, target: FlatTarget) -> Se3Output:
        try:
            out = se3_step(state, target, self.gains, self.params, self.options)
            self._held = False
        except AttitudeSingular:
            if self.last_R_des is None or getattr(self, "_held", False):
                raise
            out = se3_step(state, target, self.gains, self.params, self.options, fallback_R_des=self.last_R_des)
            self._held = True
            self.singular_holds += 1
        self.last_R_des = out.R_des
        if out.wrench.mz != 0.0:
            self.mz_discarded += 1
        return out
