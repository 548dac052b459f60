"""Flapping-module actuator models and control allocation.

Module layout (body frame): the back module sits on +X_B at distance L, the
left and right modules at ``(-L cos a, -/+ L sin a, 0)``. Each module produces
cycle-averaged lift ``k_F * f`` along Z_B, which gives the allocation

    [u1]   [ k_F         k_F              k_F          ] [f1]
    [u2] = [ 0          -sin(a) k_F L     sin(a) k_F L ] [f2]
    [u3]   [-k_F L       cos(a) k_F L     cos(a) k_F L ] [f3]

with f1, f2, f3 the back, left and right flap frequencies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BatteryEmpty, OutOfEnvelope, SingularAllocation

GRAVITY = 9.81

# Throttle -> frequency fit, f = A thr^2 + B thr + C (Hz)
THR_A = -41.56
THR_B = 80.69
THR_C = -14.64
THR_VERTEX = -THR_B / (2.0 * THR_A)
FIT_F_MAX = THR_A * THR_VERTEX**2 + THR_B * THR_VERTEX + THR_C
THR_DEADBAND = (-THR_B + math.sqrt(THR_B**2 - 4.0 * THR_A * THR_C)) / (2.0 * THR_A)

# 18.1 gf per module at 25.1 Hz
K_F_CALIBRATED = 18.1e-3 * GRAVITY / 25.1
K_F_PUBLISHED_RAW = 0.0195

HOVER_ENDURANCE_MIN = 6.5
CRAWL_ENDURANCE_MIN = 28.0

MODULE_NAMES = ("back", "left", "right")


@dataclass(frozen=True)
class VehicleParams:
    mass: float = 0.0374
    inertia: tuple = ((2.6e-5, 0.0, 0.0), (0.0, 2.6e-5, 0.0), (0.0, 0.0, 4.3e-5))
    arm_length: float = 0.06
    arm_angle: float = math.pi / 3.0
    k_f: float = K_F_CALIBRATED
    f_max: float = 25.1
    thr_range: tuple = (0.0, 1.0)
    battery_capacity: float = 380.0
    # per active module: current_ma = c0 + c1 * f ; None -> calibrated from endurance figures
    power_coeffs: tuple | None = None
    avionics_current: float = 100.0
    gravity: float = GRAVITY

    def __post_init__(self):
        I = np.array(self.inertia, dtype=float)
        object.__setattr__(self, "_I", I)
        self.validate()
        object.__setattr__(self, "_I_inv", np.linalg.inv(I))
        if self.power_coeffs is None:
            object.__setattr__(self, "power_coeffs", calibrate_power_model(self))

    @property
    def I(self) -> np.ndarray:
        return self._I

    @property
    def I_inv(self) -> np.ndarray:
        return self._I_inv

    @property
    def weight(self) -> float:
        return self.mass * self.gravity

    @property
    def hover_frequency(self) -> float:
        return self.weight / (3.0 * self.k_f)

    def validate(self) -> None:
        """Raise ValueError naming the first violated invariant."""
        I = self.I
        checks = [
            (self.mass > 0, "mass > 0"),
            (I.shape == (3, 3), "inertia is 3x3"),
            (np.allclose(I, I.T), "inertia symmetric"),
            (I.shape == (3, 3) and bool(np.all(np.linalg.eigvalsh(0.5 * (I + I.T)) > 0)), "inertia positive definite"),
            (self.arm_length > 0, "arm_length > 0"),
            (abs(math.sin(self.arm_angle)) > 1e-9, "sin(arm_angle) != 0"),
            (self.k_f > 0, "k_f > 0"),
            (self.f_max > 0, "f_max > 0"),
            (len(self.thr_range) == 2, "thr_range has two entries"),
            (self.power_coeffs is None or len(self.power_coeffs) == 2, "power_coeffs has two entries"),
            (0.0 <= self.thr_range[0] < self.thr_range[1] <= 1.0, "0 <= thr_lo < thr_hi <= 1"),
            (self.battery_capacity > 0, "battery_capacity > 0"),
            (self.avionics_current >= 0, "avionics_current >= 0"),
            (self.gravity > 0, "gravity > 0"),
        ]
        for ok, name in checks:
            if not ok:
                raise ValueError(f"violated invariant: {name}")


@dataclass
class ActuatorCommand:
    f: np.ndarray
    saturated: tuple = (False, False, False)

    @classmethod
    def off(cls) -> "ActuatorCommand":
        return cls(np.zeros(3))


@dataclass
class ControlWrench:
    u1: float
    u2: float
    u3: float
    mz: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.u1, self.u2, self.u3])


def allocation_matrix(params: VehicleParams) -> np.ndarray:
    k, L, a = params.k_f, params.arm_length, params.arm_angle
    s, c = math.sin(a), math.cos(a)
    B = np.array(
        [
            [k, k, k],
            [0.0, -s * k * L, s * k * L],
            [-k * L, c * k * L, c * k * L],
        ]
    )
    # closed form of det(B)
    det = -2.0 * k**3 * L**2 * s * (c + 1.0)
    if abs(det) < 1e-12:
        raise SingularAllocation(f"allocation determinant {det:.3e} too small (arm_angle={a})")
    return B


def module_positions(params: VehicleParams) -> np.ndarray:
    """Rows are back, left, right module centres in the body frame."""
    L, a = params.arm_length, params.arm_angle
    return np.array(
        [
            [L, 0.0, 0.0],
            [-L * math.cos(a), -L * math.sin(a), 0.0],
            [-L * math.cos(a), L * math.sin(a), 0.0],
        ]
    )


def forward_mix(cmd: ActuatorCommand | np.ndarray, params: VehicleParams, yaw_imbalance: float = 0.0) -> ControlWrench:
    f = cmd.f if isinstance(cmd, ActuatorCommand) else np.asarray(cmd, dtype=float)
    u = allocation_matrix(params) @ f
    return ControlWrench(float(u[0]), float(u[1]), float(u[2]), float(yaw_imbalance))


def inverse_mix(u: ControlWrench | np.ndarray, params: VehicleParams) -> ActuatorCommand:
    """Solve for flap frequencies, then clamp each to ``[0, f_max]``."""
    B = allocation_matrix(params)
    target = u.as_array() if isinstance(u, ControlWrench) else np.asarray(u, dtype=float)[:3]
    f = np.linalg.solve(B, target)
    clamped = np.clip(f, 0.0, params.f_max)
    saturated = tuple(bool(x) for x in (clamped != f))
    return ActuatorCommand(clamped, saturated)


def throttle_to_frequency(thr: float) -> float:
    """Quadratic throttle fit, zero below the dead band, held at its vertex above it."""
    if thr >= THR_VERTEX:
        return FIT_F_MAX
    return max(0.0, THR_A * thr * thr + THR_B * thr + THR_C)


def frequency_to_throttle(f: float) -> float:
    """Invert the throttle fit on its rising branch ``[THR_DEADBAND, THR_VERTEX]``."""
    if f < 0.0 or f > FIT_F_MAX + 1e-12:
        raise OutOfEnvelope(f"{f:.4g} Hz outside the throttle fit range [0, {FIT_F_MAX:.4f}]")
    disc = THR_B**2 + 4.0 * THR_A * (f - THR_C)
    disc = max(disc, 0.0)
    # A < 0: the rising-branch root is (-B + sqrt(disc)) / (2A) written in a cancellation-free form
    return 2.0 * (THR_C - f) / (-THR_B - math.sqrt(disc))


def command_throttles(cmd: ActuatorCommand) -> np.ndarray:
    """Throttles for telemetry; frequencies above the fit maximum report the vertex throttle."""
    out = np.zeros(3)
    for i, f in enumerate(cmd.f):
        if f > 0.0:
            out[i] = frequency_to_throttle(min(float(f), FIT_F_MAX))
    return out


def crawl_frequency_cap(params: VehicleParams) -> float:
    """Flap frequency at half of the hover throttle (hover clamped to the fit maximum)."""
    return throttle_to_frequency(0.5 * frequency_to_throttle(min(params.hover_frequency, FIT_F_MAX)))


def calibrate_power_model(
    params: VehicleParams,
    hover_minutes: float = HOVER_ENDURANCE_MIN,
    crawl_minutes: float = CRAWL_ENDURANCE_MIN,
) -> tuple[float, float]:
    """Fit ``(c0 [mA], c1 [mA/Hz])`` to the hover and crawl endurance figures.

    Hover runs three modules at the hover frequency, crawl runs two modules at
    the half-hover-throttle frequency. The avionics current is held fixed.
    """
    cap = params.battery_capacity
    base = params.avionics_current
    f_h = params.weight / (3.0 * params.k_f)
    f_c = throttle_to_frequency(0.5 * frequency_to_throttle(min(f_h, FIT_F_MAX)))
    i_hover = cap / (hover_minutes / 60.0) - base
    i_crawl = cap / (crawl_minutes / 60.0) - base
    A = np.array([[3.0, 3.0 * f_h], [2.0, 2.0 * f_c]])
    c0, c1 = np.linalg.solve(A, [i_hover, i_crawl])
    return float(c0), float(c1)


def current_draw(cmd: ActuatorCommand | np.ndarray, params: VehicleParams) -> float:
    """Total battery current in mA."""
    f = cmd.f if isinstance(cmd, ActuatorCommand) else np.asarray(cmd, dtype=float)
    c0, c1 = params.power_coeffs
    total = params.avionics_current
    for fi in f:
        if fi > 0.0:
            total += c0 + c1 * float(fi)
    return total


def battery_drain(cmd: ActuatorCommand | np.ndarray, dt: float, charge: float, params: VehicleParams) -> float:
    """Return the charge (mAh) left after drawing the modeled current for ``dt``.

    Raises :class:`BatteryEmpty` when the charge runs out inside the step; its
    ``time_to_empty`` attribute gives the seconds into the step at which it did.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if charge < 0.0:
        raise ValueError("charge must be non-negative")
    i_ma = current_draw(cmd, params)
    used = i_ma * dt / 3600.0
    if used >= charge:
        err = BatteryEmpty("battery depleted")
        err.time_to_empty = charge / i_ma * 3600.0 if i_ma > 0 else math.inf
        raise err
    return charge - used


def with_published_k_f(params: VehicleParams) -> VehicleParams:
    """Variant using the raw lift coefficient as printed (units unknown)."""
    return replace(params, k_f=K_F_PUBLISHED_RAW, power_coeffs=None)
