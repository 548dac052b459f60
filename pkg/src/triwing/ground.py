"""Ground locomotion: calibrated crawl kinematics and the differential-steering controller.

The elastic-leg vibration physics is replaced by a unicycle map. Mean flap
frequency of the left and right modules sets forward speed (never negative),
their difference sets yaw rate; more right-module output turns the body
counter-clockwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .actuation import VehicleParams, crawl_frequency_cap
from .errors import CoincidentTarget
from .geom import wrap_angle
from .pid import LoopGains, LoopState, pid_update

V_MAX = 0.054
COINCIDENT_EPS = 1e-9


@dataclass(frozen=True)
class CrawlParams:
    f_crawl_max: float
    c_v: float
    c_omega: float = 0.12
    v_max: float = V_MAX

    @classmethod
    def from_vehicle(cls, params: VehicleParams, c_omega: float = 0.12, v_max: float = V_MAX) -> "CrawlParams":
        """Cap at the half-hover-throttle frequency; both modules at the cap give ``v_max``."""
        f_cap = crawl_frequency_cap(params)
        return cls(f_crawl_max=f_cap, c_v=v_max / f_cap, c_omega=c_omega, v_max=v_max)

    def validate(self) -> None:
        if not (self.c_v > 0 and self.c_omega > 0):
            raise ValueError("violated invariant: c_v > 0 and c_omega > 0")
        if not (self.f_crawl_max > 0 and self.v_max > 0):
            raise ValueError("violated invariant: f_crawl_max > 0 and v_max > 0")


@dataclass
class CrawlState:
    x: float = 0.0
    y: float = 0.0
    psi: float = 0.0
    grounded: bool = True
    speed: float = 0.0
    yaw_rate: float = 0.0


def crawl_rates(f_left: float, f_right: float, params: CrawlParams) -> tuple[float, float]:
    """Forward speed (m/s) and yaw rate (rad/s) for a pair of flap frequencies."""
    tol = 1e-9
    for f in (f_left, f_right):
        if f < -tol or f > params.f_crawl_max + tol:
            raise ValueError(f"crawl frequency {f:.4g} Hz outside [0, {params.f_crawl_max:.4g}]")
    v = min(params.c_v * 0.5 * (f_left + f_right), params.v_max)
    return max(v, 0.0), params.c_omega * (f_right - f_left)


def crawl_kinematics(f_left: float, f_right: float, params: CrawlParams, state: CrawlState, dt: float) -> CrawlState:
    v, r = crawl_rates(f_left, f_right, params)
    # exact for constant heading rate over the step to second order
    mid = state.psi + 0.5 * r * dt
    return CrawlState(
        x=state.x + v * math.cos(mid) * dt,
        y=state.y + v * math.sin(mid) * dt,
        psi=wrap_angle(state.psi + r * dt),
        grounded=True,
        speed=v,
        yaw_rate=r,
    )


def target_yaw(pos, target) -> float:
    dx = target[0] - pos[0]
    dy = target[1] - pos[1]
    if math.hypot(dx, dy) < COINCIDENT_EPS:
        raise CoincidentTarget("target coincides with current position")
    return math.atan2(dy, dx)


@dataclass
class CrawlGains:
    # output limits at half the crawl cap keep the differential term from being clipped away
    distance: LoopGains = field(default_factory=lambda: LoopGains(200.0, 0.0, 0.0, out_limit=2.25))
    yaw: LoopGains = field(default_factory=lambda: LoopGains(20.0, 0.0, 0.0, out_limit=2.25))


@dataclass
class CrawlPidState:
    distance: LoopState = field(default_factory=LoopState)
    yaw: LoopState = field(default_factory=LoopState)
    last_target_yaw: float | None = None

    def reset(self) -> None:
        self.distance = LoopState()
        self.yaw = LoopState()
        self.last_target_yaw = None


def crawl_controller_step(
    state: CrawlState,
    target,
    gains: CrawlGains,
    pid_state: CrawlPidState,
    dt: float,
    params: CrawlParams,
) -> tuple[float, float]:
    """Dual-layer PID; returns ``(f_left, f_right)`` clamped to ``[0, f_crawl_max]``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    d = math.hypot(target[0] - state.x, target[1] - state.y)
    try:
        psi_t = target_yaw((state.x, state.y), target)
    except CoincidentTarget:
        psi_t = state.psi if pid_state.last_target_yaw is None else pid_state.last_target_yaw
    pid_state.last_target_yaw = psi_t
    o_d = pid_update(gains.distance, pid_state.distance, d, -d, dt)
    yaw_err = wrap_angle(psi_t - state.psi)
    o_psi = pid_update(gains.yaw, pid_state.yaw, yaw_err, -yaw_err, dt)
    f_right = min(max(o_d + o_psi, 0.0), params.f_crawl_max)
    f_left = min(max(o_d - o_psi, 0.0), params.f_crawl_max)
    return f_left, f_right


def figure_eight_reference(t: float, amplitude: float, period: float) -> tuple[float, float]:
    """Gerono lemniscate through the origin; lobes reach ``x = +/- amplitude``."""
    if period <= 0:
        raise ValueError("period must be positive")
    w = 2.0 * math.pi * t / period
    return amplitude * math.sin(w), 0.5 * amplitude * math.sin(2.0 * w)


def figure_eight_peak_speed(amplitude: float, period: float) -> float:
    # |d/dt| = A w sqrt(cos^2 + cos^2 2) peaks at the crossover
    return math.sqrt(2.0) * amplitude * 2.0 * math.pi / period


def cross_track_error(x: float, y: float, path: np.ndarray) -> float:
    """Distance from ``(x, y)`` to a densely sampled polyline ``path`` (N x 2)."""
    a = path[:-1]
    b = path[1:]
    ab = b - a
    ap = np.array([x, y]) - a
    denom = np.einsum("ij,ij->i", ab, ab)
    t = np.clip(np.einsum("ij,ij->i", ap, ab) / np.where(denom > 0, denom, 1.0), 0.0, 1.0)
    closest = a + t[:, None] * ab
    return float(np.min(np.hypot(*(closest - np.array([x, y])).T)))


def thin_polyline(path: np.ndarray, max_points: int = 2000) -> np.ndarray:
    """Keep roughly evenly spaced vertices (by arc length), endpoints included."""
    path = np.asarray(path, dtype=float)
    if len(path) <= max_points:
        return path
    s = np.r_[0.0, np.cumsum(np.hypot(*np.diff(path, axis=0).T))]
    if s[-1] == 0.0:
        return path[[0, -1]]
    idx = np.searchsorted(s, np.linspace(0.0, s[-1], max_points))
    return path[np.unique(np.r_[0, np.clip(idx, 0, len(path) - 1), len(path) - 1])]


def cross_track_errors(xy: np.ndarray, path: np.ndarray, chunk: int = 512) -> np.ndarray:
    """Vectorised :func:`cross_track_error` for an M x 2 array of positions."""
    xy = np.atleast_2d(np.asarray(xy, dtype=float))
    a, ab = path[:-1], np.diff(path, axis=0)
    denom = np.einsum("ij,ij->i", ab, ab)
    denom = np.where(denom > 0, denom, 1.0)
    out = np.empty(len(xy))
    for i in range(0, len(xy), chunk):
        ap = xy[i : i + chunk, None, :] - a[None]
        t = np.clip(np.einsum("mij,ij->mi", ap, ab) / denom, 0.0, 1.0)
        d = ap - t[..., None] * ab[None]
        out[i : i + chunk] = np.sqrt(np.min(np.einsum("mij,mij->mi", d, d), axis=1))
    return out
