"""Analytic reference trajectories with derivatives up to jerk."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import OutOfDomain
from .se3 import FlatTarget

KINDS = ("hover", "line", "circle", "waypoints", "obstacle-cross")


def min_jerk(tau: float) -> tuple[float, float, float, float]:
    """Quintic rest-to-rest profile s(tau) on [0, 1] and its first three derivatives in tau."""
    t2 = tau * tau
    t3 = t2 * tau
    s = t3 * (10.0 - 15.0 * tau + 6.0 * t2)
    ds = 30.0 * t2 * (1.0 - tau) ** 2
    dds = 60.0 * tau - 180.0 * t2 + 120.0 * t3
    ddds = 60.0 - 360.0 * tau + 360.0 * t2
    return s, ds, dds, ddds


def _segment(p0: np.ndarray, p1: np.ndarray, T: float, t: float):
    tau = min(max(t / T, 0.0), 1.0)
    s, ds, dds, ddds = min_jerk(tau)
    d = p1 - p0
    return p0 + s * d, (ds / T) * d, (dds / T**2) * d, (ddds / T**3) * d


@dataclass
class TrajectorySpec:
    kind: str = "hover"
    duration: float = 10.0
    start: tuple = (0.0, 0.0, 1.0)
    end: tuple = (1.0, 0.0, 1.0)
    center: tuple = (0.0, 0.0, 1.0)
    radius: float = 0.5
    omega: float = 1.0
    waypoints: list = field(default_factory=list)
    speed: float = 0.5  # peak speed of each waypoint segment, m/s
    blend_time: float = 1.0  # shortest allowed segment, s
    altitude: float = 0.5
    obstacle_x: float = 1.0
    obstacle_height: float = 0.8
    clearance: float = 0.2

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"violated invariant: trajectory kind in {KINDS}")
        if not self.duration > 0:
            raise ValueError("violated invariant: duration > 0")
        if self.kind == "circle" and not self.radius > 0:
            raise ValueError("violated invariant: radius > 0")
        if self.kind == "waypoints" and len(self.waypoints) < 2:
            raise ValueError("violated invariant: at least two waypoints")
        if self.kind in ("waypoints", "obstacle-cross") and not (self.speed > 0 and self.blend_time > 0):
            raise ValueError("violated invariant: speed > 0 and blend_time > 0")


class Trajectory:
    """Base class: subclasses implement ``_eval(t) -> (p, v, a, j)``."""

    def __init__(self, duration: float):
        self.duration = float(duration)

    def sample(self, t: float) -> FlatTarget:
        if t < 0.0 or t > self.duration:
            raise OutOfDomain(f"t={t} outside [0, {self.duration}]")
        p, v, a, j = self._eval(t)
        return FlatTarget(np.array(p, dtype=float), np.array(v, dtype=float), np.array(a, dtype=float), np.array(j, dtype=float))

    def clamped(self, t: float) -> FlatTarget:
        """Sample with ``t`` clipped to the domain (holds the end state)."""
        return self.sample(min(max(t, 0.0), self.duration))

    @property
    def initial_position(self) -> np.ndarray:
        return self.sample(0.0).p

    def _eval(self, t):
        raise NotImplementedError


class Hover(Trajectory):
    def __init__(self, p, duration: float):
        super().__init__(duration)
        self.p = np.array(p, dtype=float)

    def _eval(self, t):
        z = np.zeros(3)
        return self.p, z, z, z


class Line(Trajectory):
    """Rest-to-rest minimum-jerk move between two points."""

    def __init__(self, start, end, duration: float):
        super().__init__(duration)
        self.start = np.array(start, dtype=float)
        self.end = np.array(end, dtype=float)

    def _eval(self, t):
        return _segment(self.start, self.end, self.duration, t)

    @property
    def peak_speed(self) -> float:
        return 1.875 * float(np.linalg.norm(self.end - self.start)) / self.duration


class Circle(Trajectory):
    def __init__(self, center, radius: float, omega: float, duration: float):
        super().__init__(duration)
        self.center = np.array(center, dtype=float)
        self.radius = float(radius)
        self.omega = float(omega)

    def _eval(self, t):
        r, w = self.radius, self.omega
        c, s = math.cos(w * t), math.sin(w * t)
        p = self.center + r * np.array([c, s, 0.0])
        v = r * w * np.array([-s, c, 0.0])
        a = -r * w * w * np.array([c, s, 0.0])
        j = r * w**3 * np.array([s, -c, 0.0])
        return p, v, a, j


class Waypoints(Trajectory):
    """Minimum-jerk segments through each waypoint, stopping at every one.

    Velocity and acceleration vanish at the joins, so the path is C2 with
    piecewise-continuous jerk. After the last segment the end point is held.
    """

    def __init__(self, points, speed: float, blend_time: float, duration: float | None = None):
        self.points = [np.array(p, dtype=float) for p in points]
        self.times = []
        for a, b in zip(self.points[:-1], self.points[1:]):
            d = float(np.linalg.norm(b - a))
            self.times.append(max(blend_time, 1.875 * d / speed))
        self.knots = np.concatenate(([0.0], np.cumsum(self.times)))
        super().__init__(duration if duration is not None else float(self.knots[-1]))

    def _eval(self, t):
        k = int(np.searchsorted(self.knots, t, side="right") - 1)
        if k >= len(self.times):
            z = np.zeros(3)
            return self.points[-1], z, z, z
        return _segment(self.points[k], self.points[k + 1], self.times[k], t - self.knots[k])


def obstacle_cross_points(spec: TrajectorySpec) -> list:
    """Approach at cruise altitude, climb over the obstacle, descend and continue."""
    h0 = spec.altitude
    top = spec.obstacle_height + spec.clearance
    xo = spec.obstacle_x
    return [
        (0.0, 0.0, h0),
        (xo - 0.5, 0.0, h0),
        (xo - 0.2, 0.0, top),
        (xo + 0.2, 0.0, top),
        (xo + 0.5, 0.0, h0),
        (xo + 1.0, 0.0, h0),
    ]


def build(spec: TrajectorySpec) -> Trajectory:
    spec.validate()
    if spec.kind == "hover":
        return Hover(spec.start, spec.duration)
    if spec.kind == "line":
        return Line(spec.start, spec.end, spec.duration)
    if spec.kind == "circle":
        return Circle(spec.center, spec.radius, spec.omega, spec.duration)
    if spec.kind == "waypoints":
        traj = Waypoints(spec.waypoints, spec.speed, spec.blend_time)
    else:
        traj = Waypoints(obstacle_cross_points(spec), spec.speed, spec.blend_time)
    traj.duration = max(traj.duration, spec.duration)
    return traj


def sample(spec: TrajectorySpec, t: float) -> FlatTarget:
    return build(spec).sample(t)
