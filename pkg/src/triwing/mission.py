"""Mode manager and the closed-loop mission runner.

One vehicle and one set of three flapping modules serve every mode. On the
ground the left and right modules drive the crawl kinematics; in the air the
selected flight controller feeds the allocation; tipped over, the two modules
nearest the ground perform a scripted self-righting slew.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import actuation as act
from .actuation import ActuatorCommand, ControlWrench, VehicleParams
from .dynamics import SensorModel, SimConfig, YawDisturbance, ground_contact, heading, step_dynamics
from .errors import BatteryEmpty, GimbalLock, InvalidTransition, NonFiniteState, SelfRightTimeout, SimDiverged
from .geom import VehicleState, axis_angle, rot_x, rot_y, rot_z, rotation_to_euler_zxy, tilt_from_vertical
from .ground import (
    CrawlGains,
    CrawlParams,
    CrawlPidState,
    CrawlState,
    crawl_controller_step,
    crawl_kinematics,
    figure_eight_reference,
)
from .pid import PidController, PidGains, PositionSetpoint
from .se3 import FlatTarget, GainSet, Se3Controller, Se3Options
from .telemetry import TelemetryLog
from .trajectories import Hover, Line, Trajectory, TrajectorySpec, build, min_jerk


class Mode(str, Enum):
    CRAWL = "Crawl"
    TAKEOFF = "Takeoff"
    FLIGHT = "Flight"
    LANDING = "Landing"
    SELF_RIGHT = "SelfRight"
    GROUNDED = "Grounded"
    DEPLETED = "Depleted"


# edges a plan may request
PLAN_EDGES = {
    (Mode.CRAWL, Mode.TAKEOFF),
    (Mode.FLIGHT, Mode.LANDING),
    (Mode.GROUNDED, Mode.CRAWL),
    (Mode.GROUNDED, Mode.TAKEOFF),
}
# edges taken automatically from the vehicle state
AUTO_EDGES = {
    (Mode.TAKEOFF, Mode.FLIGHT),
    (Mode.LANDING, Mode.GROUNDED),
    (Mode.CRAWL, Mode.SELF_RIGHT),
    (Mode.GROUNDED, Mode.SELF_RIGHT),
    (Mode.SELF_RIGHT, Mode.GROUNDED),
}
ON_GROUND = (Mode.CRAWL, Mode.GROUNDED)
AIRBORNE = (Mode.TAKEOFF, Mode.FLIGHT, Mode.LANDING)


def allowed_edges() -> set:
    edges = PLAN_EDGES | AUTO_EDGES
    edges |= {(m, Mode.DEPLETED) for m in Mode if m is not Mode.DEPLETED}
    return edges


@dataclass(frozen=True)
class ModeThresholds:
    takeoff_altitude: float = 0.2
    landing_descent_rate: float = 0.05
    tipped: float = math.radians(60.0)
    upright: float = math.radians(5.0)


def mode_transition(
    mode: Mode,
    state: VehicleState,
    obs,
    battery: float,
    command: Mode | None = None,
    thresholds: ModeThresholds = ModeThresholds(),
) -> Mode:
    """Next mode from the current one, the vehicle, and an optional plan command.

    Depletion wins over everything and is absorbing. Automatic rules are
    applied before plan commands. A plan command along an edge outside the
    graph raises :class:`InvalidTransition`.
    """
    mode = Mode(mode)
    if mode is Mode.DEPLETED or battery <= 0.0:
        return Mode.DEPLETED
    R = obs.R if obs is not None else state.R
    tilt = tilt_from_vertical(R)
    altitude = obs.altitude if obs is not None else float(state.p[2])
    if mode in ON_GROUND and tilt > thresholds.tipped:
        return Mode.SELF_RIGHT
    if mode is Mode.SELF_RIGHT:
        return Mode.GROUNDED if tilt < thresholds.upright else mode
    if mode is Mode.TAKEOFF and altitude > thresholds.takeoff_altitude:
        return Mode.FLIGHT
    if mode is Mode.LANDING:
        if state.grounded and abs(float(state.v[2])) < thresholds.landing_descent_rate:
            return Mode.GROUNDED
        return mode
    if command is not None and Mode(command) is not mode:
        command = Mode(command)
        if (mode, command) not in PLAN_EDGES:
            raise InvalidTransition(f"{mode.value} -> {command.value} is not a plan transition")
        return command
    return mode


# --- self-righting ---------------------------------------------------------


def modules_nearest_ground(R, params: VehicleParams) -> tuple[int, int]:
    """Indices (0 back, 1 left, 2 right) of the two module centres lowest in the world."""
    z = (np.asarray(R) @ act.module_positions(params).T)[2]
    order = sorted(range(3), key=lambda i: (z[i], i))
    return tuple(sorted(order[:2]))


def _righting_rotation(R0, params: VehicleParams) -> tuple[np.ndarray, float]:
    """Axis (world) and angle that bring Z_B onto Z_W."""
    R0 = np.asarray(R0)
    zb = R0[:, 2]
    angle = tilt_from_vertical(R0)
    axis = np.cross(zb, [0.0, 0.0, 1.0])
    if np.linalg.norm(axis) < 1e-9:
        # fully inverted: roll over the edge between the two grounded modules
        i, j = modules_nearest_ground(R0, params)
        pos = R0 @ act.module_positions(params).T
        edge = pos[:, j] - pos[:, i]
        edge[2] = 0.0
        axis = edge if np.linalg.norm(edge) > 1e-12 else R0[:, 0]
    return axis / np.linalg.norm(axis), angle


def self_right_step(
    start: VehicleState,
    params: VehicleParams,
    t_elapsed: float,
    duration: float = 0.5,
    thresholds: ModeThresholds = ModeThresholds(),
    timeout: float = 0.75,
) -> VehicleState:
    """Pose ``t_elapsed`` seconds into a scripted righting slew from ``start``.

    The tilt is removed along a minimum-jerk profile lasting ``duration``; the
    heading is kept. An upright start is returned unchanged.
    """
    if tilt_from_vertical(start.R) < thresholds.upright:
        return start.copy()
    axis, angle = _righting_rotation(start.R, params)
    s = min_jerk(min(max(t_elapsed / duration, 0.0), 1.0))[0]
    R = axis_angle(axis, s * angle) @ start.R
    out = VehicleState(np.array([start.p[0], start.p[1], 0.0]), np.zeros(3), R, np.zeros(3), True)
    if t_elapsed > timeout and tilt_from_vertical(R) >= thresholds.upright:
        raise SelfRightTimeout(f"still tipped {math.degrees(tilt_from_vertical(R)):.1f} deg after {t_elapsed:.2f} s")
    return out


# --- plans -----------------------------------------------------------------

PHASE_KINDS = ("crawl_to", "crawl_path", "crawl_open", "takeoff", "hover", "track", "land", "selfright", "idle")
# phases that end on a condition rather than a duration; only these can time out
CONDITION_PHASES = ("crawl_to", "takeoff", "land", "selfright")


@dataclass
class Phase:
    kind: str
    duration: float | None = None
    timeout: float = 120.0  # condition phases only
    target: tuple | None = None  # crawl_to: absolute (x, y)
    distance: float | None = None  # crawl_to: along the current heading
    tolerance: float = 0.02
    altitude: float = 1.0
    climb_time: float = 3.0
    descent_time: float = 4.0
    position: tuple | None = None  # hover
    trajectory: TrajectorySpec | None = None  # track
    amplitude: float = 0.3  # crawl_path
    period: float = 100.0
    f_left: float | None = None  # crawl_open; None -> crawl cap
    f_right: float | None = None

    def validate(self) -> None:
        if self.kind not in PHASE_KINDS:
            raise ValueError(f"violated invariant: phase kind in {PHASE_KINDS}")
        if not (self.timeout is not None and self.timeout > 0):
            raise ValueError("violated invariant: phase timeout > 0")
        if self.kind == "crawl_to" and self.target is None and self.distance is None:
            raise ValueError("violated invariant: crawl_to needs target or distance")
        if self.kind == "track" and self.trajectory is None:
            raise ValueError("violated invariant: track needs a trajectory")
        if self.kind in ("hover", "crawl_open", "idle") and self.duration is None:
            raise ValueError(f"violated invariant: {self.kind} needs a duration")
        if self.kind == "crawl_path" and not self.period > 0:
            raise ValueError("violated invariant: period > 0")
        if self.trajectory is not None:
            self.trajectory.validate()


@dataclass
class MissionPlan:
    phases: list
    initial_mode: Mode = Mode.GROUNDED
    initial_position: tuple = (0.0, 0.0, 0.0)
    initial_yaw: float = 0.0
    initial_roll: float = 0.0
    initial_pitch: float = 0.0
    initial_battery: float | None = None  # mAh; None -> full

    def validate(self) -> None:
        if not self.phases:
            raise ValueError("violated invariant: plan has at least one phase")
        for p in self.phases:
            p.validate()
        Mode(self.initial_mode)


@dataclass
class ControllerConfig:
    type: str = "se3"
    se3_gains: GainSet = field(default_factory=GainSet.default)
    se3_options: Se3Options = field(default_factory=Se3Options)
    pid_gains: PidGains = field(default_factory=PidGains)


@dataclass
class MissionConfig:
    params: VehicleParams = field(default_factory=VehicleParams)
    sim: SimConfig = field(default_factory=SimConfig)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    crawl: CrawlParams | None = None
    crawl_gains: CrawlGains = field(default_factory=CrawlGains)
    thresholds: ModeThresholds = field(default_factory=ModeThresholds)
    max_duration: float | None = None
    self_right_duration: float = 0.5
    saturation_warn_time: float = 1.0


@dataclass
class MissionResult:
    log: TelemetryLog
    status: str  # completed | depleted | timeout | max_duration
    endurance: float | None
    mode_timeline: list

    @property
    def mode_sequence(self) -> list:
        return [m for _, m in self.mode_timeline]


# --- runner ----------------------------------------------------------------


def _safe_euler(R) -> tuple[float, float, float]:
    try:
        e = rotation_to_euler_zxy(R)
        return e.roll, e.pitch, e.yaw
    except GimbalLock:
        return math.copysign(math.pi / 2, R[2, 1]), 0.0, math.atan2(R[1, 0], R[0, 0])


class MissionRunner:
    def __init__(self, plan: MissionPlan, cfg: MissionConfig):
        plan.validate()
        cfg.params.validate()
        cfg.sim.validate()
        self.plan = plan
        self.cfg = cfg
        self.params = cfg.params
        self.crawl_params = cfg.crawl or CrawlParams.from_vehicle(cfg.params)
        self.crawl_params.validate()
        self.dt_c = 1.0 / cfg.sim.control_rate
        self.n_sub = cfg.sim.physics_per_control
        self.dt_p = self.dt_c / self.n_sub
        self.sensor_every = cfg.sim.physics_per_sensor

        seeds = np.random.SeedSequence(cfg.sim.seed).spawn(2)
        self.sensors = SensorModel(cfg.sim.noise, int(seeds[0].generate_state(1)[0]), cfg.sim.sensor_rate)
        self.disturbance = YawDisturbance(
            cfg.sim.yaw_imbalance, cfg.sim.yaw_imbalance_walk, int(seeds[1].generate_state(1)[0])
        )

        R0 = rot_z(plan.initial_yaw) @ rot_x(plan.initial_roll) @ rot_y(plan.initial_pitch)
        p0 = np.array(plan.initial_position, dtype=float)
        self.state = VehicleState(p0, np.zeros(3), R0, np.zeros(3), grounded=p0[2] <= 0.0)
        self.mode = Mode(plan.initial_mode)
        self.battery = cfg.params.battery_capacity if plan.initial_battery is None else plan.initial_battery

        ctl = cfg.controller
        if ctl.type == "se3":
            self.se3 = Se3Controller(ctl.se3_gains, self.params, ctl.se3_options)
            self.pid = None
        elif ctl.type == "pid":
            self.se3 = None
            self.pid = PidController(ctl.pid_gains, self.params, self.dt_c)
        else:
            raise ValueError(f"unknown controller type {ctl.type!r}")
        self.crawl_pid = CrawlPidState()

        self.log = TelemetryLog()
        self.timeline: list = []
        self.t = 0.0
        self.tick = 0
        self.obs = None
        self.endurance: float | None = None
        self.sat_time = 0.0
        self.sat_warned = False
        self._enter_mode(self.mode)

    # -- helpers

    def _enter_mode(self, mode: Mode) -> None:
        if self.timeline and self.timeline[-1][0] == self.t:
            self.timeline[-1] = (self.t, mode.value)
        else:
            self.timeline.append((self.t, mode.value))
        prev = self.mode
        self.mode = mode
        if mode is Mode.TAKEOFF:
            # fresh controller memory at the ground -> air handoff
            if self.pid is not None:
                self.pid.reset()
            if self.se3 is not None:
                self.se3.reset()
            self.log.event(self.t, "handoff", f"{prev.value} -> Takeoff, heading latched at {heading(self.state.R):.4f} rad")
        if mode is Mode.CRAWL:
            self.crawl_pid.reset()
        if mode is Mode.SELF_RIGHT:
            self.sr_start = self.state.copy()
            self.sr_t = 0.0
            self.sr_modules = modules_nearest_ground(self.state.R, self.params)
        if mode in (Mode.GROUNDED, Mode.CRAWL, Mode.SELF_RIGHT):
            self.state.v[:] = 0.0
            self.state.omega[:] = 0.0

    def _transition(self, command: Mode | None = None) -> None:
        new = mode_transition(self.mode, self.state, self.obs, self.battery, command, self.cfg.thresholds)
        if new is not self.mode:
            if (self.mode, new) not in allowed_edges():
                raise InvalidTransition(f"{self.mode.value} -> {new.value}")
            self._enter_mode(new)
            # a second automatic edge may fire immediately (e.g. Grounded -> SelfRight)
            nxt = mode_transition(self.mode, self.state, self.obs, self.battery, None, self.cfg.thresholds)
            if nxt is not self.mode:
                self._enter_mode(nxt)

    def _flight_wrench(self, target: FlatTarget):
        est = self.obs.as_state()
        psi = heading(self.obs.R)
        psi_dot = float((self.obs.R @ self.obs.omega)[2])
        if self.se3 is not None:
            target.psi = psi
            target.psi_dot = psi_dot
            out = self.se3(est, target)
            return out.wrench
        sp = PositionSetpoint(target.p, target.v)
        return self.pid(est, sp, psi)

    def _crawl_state(self) -> CrawlState:
        return CrawlState(float(self.obs.p[0]), float(self.obs.p[1]), heading(self.obs.R))

    # -- phase handling

    def _start_phase(self, phase: Phase) -> Mode | None:
        self.phase_t0 = self.t
        self.phase_ref: Trajectory | None = None
        self.crawl_target = None
        p = self.state.p
        if phase.kind == "crawl_to":
            if phase.target is not None:
                self.crawl_target = (float(phase.target[0]), float(phase.target[1]))
            else:
                psi = heading(self.state.R)
                self.crawl_target = (p[0] + phase.distance * math.cos(psi), p[1] + phase.distance * math.sin(psi))
            return Mode.CRAWL
        if phase.kind in ("crawl_path", "crawl_open"):
            return Mode.CRAWL
        if phase.kind == "takeoff":
            self.phase_ref = Line(p.copy(), np.array([p[0], p[1], phase.altitude]), phase.climb_time)
            return Mode.TAKEOFF
        if phase.kind == "hover":
            pos = np.array(phase.position, dtype=float) if phase.position is not None else self._hold_point()
            self.phase_ref = Hover(pos, phase.duration)
            return None
        if phase.kind == "track":
            self.phase_ref = build(phase.trajectory)
            return None
        if phase.kind == "land":
            start = self._hold_point()
            self.phase_ref = Line(start, np.array([start[0], start[1], -0.05]), phase.descent_time)
            return Mode.LANDING
        return None

    def _hold_point(self) -> np.ndarray:
        if getattr(self, "last_ref", None) is not None:
            return self.last_ref.copy()
        return self.state.p.copy()

    def _phase_done(self, phase: Phase) -> bool:
        tp = self.t - self.phase_t0
        if phase.kind == "crawl_to":
            cs = self._crawl_state()
            return math.hypot(self.crawl_target[0] - cs.x, self.crawl_target[1] - cs.y) < phase.tolerance
        if phase.kind == "crawl_path":
            return tp >= (phase.duration or phase.period) - 1e-9
        if phase.kind in ("crawl_open", "hover", "idle"):
            return tp >= phase.duration - 1e-9
        if phase.kind == "takeoff":
            return (
                self.mode is Mode.FLIGHT
                and tp >= phase.climb_time
                and abs(self.state.p[2] - phase.altitude) < 0.05
            )
        if phase.kind == "track":
            return tp >= self.phase_ref.duration - 1e-9
        if phase.kind == "land":
            return self.mode is Mode.GROUNDED
        if phase.kind == "selfright":
            return self.mode is Mode.GROUNDED
        return False

    # -- main loop

    def run(self) -> MissionResult:
        phases = list(self.plan.phases)
        idx = 0
        status = "completed"
        self.obs = self.sensors.observe(self.state, self.t)
        self.last_ref = None
        command = self._start_phase(phases[0])
        self._transition(command)
        while True:
            if self.cfg.max_duration is not None and self.t >= self.cfg.max_duration - 1e-9:
                status = "max_duration"
                break
            phase = phases[idx]
            if self._phase_done(phase):
                idx += 1
                if idx >= len(phases):
                    last = self.log.rows[-1]
                    if last["t"] < self.t:
                        ref = (last["x_ref"], last["y_ref"], last["z_ref"])
                        self._record(ControlWrench(0.0, 0.0, 0.0, 0.0), ActuatorCommand.off(), ref)
                    break
                phase = phases[idx]
                command = self._start_phase(phase)
                self._transition(command)
            elif phase.kind in CONDITION_PHASES and self.t - self.phase_t0 > phase.timeout:
                self.log.event(self.t, "phase_timeout", f"phase {idx} ({phase.kind}) exceeded {phase.timeout} s")
                status = "timeout"
                break

            try:
                self._tick(phase)
            except BatteryEmpty as exc:
                self.endurance = self.t + exc.time_to_empty
                self.battery = 0.0
                self.log.event(self.endurance, "depleted", "battery empty")
                self.t = self.endurance
                self._enter_mode(Mode.DEPLETED)
                self._record(ControlWrench(0.0, 0.0, 0.0, 0.0), ActuatorCommand.off(), self.state.p)
                status = "depleted"
                break
            except NonFiniteState as exc:
                raise SimDiverged(str(exc)) from exc
            self._transition(None)
        return MissionResult(self.log, status, self.endurance, list(self.timeline))

    def _tick(self, phase: Phase) -> None:
        dt = self.dt_c
        cmd = ActuatorCommand.off()
        wrench = ControlWrench(0.0, 0.0, 0.0, 0.0)
        ref = self.state.p.copy()
        tp = self.t - self.phase_t0
        mode = self.mode

        if mode is Mode.CRAWL:
            cs = self._crawl_state()
            if phase.kind == "crawl_open":
                cap = self.crawl_params.f_crawl_max
                fl = cap if phase.f_left is None else phase.f_left
                fr = cap if phase.f_right is None else phase.f_right
            else:
                if phase.kind == "crawl_path":
                    target = figure_eight_reference(tp, phase.amplitude, phase.period)
                elif self.crawl_target is not None:
                    target = self.crawl_target
                else:
                    target = (cs.x, cs.y)
                fl, fr = crawl_controller_step(cs, target, self.cfg.crawl_gains, self.crawl_pid, dt, self.crawl_params)
                ref = np.array([target[0], target[1], 0.0])
            cmd = ActuatorCommand(np.array([0.0, fl, fr]))
        elif mode is Mode.SELF_RIGHT:
            f = np.zeros(3)
            for i in self.sr_modules:
                f[i] = self.params.f_max
            cmd = ActuatorCommand(f)
        elif mode in AIRBORNE:
            traj = self.phase_ref if self.phase_ref is not None else Hover(self._hold_point(), 1.0)
            target = traj.clamped(tp)
            ref = target.p.copy()
            self.last_ref = target.p.copy()
            wrench = self._flight_wrench(target)
            cmd = act.inverse_mix(wrench, self.params)

        self._record(wrench, cmd, ref)
        self._check_saturation(cmd, dt)
        self.battery = act.battery_drain(cmd, dt, self.battery, self.params)
        mz = self.disturbance.step(dt)

        if mode is Mode.CRAWL:
            cs = CrawlState(float(self.state.p[0]), float(self.state.p[1]), heading(self.state.R))
            ns = crawl_kinematics(cmd.f[1], cmd.f[2], self.crawl_params, cs, dt)
            self.state = VehicleState(
                np.array([ns.x, ns.y, 0.0]),
                np.array([ns.speed * math.cos(ns.psi), ns.speed * math.sin(ns.psi), 0.0]),
                rot_z(ns.psi) @ self._tilt_part(),
                np.array([0.0, 0.0, ns.yaw_rate]),
                True,
            )
            self._advance_sensors_static()
        elif mode is Mode.SELF_RIGHT:
            self.sr_t += dt
            self.state = self_right_step(
                self.sr_start, self.params, self.sr_t, self.cfg.self_right_duration, self.cfg.thresholds
            )
            self._advance_sensors_static()
        elif mode in AIRBORNE:
            physical = act.forward_mix(cmd, self.params, yaw_imbalance=mz)
            for k in range(self.n_sub):
                self.state = step_dynamics(self.state, physical, self.params, self.cfg.sim, self.dt_p)
                self.state = ground_contact(self.state, self.params, self.cfg.sim.ground_friction)
                if (k + 1) % self.sensor_every == 0 and k + 1 < self.n_sub:
                    self.sensors.observe(self.state, self.t + (k + 1) * self.dt_p)
        else:
            self._advance_sensors_static()

        self.tick += 1
        self.t = self.tick * dt
        self.obs = self.sensors.observe(self.state, self.t)

    def _tilt_part(self) -> np.ndarray:
        # crawling keeps whatever residual tilt the body had; heading is rewritten
        psi = heading(self.state.R)
        return rot_z(-psi) @ self.state.R

    def _advance_sensors_static(self) -> None:
        for k in range(self.sensor_every, self.n_sub, self.sensor_every):
            self.sensors.observe(self.state, self.t + k * self.dt_p)

    def _check_saturation(self, cmd: ActuatorCommand, dt: float) -> None:
        if any(cmd.saturated):
            self.sat_time += dt
            if self.sat_time > self.cfg.saturation_warn_time and not self.sat_warned:
                self.log.event(self.t, "saturation_warning", f"actuator saturated for more than {self.cfg.saturation_warn_time} s")
                self.sat_warned = True
        else:
            self.sat_time = 0.0
            self.sat_warned = False

    def _record(self, wrench: ControlWrench, cmd: ActuatorCommand, ref) -> None:
        s = self.state
        roll, pitch, yaw = _safe_euler(s.R)
        thr = act.command_throttles(cmd)
        self.log.append(
            t=self.t,
            x=s.p[0], y=s.p[1], z=s.p[2],
            vx=s.v[0], vy=s.v[1], vz=s.v[2],
            roll=roll, pitch=pitch, yaw=yaw,
            wx=s.omega[0], wy=s.omega[1], wz=s.omega[2],
            u1=wrench.u1, u2=wrench.u2, u3=wrench.u3, mz_cmd=wrench.mz,
            f1=cmd.f[0], f2=cmd.f[1], f3=cmd.f[2],
            thr1=thr[0], thr2=thr[1], thr3=thr[2],
            mode=self.mode.value,
            battery_mah=self.battery,
            sat1=cmd.saturated[0], sat2=cmd.saturated[1], sat3=cmd.saturated[2],
            x_ref=ref[0], y_ref=ref[1], z_ref=ref[2],
        )


def run_mission(plan: MissionPlan, cfg: MissionConfig | None = None) -> MissionResult:
    return MissionRunner(plan, cfg or MissionConfig()).run()
