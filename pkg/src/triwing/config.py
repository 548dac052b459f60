"""Scenario configuration: strict YAML parsing into the runtime dataclasses.

Every section mirrors a module. Unknown keys are errors, and every module
invariant is checked at load time; the first violation is reported as a
:class:`ConfigError` naming the section and the invariant.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from .actuation import VehicleParams
from .dynamics import NoiseConfig, SimConfig
from .errors import ConfigError
from .ground import CrawlGains, CrawlParams
from .mission import ControllerConfig, MissionConfig, MissionPlan, Mode, ModeThresholds, Phase
from .pid import LoopGains, PidGains
from .se3 import GainSet, Se3Options
from .trajectories import TrajectorySpec

TOP_LEVEL_KEYS = {
    "name", "description", "seed", "duration", "vehicle", "sim", "controller",
    "crawl", "mission", "thresholds", "metrics", "output",
}
OUT_DIR_ENV = "TRIWING_OUT_DIR"


@dataclass
class OutputConfig:
    dir: str = "out"
    telemetry: str = "telemetry.csv"
    metrics: str = "metrics.json"
    events: str = "events.json"


@dataclass
class MetricsConfig:
    settle_time: float = 0.0


@dataclass
class ScenarioConfig:
    name: str
    mission: MissionConfig
    plan: MissionPlan
    output: OutputConfig = field(default_factory=OutputConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    description: str = ""
    raw: dict = field(default_factory=dict)

    @property
    def seed(self) -> int:
        return self.mission.sim.seed


def _check_keys(data, allowed, where: str) -> dict:
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(data).__name__}")
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")
    return data


def _fields(cls) -> set:
    return {f.name for f in fields(cls)}


def _tuplify(v):
    if isinstance(v, list):
        return tuple(_tuplify(x) for x in v)
    return v


def _guard(where: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _vehicle(d) -> VehicleParams:
    allowed = _fields(VehicleParams) | {"arm_angle_deg"}
    d = dict(_check_keys(d, allowed, "vehicle"))
    if "arm_angle_deg" in d:
        if "arm_angle" in d:
            raise ConfigError("vehicle: give arm_angle or arm_angle_deg, not both")
        d["arm_angle"] = math.radians(d.pop("arm_angle_deg"))
    d = {k: _tuplify(v) for k, v in d.items()}
    return _guard("vehicle", VehicleParams, **d)


def _sim(d, seed) -> SimConfig:
    d = dict(_check_keys(d, _fields(SimConfig) - {"seed"}, "sim"))
    noise = d.pop("noise", None)
    if isinstance(noise, str):
        if noise != "realistic":
            raise ConfigError("sim.noise: preset must be 'realistic' or a mapping")
        nc = NoiseConfig.realistic()
    else:
        nd = dict(_check_keys(noise, _fields(NoiseConfig) | {"attitude_deg"}, "sim.noise"))
        if "attitude_deg" in nd:
            nd["attitude"] = math.radians(nd.pop("attitude_deg"))
        nc = _guard("sim.noise", NoiseConfig, **{k: _tuplify(v) for k, v in nd.items()})
    cfg = _guard("sim", SimConfig, noise=nc, seed=int(seed), **{k: _tuplify(v) for k, v in d.items()})
    _guard("sim", cfg.validate)
    return cfg


def _loop(d, where: str, default: LoopGains) -> LoopGains:
    d = _check_keys(d, _fields(LoopGains), where)
    merged = {f.name: getattr(default, f.name) for f in fields(LoopGains)}
    merged.update(d)
    return _guard(where, LoopGains, **merged)


def _controller(d) -> ControllerConfig:
    d = _check_keys(d, {"type", "se3", "pid"}, "controller")
    ctype = d.get("type", "se3")
    if ctype not in ("se3", "pid"):
        raise ConfigError("controller.type: must be 'se3' or 'pid'")
    se3 = _check_keys(d.get("se3"), {"kp", "kv", "kR", "kw", "feedforward_rates", "yaw_rate_source"}, "controller.se3")
    base = GainSet.default()
    gains = _guard(
        "controller.se3",
        GainSet,
        kp=se3.get("kp", base.kp),
        kv=se3.get("kv", base.kv),
        kR=se3.get("kR", base.kR),
        kw=se3.get("kw", base.kw),
    )
    ysrc = se3.get("yaw_rate_source", "observed")
    if ysrc not in ("observed", "zero"):
        raise ConfigError("controller.se3.yaw_rate_source: must be 'observed' or 'zero'")
    opts = Se3Options(bool(se3.get("feedforward_rates", True)), ysrc)

    loops = ("rate", "angle", "velocity", "position", "altitude_velocity", "altitude")
    pd = _check_keys(d.get("pid"), set(loops) | {"max_tilt_deg", "position_divider"}, "controller.pid")
    defaults = PidGains()
    kwargs = {name: _loop(pd.get(name), f"controller.pid.{name}", getattr(defaults, name)) for name in loops}
    kwargs["max_tilt"] = math.radians(pd.get("max_tilt_deg", math.degrees(defaults.max_tilt)))
    kwargs["position_divider"] = int(pd.get("position_divider", defaults.position_divider))
    if kwargs["position_divider"] < 1:
        raise ConfigError("controller.pid: violated invariant: position_divider >= 1")
    return ControllerConfig(ctype, gains, opts, PidGains(**kwargs))


def _crawl(d, params: VehicleParams):
    d = _check_keys(d, {"c_omega", "v_max", "f_crawl_max", "c_v", "gains"}, "crawl")
    base = CrawlParams.from_vehicle(params, c_omega=d.get("c_omega", 0.12), v_max=d.get("v_max", 0.054))
    cp = _guard(
        "crawl",
        CrawlParams,
        f_crawl_max=d.get("f_crawl_max", base.f_crawl_max),
        c_v=d.get("c_v", base.v_max / d.get("f_crawl_max", base.f_crawl_max)),
        c_omega=base.c_omega,
        v_max=base.v_max,
    )
    _guard("crawl", cp.validate)
    gd = _check_keys(d.get("gains"), {"distance", "yaw"}, "crawl.gains")
    dg = CrawlGains()
    gains = CrawlGains(
        _loop(gd.get("distance"), "crawl.gains.distance", dg.distance),
        _loop(gd.get("yaw"), "crawl.gains.yaw", dg.yaw),
    )
    return cp, gains


def _thresholds(d) -> ModeThresholds:
    d = _check_keys(d, {"takeoff_altitude", "landing_descent_rate", "tipped_deg", "upright_deg"}, "thresholds")
    t = ModeThresholds()
    out = ModeThresholds(
        takeoff_altitude=d.get("takeoff_altitude", t.takeoff_altitude),
        landing_descent_rate=d.get("landing_descent_rate", t.landing_descent_rate),
        tipped=math.radians(d.get("tipped_deg", math.degrees(t.tipped))),
        upright=math.radians(d.get("upright_deg", math.degrees(t.upright))),
    )
    if not out.upright < out.tipped:
        raise ConfigError("thresholds: violated invariant: upright_deg < tipped_deg")
    return out


def _trajectory(d, where: str) -> TrajectorySpec:
    d = _check_keys(d, _fields(TrajectorySpec), where)
    spec = _guard(where, TrajectorySpec, **{k: (v if k == "waypoints" else _tuplify(v)) for k, v in d.items()})
    _guard(where, spec.validate)
    return spec


def _plan(d) -> MissionPlan:
    d = _check_keys(d, {"initial", "phases"}, "mission")
    init = _check_keys(d.get("initial"), {"mode", "position", "yaw_deg", "roll_deg", "pitch_deg", "battery"}, "mission.initial")
    raw_phases = d.get("phases") or []
    if not isinstance(raw_phases, list) or not raw_phases:
        raise ConfigError("mission.phases: violated invariant: plan has at least one phase")
    phases = []
    for i, ph in enumerate(raw_phases):
        where = f"mission.phases[{i}]"
        ph = dict(_check_keys(ph, _fields(Phase), where))
        if "kind" not in ph:
            raise ConfigError(f"{where}: missing 'kind'")
        if "trajectory" in ph:
            ph["trajectory"] = _trajectory(ph["trajectory"], where + ".trajectory")
        for k in ("target", "position"):
            if k in ph and ph[k] is not None:
                ph[k] = tuple(ph[k])
        phase = _guard(where, Phase, **ph)
        _guard(where, phase.validate)
        phases.append(phase)
    try:
        mode = Mode(init.get("mode", "Grounded"))
    except ValueError as exc:
        raise ConfigError(f"mission.initial.mode: {exc}") from exc
    plan = MissionPlan(
        phases,
        initial_mode=mode,
        initial_position=tuple(init.get("position", (0.0, 0.0, 0.0))),
        initial_yaw=math.radians(init.get("yaw_deg", 0.0)),
        initial_roll=math.radians(init.get("roll_deg", 0.0)),
        initial_pitch=math.radians(init.get("pitch_deg", 0.0)),
        initial_battery=init.get("battery"),
    )
    _guard("mission", plan.validate)
    return plan


def parse_config(raw: dict) -> ScenarioConfig:
    raw = _check_keys(raw, TOP_LEVEL_KEYS, "config")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("seed: must be an integer")
    duration = raw.get("duration")
    if duration is not None and not duration > 0:
        raise ConfigError("duration: violated invariant: duration > 0")
    params = _vehicle(raw.get("vehicle"))
    sim = _sim(raw.get("sim"), seed)
    controller = _controller(raw.get("controller"))
    crawl, crawl_gains = _crawl(raw.get("crawl"), params)
    thresholds = _thresholds(raw.get("thresholds"))
    plan = _plan(raw.get("mission"))
    md = _check_keys(raw.get("metrics"), _fields(MetricsConfig), "metrics")
    od = _check_keys(raw.get("output"), _fields(OutputConfig), "output")
    mission = MissionConfig(
        params=params,
        sim=sim,
        controller=controller,
        crawl=crawl,
        crawl_gains=crawl_gains,
        thresholds=thresholds,
        max_duration=duration,
    )
    return ScenarioConfig(
        name=str(raw.get("name", "custom")),
        mission=mission,
        plan=plan,
        output=OutputConfig(**od),
        metrics=MetricsConfig(**md),
        description=str(raw.get("description", "")),
        raw=copy.deepcopy(raw),
    )


def load_yaml(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def load_config(path) -> ScenarioConfig:
    return parse_config(load_yaml(path))


def apply_overrides(raw: dict, seed=None, duration=None, dt=None, controller=None) -> dict:
    """Return a copy of ``raw`` with CLI overrides folded in."""
    out = copy.deepcopy(raw)
    if seed is not None:
        out["seed"] = int(seed)
    if duration is not None:
        out["duration"] = float(duration)
    if dt is not None:
        out.setdefault("sim", {})
        out["sim"] = dict(out["sim"] or {}, dt_physics=float(dt))
    if controller is not None:
        out.setdefault("controller", {})
        out["controller"] = dict(out["controller"] or {}, type=controller)
    return out
