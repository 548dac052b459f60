"""Simulation and control for a tailless triple flapping-wing vehicle."""

from .actuation import ActuatorCommand, ControlWrench, VehicleParams, forward_mix, inverse_mix
from .dynamics import SimConfig, step_dynamics
from .geom import EulerZXY, VehicleState
from .mission import MissionPlan, Mode, Phase, run_mission
from .se3 import FlatTarget, GainSet, se3_step

__version__ = "0.1.0"

__all__ = [
    "ActuatorCommand",
    "ControlWrench",
    "EulerZXY",
    "FlatTarget",
    "GainSet",
    "MissionPlan",
    "Mode",
    "Phase",
    "SimConfig",
    "VehicleParams",
    "VehicleState",
    "forward_mix",
    "inverse_mix",
    "run_mission",
    "se3_step",
    "step_dynamics",
]
