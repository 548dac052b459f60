"""Built-in scenario presets, expressed in the same form as a YAML config file."""

from __future__ import annotations

import copy

from .errors import ConfigError

LONG = 1.0e5  # "until the battery gives out"

_HOVER_PHASE = {"kind": "hover", "position": [0.0, 0.0, 1.0], "duration": 20.0}

PRESETS: dict[str, dict] = {
    "hover": {
        "description": "SE(3) hover from a 5 cm offset, ideal sensors",
        "mission": {
            "initial": {"mode": "Flight", "position": [0.05, 0.0, 1.0]},
            "phases": [_HOVER_PHASE],
        },
        "metrics": {"settle_time": 3.0},
    },
    "hover-noisy": {
        "description": "150 s hover with sensor noise and a small yaw imbalance",
        "sim": {"noise": "realistic", "yaw_imbalance": 2.0e-7, "angular_damping": [0.0, 0.0, 2.0e-5]},
        "mission": {
            "initial": {"mode": "Flight", "position": [0.05, 0.0, 1.0]},
            "phases": [dict(_HOVER_PHASE, duration=150.0)],
        },
        "metrics": {"settle_time": 3.0},
    },
    "yaw-drift": {
        "description": "120 s hover while an assembly imbalance spins the body well past 90 degrees",
        "sim": {
            "noise": "realistic",
            "yaw_imbalance": 4.0e-7,
            "yaw_imbalance_walk": 2.0e-8,
            "angular_damping": [0.0, 0.0, 2.0e-5],
        },
        "mission": {
            "initial": {"mode": "Flight", "position": [0.0, 0.0, 1.0]},
            "phases": [dict(_HOVER_PHASE, duration=120.0)],
        },
    },
    "figure-eight-ground": {
        "description": "Dual-layer PID crawl around a 0.3 m Gerono lemniscate",
        "mission": {
            "initial": {"mode": "Grounded", "position": [0.0, 0.0, 0.0], "yaw_deg": 45.0},
            "phases": [{"kind": "crawl_path", "amplitude": 0.3, "period": 100.0}],
        },
    },
    "obstacle-cross": {
        "description": "Take off, climb over an obstacle along blended waypoints, land",
        "mission": {
            "initial": {"mode": "Grounded"},
            "phases": [
                {"kind": "takeoff", "altitude": 0.5, "climb_time": 3.0},
                {
                    "kind": "track",
                    "trajectory": {
                        "kind": "obstacle-cross",
                        "duration": 1.0,
                        "altitude": 0.5,
                        "obstacle_x": 1.0,
                        "obstacle_height": 0.8,
                        "clearance": 0.2,
                        "speed": 0.5,
                        "blend_time": 1.0,
                    },
                },
                {"kind": "hover", "duration": 2.0},
                {"kind": "land", "descent_time": 3.0},
            ],
        },
    },
    "multi-mode-mission": {
        "description": "Crawl 0.5 m, take off to 1 m, hover 10 s, land",
        "sim": {"noise": "realistic"},
        "mission": {
            "initial": {"mode": "Grounded"},
            "phases": [
                {"kind": "crawl_to", "distance": 0.5, "timeout": 60.0},
                {"kind": "takeoff", "altitude": 1.0, "climb_time": 3.0},
                {"kind": "hover", "duration": 10.0},
                {"kind": "land", "descent_time": 4.0},
            ],
        },
    },
    "selfright": {
        "description": "Recover from an inverted pose",
        "mission": {
            "initial": {"mode": "Grounded", "roll_deg": 150.0},
            "phases": [{"kind": "selfright", "timeout": 2.0}, {"kind": "idle", "duration": 0.5}],
        },
    },
    "endurance-hover": {
        "description": "Hover until the battery is empty",
        "mission": {
            "initial": {"mode": "Flight", "position": [0.0, 0.0, 1.0]},
            "phases": [dict(_HOVER_PHASE, duration=LONG)],
        },
    },
    "endurance-crawl": {
        "description": "Crawl straight ahead at the vibration cap until the battery is empty",
        "mission": {
            "initial": {"mode": "Grounded"},
            "phases": [{"kind": "crawl_open", "duration": LONG}],
        },
    },
    "speed-sweep": {
        "description": "Out-and-back 4 m dashes at increasing peak speed",
        "mission": {
            "initial": {"mode": "Flight", "position": [0.0, 0.0, 1.0]},
            "phases": [
                {"kind": "track", "trajectory": {"kind": "line", "start": [0, 0, 1], "end": [4, 0, 1], "duration": 8.0}},
                {"kind": "track", "trajectory": {"kind": "line", "start": [4, 0, 1], "end": [0, 0, 1], "duration": 5.0}},
                {"kind": "track", "trajectory": {"kind": "line", "start": [0, 0, 1], "end": [4, 0, 1], "duration": 3.5}},
                {"kind": "hover", "duration": 3.0},
            ],
        },
    },
}


def list_scenarios() -> list[str]:
    return sorted(PRESETS)


def preset(name: str) -> dict:
    """A fresh copy of a preset's raw config, with its name filled in."""
    if name not in PRESETS:
        raise ConfigError(f"unknown scenario {name!r}; choose from {', '.join(list_scenarios())}")
    raw = copy.deepcopy(PRESETS[name])
    raw["name"] = name
    return raw

