"""Metrics computed purely from a telemetry log."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import EmptyLog
from .ground import cross_track_errors, thin_polyline

FLIGHT_MODES = ("Takeoff", "Flight", "Landing")
HARDWARE_REFERENCE = {
    "roll_rmse_deg": 4.78,
    "pitch_rmse_deg": 7.07,
    "roll_max_deg": 16.65,
    "pitch_max_deg": 20.15,
}


@dataclass
class MetricsReport:
    duration_s: float
    samples: int
    roll_rmse_deg: float | None
    pitch_rmse_deg: float | None
    roll_max_deg: float | None
    pitch_max_deg: float | None
    position_rmse_m: float | None
    position_max_m: float | None
    cross_track_mean_m: float | None
    cross_track_max_m: float | None
    endurance_s: float | None
    mode_timeline: list = field(default_factory=list)
    hardware_reference: dict = field(default_factory=lambda: dict(HARDWARE_REFERENCE))

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def rmse(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(math.sqrt(float(np.mean(x * x))))


def _mode_timeline(rows) -> list:
    out = []
    for r in rows:
        if not out or out[-1][1] != r["mode"]:
            out.append([r["t"], r["mode"]])
    return out


def compute_metrics(log, settle_time: float = 0.0, reference_path=None) -> MetricsReport:
    """Attitude and position statistics over flight rows with ``t >= settle_time``.

    Roll/pitch errors are taken about a level setpoint. Cross-track error uses
    crawl rows against ``reference_path`` (N x 2), or against the polyline of
    the logged crawl reference when no path is given. A single fixed crawl
    goal is treated as the straight line from the first crawl sample to it.
    """
    rows = log.rows
    if not rows:
        raise EmptyLog("telemetry log is empty")
    flight = [r for r in rows if r["mode"] in FLIGHT_MODES and r["t"] >= settle_time]
    roll = pitch = None
    roll_max = pitch_max = pos_rmse = pos_max = None
    if flight:
        rl = np.degrees([r["roll"] for r in flight])
        pt = np.degrees([r["pitch"] for r in flight])
        roll, pitch = rmse(rl), rmse(pt)
        roll_max, pitch_max = float(np.max(np.abs(rl))), float(np.max(np.abs(pt)))
        err = np.array([[r["x"] - r["x_ref"], r["y"] - r["y_ref"], r["z"] - r["z_ref"]] for r in flight])
        dist = np.linalg.norm(err, axis=1)
        pos_rmse, pos_max = rmse(dist), float(np.max(dist))

    crawl = [r for r in rows if r["mode"] == "Crawl" and r["t"] >= settle_time]
    ct_mean = ct_max = None
    if crawl:
        path = np.asarray(reference_path, dtype=float) if reference_path is not None else None
        if path is None:
            refs = np.array([[r["x_ref"], r["y_ref"]] for r in crawl])
            keep = np.r_[True, np.any(np.diff(refs, axis=0) != 0.0, axis=1)]
            path = refs[keep]
            if len(path) == 1:
                # point-to-point crawl: measure against the straight start-to-goal line
                path = np.vstack([[crawl[0]["x"], crawl[0]["y"]], path])
        if len(path) >= 2:
            xy = np.array([[r["x"], r["y"]] for r in crawl])
            ct = cross_track_errors(xy, thin_polyline(path))
            ct_mean, ct_max = float(np.mean(ct)), float(np.max(ct))

    endurance = next((float(r["t"]) for r in rows if r["mode"] == "Depleted"), None)

    return MetricsReport(
        duration_s=float(rows[-1]["t"] - rows[0]["t"]),
        samples=len(rows),
        roll_rmse_deg=roll,
        pitch_rmse_deg=pitch,
        roll_max_deg=roll_max,
        pitch_max_deg=pitch_max,
        position_rmse_m=pos_rmse,
        position_max_m=pos_max,
        cross_track_mean_m=ct_mean,
        cross_track_max_m=ct_max,
        endurance_s=endurance,
        mode_timeline=_mode_timeline(rows),
    )
