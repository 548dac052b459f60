"""Run a scenario end to end and write its output files."""

from __future__ import annotations

import json
import os
from pathlib import Path

from .config import OUT_DIR_ENV, ScenarioConfig
from .metrics import MetricsReport, compute_metrics
from .mission import MissionResult, MissionRunner
from .telemetry import TelemetryLog


def output_dir(config: ScenarioConfig, override=None) -> Path:
    """``override`` beats the environment variable, which beats the config."""
    if override is not None:
        return Path(override)
    env = os.environ.get(OUT_DIR_ENV)
    if env:
        return Path(env)
    return Path(config.output.dir)


def simulate(config: ScenarioConfig) -> MissionResult:
    return MissionRunner(config.plan, config.mission).run()


def run_scenario(config: ScenarioConfig, out_dir=None, write: bool = True) -> tuple[TelemetryLog, MetricsReport, MissionResult]:
    """Simulate, compute metrics and (optionally) write telemetry, metrics and events."""
    result = simulate(config)
    report = compute_metrics(result.log, settle_time=config.metrics.settle_time)
    if write:
        d = output_dir(config, out_dir)
        d.mkdir(parents=True, exist_ok=True)
        result.log.write_csv(d / config.output.telemetry)
        (d / config.output.metrics).write_text(report.to_json())
        events = {
            "scenario": config.name,
            "seed": config.seed,
            "status": result.status,
            "events": [{"t": t, "kind": k, "message": m} for t, k, m in result.log.events],
        }
        (d / config.output.events).write_text(json.dumps(events, indent=2) + "\n")
    return result.log, report, result
