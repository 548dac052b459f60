"""Command line entry point: ``triwing run | validate | list``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import apply_overrides, load_yaml, parse_config
from .errors import ConfigError, SimDiverged
from .runner import output_dir, run_scenario
from .scenarios import PRESETS, list_scenarios, preset

log = logging.getLogger("triwing")


def _raw_config(args) -> dict:
    if args.config:
        return load_yaml(args.config)
    return preset(args.scenario or "hover")


def cmd_run(args) -> int:
    raw = apply_overrides(_raw_config(args), args.seed, args.duration, args.dt, args.controller)
    cfg = parse_config(raw)
    out = output_dir(cfg, args.out)
    log.info("running %s (seed %d) -> %s", cfg.name, cfg.seed, out)
    _, report, result = run_scenario(cfg, out)
    if not args.quiet:
        print(f"scenario   {cfg.name}")
        print(f"status     {result.status}")
        print(f"modes      {' -> '.join(result.mode_sequence)}")
        for key in ("roll_rmse_deg", "pitch_rmse_deg", "position_rmse_m", "cross_track_mean_m", "endurance_s"):
            value = getattr(report, key)
            if value is not None:
                print(f"{key:<18} {value:.6g}")
        print(f"output     {out}")
    return 0


def cmd_validate(args) -> int:
    target = args.target
    raw = preset(target) if target in PRESETS else load_yaml(target)
    parse_config(raw)
    print(f"{target}: OK")
    return 0


def cmd_list(args) -> int:
    for name in list_scenarios():
        print(f"{name:<20} {PRESETS[name].get('description', '')}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="triwing", description="Triple flapping-wing vehicle simulator")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a preset or a config file")
    run.add_argument("scenario", nargs="?", help="built-in preset name (see 'list')")
    run.add_argument("--config", help="YAML scenario file")
    run.add_argument("--out", help="output directory")
    run.add_argument("--seed", type=int)
    run.add_argument("--duration", type=float, help="cap on simulated time (s)")
    run.add_argument("--dt", type=float, help="physics step (s)")
    run.add_argument("--controller", choices=("se3", "pid"))
    run.add_argument("--quiet", action="store_true")
    run.set_defaults(func=cmd_run)

    val = sub.add_parser("validate", help="check a config file or preset")
    val.add_argument("target")
    val.set_defaults(func=cmd_validate)

    ls = sub.add_parser("list", help="list built-in presets")
    ls.set_defaults(func=cmd_list)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if getattr(args, "quiet", False) else logging.INFO, format="%(message)s")
    if getattr(args, "scenario", None) and getattr(args, "config", None):
        print("error: give a preset name or --config, not both", file=sys.stderr)
        return ConfigError.exit_code
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return ConfigError.exit_code
    except SimDiverged as exc:
        print(f"simulation diverged: {exc}", file=sys.stderr)
        return SimDiverged.exit_code


if __name__ == "__main__":
    sys.exit(main())
