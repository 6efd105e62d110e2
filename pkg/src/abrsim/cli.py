"""Command-line entry point: `run` executes a scenario, `trace-gen` writes
a synthetic quality ladder as plain-text trace files."""

from __future__ import annotations

import argparse
import os
import sys

from .engine import RngStream
from .scenarios import ConfigError, ScenarioConfig, parse_config, run_scenario
from .streaming import DEFAULT_LADDER_BITRATES_MBPS, synth_ladder


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="abrsim",
                                     description="Adaptive-bitrate streaming simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one scenario and write CSV metrics")
    run_p.add_argument("--scenario", choices=["a", "b", "c", "d"])
    run_p.add_argument("--config", help="flat key = value config file")
    run_p.add_argument("--seed", type=int)
    run_p.add_argument("--out", help="output directory for CSV files")
    run_p.add_argument("--horizon", type=float, help="simulated seconds")

    gen_p = sub.add_parser("trace-gen", help="generate a synthetic trace ladder")
    gen_p.add_argument("--levels", type=int, required=True)
    gen_p.add_argument("--frames", type=int, required=True)
    gen_p.add_argument("--fps", type=int, required=True)
    gen_p.add_argument("--out", required=True)
    gen_p.add_argument("--seed", type=int, default=0)
    return parser


def _cmd_run(args) -> int:
    cfg = ScenarioConfig()
    if args.config:
        with open(args.config, encoding="utf-8") as f:
            text = f.read()
        # flags may still supply mandatory keys (seed), so validate afterwards
        cfg = parse_config(text, cfg, validate=False)
    if args.scenario:
        cfg.scenario = args.scenario
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out:
        cfg.out_dir = args.out
    if args.horizon is not None:
        cfg.horizon_s = args.horizon
    cfg.validate()
    return run_scenario(cfg)


def _cmd_trace_gen(args) -> int:
    bitrates = DEFAULT_LADDER_BITRATES_MBPS[:]
    while len(bitrates) < args.levels:
        bitrates.append(bitrates[-1] * 2)
    bitrates = [b * 1e6 for b in bitrates[:args.levels]]
    rng = RngStream(args.seed, "trace-gen", "synth")
    ladder = synth_ladder(args.levels, args.frames, args.fps, bitrates, rng)
    os.makedirs(args.out, exist_ok=True)
    for level, trace in enumerate(ladder.levels):
        path = os.path.join(args.out, f"level{level}.txt")
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write("\n".join(str(s) for s in trace.sizes) + "\n")
    print(f"wrote {len(ladder.levels)} trace files to {args.out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_trace_gen(args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
