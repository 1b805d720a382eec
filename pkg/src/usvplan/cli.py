"""Command-line entry point.

    usvplan run      --scenario s.yaml --seed 7 --out trace.jsonl [--quiet]
    usvplan bench    --scenario s.yaml --seeds 20 --out metrics.json [--quiet]
    usvplan validate --scenario s.yaml

Exit codes: 0 success (run: goal reached), 2 timed out or stuck,
3 scenario validation failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from .scenario import ParseError, ScenarioConfig, ValidationError, load_scenario
from .sim import Metrics, SimStatus, Simulator, metrics as trace_metrics
from .trace import write_trace

EXIT_OK = 0
EXIT_NOT_REACHED = 2
EXIT_INVALID = 3
EXIT_IO = 4


def _load(path: str) -> ScenarioConfig:
    try:
        return load_scenario(path)
    except OSError as e:
        print(f"error: cannot read scenario: {e}", file=sys.stderr)
        raise SystemExit(EXIT_IO)
    except (ParseError, ValidationError) as e:
        print(f"error: invalid scenario: {e}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID)


def _metrics_dict(seed: int, status: str, m: Metrics) -> dict:
    return {
        "seed": seed,
        "status": status,
        "goal_reached": m.goal_reached,
        "mission_time_s": m.mission_time,
        "path_length_m": m.path_length,
        "replan_count": m.replan_count,
        "mean_replan_wall_clock_s": m.mean_replan_wall_clock,
        "min_obstacle_center_distance_m": m.min_obstacle_center_distance,
        "replan_wall_clocks_s": list(m.replan_wall_clocks),
    }


def cmd_run(args: argparse.Namespace) -> int:
    scenario = _load(args.scenario)
    if args.seed is not None:
        scenario = scenario.with_overrides(seed=args.seed)
    sim = Simulator(scenario)
    trace = sim.run()
    m = trace_metrics(trace)
    try:
        write_trace(trace, args.out)
    except OSError as e:
        print(f"error: cannot write trace: {e}", file=sys.stderr)
        return EXIT_IO
    status = sim.state.status
    if not args.quiet:
        print(
            f"{status.value}: t={m.mission_time:.1f} s, path={m.path_length:.1f} m, "
            f"replans={m.replan_count}, trace={args.out}"
        )
    return EXIT_OK if status is SimStatus.GOAL_REACHED else EXIT_NOT_REACHED


def cmd_bench(args: argparse.Namespace) -> int:
    scenario = _load(args.scenario)
    base = scenario.seed
    per_seed = []
    pooled: list[float] = []
    reached = 0
    for i in range(args.seeds):
        cfg = scenario.with_overrides(seed=base + i)
        sim = Simulator(cfg)
        trace = sim.run()
        m = trace_metrics(trace)
        per_seed.append(_metrics_dict(cfg.seed, sim.state.status.value, m))
        pooled.extend(m.replan_wall_clocks)
        reached += int(m.goal_reached)
        if not args.quiet:
            print(
                f"seed {cfg.seed}: {sim.state.status.value}, t={m.mission_time:.1f} s, "
                f"replans={m.replan_count}"
            )
    pooled.sort()
    out = {
        "scenario_hash": scenario.scenario_hash(),
        "seeds": args.seeds,
        "goal_reached_fraction": reached / args.seeds if args.seeds else None,
        "replan_events": len(pooled),
        "replan_wall_clock_s": {
            "mean": math.fsum(pooled) / len(pooled) if pooled else None,
            "median": _quantile(pooled, 0.5),
            "p99": _quantile(pooled, 0.99),
            "max": pooled[-1] if pooled else None,
        },
        "per_seed": per_seed,
    }
    try:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(out, fh, indent=2)
            fh.write("\n")
    except OSError as e:
        print(f"error: cannot write metrics: {e}", file=sys.stderr)
        return EXIT_IO
    if not args.quiet:
        w = out["replan_wall_clock_s"]
        med = f"{w['median'] * 1e3:.3f}" if w["median"] is not None else "n/a"
        p99 = f"{w['p99'] * 1e3:.3f}" if w["p99"] is not None else "n/a"
        print(
            f"{reached}/{args.seeds} reached goal; {len(pooled)} replan events, "
            f"median {med} ms, p99 {p99} ms -> {args.out}"
        )
    return EXIT_OK


def _quantile(sorted_vals: list[float], q: float) -> float | None:
    if not sorted_vals:
        return None
    if len(sorted_vals) == 1:
        return sorted_vals[0]
    pos = q * (len(sorted_vals) - 1)
    lo = int(math.floor(pos))
    hi = min(lo + 1, len(sorted_vals) - 1)
    frac = pos - lo
    return sorted_vals[lo] * (1.0 - frac) + sorted_vals[hi] * frac


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except OSError as e:
        print(f"error: cannot read scenario: {e}", file=sys.stderr)
        return EXIT_IO
    except (ParseError, ValidationError) as e:
        print(f"invalid: {e}", file=sys.stderr)
        return EXIT_INVALID
    print(f"valid: hash {scenario.scenario_hash()[:16]}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="usvplan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one scenario and write a trace")
    p_run.add_argument("--scenario", required=True)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--quiet", action="store_true")
    p_run.set_defaults(func=cmd_run)

    p_bench = sub.add_parser("bench", help="run n seeds and aggregate metrics")
    p_bench.add_argument("--scenario", required=True)
    p_bench.add_argument("--seeds", type=int, required=True)
    p_bench.add_argument("--out", required=True)
    p_bench.add_argument("--quiet", action="store_true")
    p_bench.set_defaults(func=cmd_bench)

    p_val = sub.add_parser("validate", help="check a scenario document")
    p_val.add_argument("--scenario", required=True)
    p_val.set_defaults(func=cmd_validate)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
