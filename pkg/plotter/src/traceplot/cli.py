"""plot-trace: render a simulation trace into trajectory frames and a
replanning-time chart.

    plot-trace --trace run.jsonl --out frames/ [--stride 10] [--chart-only]
               [--no-lrz] [--no-ohz] [--no-quiver]
"""

from __future__ import annotations

import argparse
import sys

from .reader import MalformedTraceError, read_trace
from .render import PlotJob, render_frames, render_replan_chart


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="plot-trace", description=__doc__)
    parser.add_argument("--trace", required=True, help="trace file written by the simulator")
    parser.add_argument("--out", required=True, help="output directory for images")
    parser.add_argument("--stride", type=int, default=1, help="render every N-th tick")
    parser.add_argument("--chart-only", action="store_true", help="only the replanning-time chart")
    parser.add_argument("--no-lrz", action="store_true")
    parser.add_argument("--no-ohz", action="store_true")
    parser.add_argument("--no-quiver", action="store_true")
    args = parser.parse_args(argv)

    try:
        trace = read_trace(args.trace)
    except OSError as e:
        print(f"error: cannot read trace: {e}", file=sys.stderr)
        return 1
    except MalformedTraceError as e:
        print(f"error: malformed trace: {e}", file=sys.stderr)
        return 1

    job = PlotJob(
        trace_path=args.trace,
        out_dir=args.out,
        stride=args.stride,
        show_lrz=not args.no_lrz,
        show_ohz=not args.no_ohz,
        show_quiver=not args.no_quiver,
    )
    chart = render_replan_chart(job, trace)
    if args.chart_only:
        print(f"wrote {chart}")
        return 0
    frames = render_frames(job, trace)
    print(f"wrote {len(frames)} frames and {chart.name} to {job.out_dir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
