"""Line-delimited trace files.

One JSON object per line. The first line is the header record binding the
trace to its scenario (hash, seed, format version, embedded scenario
document); every following line is either a "tick" or a "replan" record:

    tick:   t, usv [x, y], path_node_ids, path_xy, obstacles [[x, y], ...],
            status
    replan: t, trigger ("obstacle_risk" | "current_deviation"), detail
            (obstacle id list or deviation ratio), chosen_node (null when no
            feasible candidate), candidates_evaluated, wall_clock_s

Floats are serialized with full round-trip precision (17 significant digits)
and keys are sorted, so identical runs produce byte-identical lines. The one
run-to-run volatile field is wall_clock_s, which records real elapsed time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path as FsPath


class MalformedTraceError(ValueError):
    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        super().__init__(message if line_no is None else f"line {line_no}: {message}")


@dataclass
class Trace:
    header: dict
    records: list[dict]


def _dump_line(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def trace_to_text(trace: Trace) -> str:
    lines = [_dump_line(trace.header)]
    lines.extend(_dump_line(r) for r in trace.records)
    return "\n".join(lines) + "\n"


def write_trace(trace: Trace, path: str | FsPath) -> None:
    FsPath(path).write_text(trace_to_text(trace), encoding="utf-8")


def trace_from_text(text: str) -> Trace:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise MalformedTraceError("empty trace")
    parsed: list[dict] = []
    for i, line in enumerate(lines, start=1):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise MalformedTraceError(f"invalid JSON ({e.msg})", line_no=i) from e
        if not isinstance(obj, dict) or "kind" not in obj:
            raise MalformedTraceError("record is not an object with a 'kind'", line_no=i)
        parsed.append(obj)
    header, records = parsed[0], parsed[1:]
    if header["kind"] != "header":
        raise MalformedTraceError("first record must be the header", line_no=1)
    last_t = -float("inf")
    for i, r in enumerate(records, start=2):
        if r["kind"] not in ("tick", "replan"):
            raise MalformedTraceError(f"unknown record kind {r['kind']!r}", line_no=i)
        t = r.get("t")
        if not isinstance(t, (int, float)):
            raise MalformedTraceError("record missing numeric 't'", line_no=i)
        if t < last_t:
            raise MalformedTraceError("records not time-ordered", line_no=i)
        last_t = t
    return Trace(header, records)


def read_trace(path: str | FsPath) -> Trace:
    return trace_from_text(FsPath(path).read_text(encoding="utf-8"))
