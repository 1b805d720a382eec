"""Reader for line-delimited simulation trace files.

A trace is one JSON object per line: a header record first (scenario hash,
seed, format version, embedded scenario document), then time-ordered "tick"
and "replan" records. This module depends only on that documented format,
not on the simulator that wrote it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


class MalformedTraceError(ValueError):
    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        super().__init__(message if line_no is None else f"line {line_no}: {message}")


@dataclass
class TraceData:
    header: dict
    ticks: list[dict]
    replans: list[dict]

    @property
    def scenario(self) -> dict:
        return self.header.get("scenario", {})

    def replan_ticks(self) -> set[float]:
        return {r["t"] for r in self.replans}


def read_trace(path: str | Path) -> TraceData:
    lines = Path(path).read_text(encoding="utf-8").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise MalformedTraceError("empty trace")
    records = []
    for i, line in enumerate(lines, start=1):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise MalformedTraceError(f"invalid JSON ({e.msg})", line_no=i) from e
        if not isinstance(obj, dict) or "kind" not in obj:
            raise MalformedTraceError("record is not an object with a 'kind'", line_no=i)
        records.append(obj)
    header = records[0]
    if header["kind"] != "header":
        raise MalformedTraceError("first record must be the header", line_no=1)
    ticks = [r for r in records[1:] if r["kind"] == "tick"]
    replans = [r for r in records[1:] if r["kind"] == "replan"]
    for i, r in enumerate(records[1:], start=2):
        if r["kind"] not in ("tick", "replan"):
            raise MalformedTraceError(f"unknown record kind {r['kind']!r}", line_no=i)
        if "t" not in r:
            raise MalformedTraceError("record missing 't'", line_no=i)
    return TraceData(header, ticks, replans)
