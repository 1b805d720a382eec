"""Offline renderer for USV simulation traces."""

from .reader import MalformedTraceError, TraceData, read_trace
from .render import PlotJob, render_frames, render_replan_chart

__version__ = "0.1.0"
