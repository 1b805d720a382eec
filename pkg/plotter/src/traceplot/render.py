"""Rendering: per-tick trajectory frames and the replanning-time chart.

Frames show the static obstacles (grey), dynamic obstacles (yellow, with
hazard rings), the vehicle with its reaction-zone ring (green), the active
path, the trajectory so far, and current-field arrows reconstructed from the
scenario document embedded in the trace header. Ticks at which a replanning
event fired are highlighted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from matplotlib.patches import Circle, Rectangle

from .reader import TraceData


@dataclass
class PlotJob:
    trace_path: str
    out_dir: str
    stride: int = 1
    show_lrz: bool = True
    show_ohz: bool = True
    show_quiver: bool = True

    def __post_init__(self) -> None:
        if self.stride < 1:
            raise ValueError("stride must be >= 1")


def field_velocity(scenario: dict, xs: np.ndarray, ys: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Ambient flow plus Rankine vortices, per the scenario document."""
    f = scenario.get("field", {})
    amb = f.get("ambient_mps", [0.0, 0.0])
    u = np.full_like(xs, float(amb[0]))
    v = np.full_like(xs, float(amb[1]))
    for vx in f.get("vortices", []):
        cx = vx["center_m"][0] + t * vx.get("drift_mps", [0, 0])[0]
        cy = vx["center_m"][1] + t * vx.get("drift_mps", [0, 0])[1]
        peak = vx["peak_speed_mps"]
        core = vx["core_radius_m"]
        spin = vx.get("spin", 1)
        rx = xs - cx
        ry = ys - cy
        rho = np.sqrt(rx * rx + ry * ry)
        safe = np.where(rho == 0.0, 1.0, rho)
        v_theta = np.where(rho <= core, peak * rho / core, peak * core / safe)
        fac = np.where(rho == 0.0, 0.0, spin * v_theta / safe)
        u += -ry * fac
        v += rx * fac
    return u, v


def _draw_world(ax, scenario: dict) -> None:
    bounds = scenario["world"]["bounds_m"]
    ax.set_xlim(bounds[0], bounds[2])
    ax.set_ylim(bounds[1], bounds[3])
    ax.set_aspect("equal")
    for ob in scenario.get("statics", []):
        if "disc_center_m" in ob:
            ax.add_patch(
                Circle(ob["disc_center_m"], ob["radius_m"], facecolor="0.55", edgecolor="0.3", zorder=3)
            )
        else:
            lo, hi = ob["rect_min_m"], ob["rect_max_m"]
            ax.add_patch(
                Rectangle(lo, hi[0] - lo[0], hi[1] - lo[1], facecolor="0.55", edgecolor="0.3", zorder=3)
            )


def render_frames(job: PlotJob, trace: TraceData) -> list[Path]:
    """One PNG per stride-th tick; returns the written paths."""
    out_dir = Path(job.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scenario = trace.scenario
    lrz_radius = scenario.get("lrz", {}).get("radius_m", 5.0)
    ohz_radii = [d.get("ohz_radius_m", 1.0) for d in scenario.get("dynamics", [])]
    start = scenario.get("start_m")
    goal = scenario.get("goal_m")
    replan_ts = trace.replan_ticks()

    bounds = scenario["world"]["bounds_m"]
    if job.show_quiver:
        qx, qy = np.meshgrid(
            np.linspace(bounds[0], bounds[2], 16), np.linspace(bounds[1], bounds[3], 16)
        )

    written: list[Path] = []
    trail_x: list[float] = []
    trail_y: list[float] = []
    sampled = trace.ticks[:: job.stride]
    seen = 0
    for frame_no, tick in enumerate(sampled):
        # extend the trail up to this tick (all ticks, not just sampled ones)
        while seen < len(trace.ticks) and trace.ticks[seen]["t"] <= tick["t"]:
            trail_x.append(trace.ticks[seen]["usv"][0])
            trail_y.append(trace.ticks[seen]["usv"][1])
            seen += 1

        fig, ax = plt.subplots(figsize=(6.4, 6.4 * (bounds[3] - bounds[1]) / (bounds[2] - bounds[0])))
        _draw_world(ax, scenario)
        t = tick["t"]
        if job.show_quiver:
            u, v = field_velocity(scenario, qx, qy, t)
            ax.quiver(qx, qy, u, v, color="#5a7ea3", alpha=0.6, width=0.0025, zorder=1)
        if start:
            ax.plot(*start, marker="s", color="tab:blue", ms=7, zorder=6)
        if goal:
            ax.plot(*goal, marker="*", color="tab:green", ms=14, zorder=6)
        for (ox, oy), r in zip(tick.get("obstacles", []), ohz_radii):
            ax.plot(ox, oy, marker="o", color="gold", mec="darkgoldenrod", ms=6, zorder=5)
            if job.show_ohz:
                ax.add_patch(Circle((ox, oy), r, fill=False, edgecolor="darkgoldenrod", ls="--", zorder=4))
        path_xy = tick.get("path_xy", [])
        if path_xy:
            xs = [p[0] for p in path_xy]
            ys = [p[1] for p in path_xy]
            ax.plot(xs, ys, "-", color="tab:red", lw=1.6, zorder=5, label="active path")
        ax.plot(trail_x, trail_y, "-", color="tab:blue", lw=1.2, alpha=0.8, zorder=5, label="trajectory")
        ux, uy = tick["usv"]
        ax.plot(ux, uy, marker="o", color="tab:blue", ms=7, zorder=7)
        if job.show_lrz:
            ax.add_patch(Circle((ux, uy), lrz_radius, fill=False, edgecolor="green", lw=1.4, zorder=6))
        replanned = t in replan_ts
        title = f"t = {t:.1f} s"
        if replanned:
            title += "  [replanned]"
            ax.plot(ux, uy, marker="o", ms=15, mfc="none", mec="magenta", mew=2.0, zorder=8)
        ax.set_title(title)
        ax.set_xlabel("x (m)")
        ax.set_ylabel("y (m)")
        out = out_dir / f"frame_{frame_no:05d}.png"
        fig.savefig(out, dpi=100, bbox_inches="tight")
        plt.close(fig)
        written.append(out)
    return written


def render_replan_chart(job: PlotJob, trace: TraceData) -> Path:
    """Bar chart of per-event replanning wall clock with the mean annotated."""
    out_dir = Path(job.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / "replan_times.png"
    durations_ms = [1e3 * float(r.get("wall_clock_s", 0.0)) for r in trace.replans]
    fig, ax = plt.subplots(figsize=(8, 4))
    if durations_ms:
        xs = np.arange(1, len(durations_ms) + 1)
        ax.bar(xs, durations_ms, color="#4878a8", width=0.8)
        mean = sum(durations_ms) / len(durations_ms)
        ax.axhline(mean, color="tab:red", ls="--", lw=1.4)
        ax.annotate(
            f"mean {mean:.3f} ms",
            xy=(0.99, mean),
            xycoords=("axes fraction", "data"),
            ha="right", va="bottom", color="tab:red",
        )
        ax.set_xlabel("replanning event")
    else:
        ax.text(0.5, 0.5, "no replanning events in trace", ha="center", va="center", transform=ax.transAxes)
        ax.set_xticks([])
    ax.set_ylabel("replanning time (ms)")
    ax.set_title(f"Replanning time per event ({len(durations_ms)} events)")
    fig.savefig(out, dpi=110, bbox_inches="tight")
    plt.close(fig)
    return out
