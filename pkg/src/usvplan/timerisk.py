"""Cost mathematics: effective speed in a current, edge traversal time,
the obstacle-risk function, average path risk, and the time-risk cost.

Effective speed along a track is the classic crabbing result: the vehicle
holds water-relative speed s, the current contributes along-track and
cross-track components, and the heading is chosen so the ground velocity
points exactly along the track:

    v_eff = c_par + sqrt(s^2 - c_perp^2)

which is infeasible when the cross current exceeds s or when the result is
not positive (current defeats the vehicle on this track).

Edge traversal time integrates that speed over sub-segments of length at
most `substep_m`, sampling the field at each sub-segment midpoint at the
running arrival time.

The obstacle-risk at center distance d is

    r(d) = 1                                  d <= d_min
    r(d) = exp((d - d_min) / (d - d_max))     d_min < d < d_max
    r(d) = 0                                  d >= d_max

continuous and strictly decreasing across the band. The time-risk cost of a
candidate is f / (1 - r), infinite (inadmissible) at r = 1.

Exactness conventions, relied on by the replanner equivalence tests: sums of
sub-segment times accumulate left to right; the average path risk uses
math.fsum (exactly rounded); scalar and vectorized evaluations use identical
formulas so they agree bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .currents import CurrentField
from .geometry import Vec2
from .world import World


@dataclass(frozen=True, slots=True)
class RiskParams:
    d_min: float
    d_max: float

    def __post_init__(self) -> None:
        if not (0.0 < self.d_min < self.d_max):
            raise ValueError(f"require 0 < d_min < d_max, got {self.d_min}, {self.d_max}")


@dataclass(frozen=True, slots=True)
class EdgeTimeParams:
    substep_m: float = 1.0
    usv_speed: float = 4.0

    def __post_init__(self) -> None:
        if not self.substep_m > 0.0:
            raise ValueError("substep_m must be > 0")
        if not self.usv_speed > 0.0:
            raise ValueError("usv_speed must be > 0")


def effective_speed(s: float, current: Vec2, track_dir: Vec2) -> float | None:
    """Ground speed along unit vector track_dir, or None if infeasible.

    The implied heading h satisfies |h| = 1 and s*h + current = v_eff*track_dir.
    """
    norm_sq = track_dir.x * track_dir.x + track_dir.y * track_dir.y
    if abs(norm_sq - 1.0) > 1e-9:
        raise ValueError("track_dir must be a unit vector")
    if not s > 0.0:
        raise ValueError("speed must be > 0")
    along = current.x * track_dir.x + current.y * track_dir.y
    cross = current.x * track_dir.y - current.y * track_dir.x
    disc = s * s - cross * cross
    if disc < 0.0:
        return None
    v = along + math.sqrt(disc)
    if v <= 0.0:
        return None
    return v


@dataclass(frozen=True)
class EdgeBoundaries:
    """Sub-segment boundary points of a batch of edges, excluding each edge's
    start point: for an edge split into n sub-segments the boundaries are the
    n points at fractions 1/n .. n/n.

    Flat layout: edge e owns slots ptr[e]:ptr[e+1]. `cum` holds the running
    traversal time from the edge start to each boundary (inf past an
    infeasible sub-segment).
    """

    ptr: np.ndarray
    x: np.ndarray
    y: np.ndarray
    cum: np.ndarray


@dataclass(frozen=True)
class EdgeGeometry:
    """Static sub-segment decomposition of a batch of edges: counts, unit
    directions, sub-segment length, and flat boundary positions (layout as in
    EdgeBoundaries). Independent of the field, so it can be computed once per
    tree and reused by every evaluation epoch."""

    ax: np.ndarray
    ay: np.ndarray
    nsub: np.ndarray
    sublen: np.ndarray
    ux: np.ndarray
    uy: np.ndarray
    ptr: np.ndarray
    bx: np.ndarray
    by: np.ndarray


def edge_geometry(ax, ay, bx, by, step: float) -> EdgeGeometry:
    """Split edges into ceil(length/step) equal sub-segments."""
    ax = np.asarray(ax, dtype=np.float64)
    ay = np.asarray(ay, dtype=np.float64)
    bx = np.asarray(bx, dtype=np.float64)
    by = np.asarray(by, dtype=np.float64)
    ex = bx - ax
    ey = by - ay
    length = np.sqrt(ex * ex + ey * ey)
    degenerate = length < 1e-12
    nsub = np.where(degenerate, 0, np.ceil(length / step)).astype(np.int64)
    safe_len = np.where(degenerate, 1.0, length)
    ux = ex / safe_len
    uy = ey / safe_len
    sublen = np.where(degenerate, 0.0, length / np.maximum(nsub, 1))
    ptr = np.zeros(len(ax) + 1, dtype=np.int64)
    np.cumsum(nsub, out=ptr[1:])
    total = int(ptr[-1])
    e_idx = np.repeat(np.arange(len(ax)), nsub)
    k_end = (np.arange(total) - ptr[e_idx]) + 1.0
    end = k_end * sublen[e_idx]
    b_x = ax[e_idx] + end * ux[e_idx]
    b_y = ay[e_idx] + end * uy[e_idx]
    if total:
        # final boundary of each edge is its exact endpoint
        has = nsub > 0
        b_x[(ptr[1:] - 1)[has]] = bx[has]
        b_y[(ptr[1:] - 1)[has]] = by[has]
    return EdgeGeometry(ax, ay, nsub, sublen, ux, uy, ptr, b_x, b_y)


def edge_times_core(
    geom: EdgeGeometry,
    subset: np.ndarray,
    field: CurrentField,
    t_starts: np.ndarray,
    s: float,
    out_cum: np.ndarray | None = None,
) -> np.ndarray:
    """Traversal times for the chosen edges of a geometry batch (inf where
    infeasible against the current).

    The field is sampled at each sub-segment midpoint at the edge's running
    arrival time; sub-segments advance in lockstep over the subset, sorted so
    the active lanes form a shrinking prefix. The ops per lane reproduce the
    scalar accumulation bit for bit regardless of batch composition.

    When `out_cum` is given (flat layout of geom.ptr), the running time at
    every sub-segment boundary is scattered into it.
    """
    if len(subset) == 0:
        return np.empty(0, dtype=np.float64)
    nsub = geom.nsub[subset]
    order = np.argsort(-nsub, kind="stable")
    idx = subset[order]
    nsub_o = nsub[order]
    ax_o = geom.ax[idx]
    ay_o = geom.ay[idx]
    ux_o = geom.ux[idx]
    uy_o = geom.uy[idx]
    sublen_o = geom.sublen[idx]
    ts_o = np.asarray(t_starts, dtype=np.float64)[order]
    slots_o = geom.ptr[idx]
    cum_o = np.zeros(len(idx), dtype=np.float64)
    max_n = int(nsub_o[0]) if len(nsub_o) else 0
    act = len(idx)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for i in range(max_n):
            while act > 0 and nsub_o[act - 1] <= i:
                act -= 1
            sl = slice(0, act)
            cum = cum_o[sl]
            feas = np.isfinite(cum)
            all_feasible = bool(feas.all())
            mid = (i + 0.5) * sublen_o[sl]
            mx = ax_o[sl] + mid * ux_o[sl]
            my = ay_o[sl] + mid * uy_o[sl]
            if all_feasible:
                cx, cy = field.sample_many(mx, my, ts_o[sl] + cum)
            else:
                tm = np.where(feas, ts_o[sl] + cum, 0.0)
                cx, cy = field.sample_many(np.where(feas, mx, 0.0), np.where(feas, my, 0.0), tm)
            along = cx * ux_o[sl] + cy * uy_o[sl]
            crossc = cx * uy_o[sl] - cy * ux_o[sl]
            disc = s * s - crossc * crossc
            ok = feas & (disc >= 0.0)
            if all_feasible and bool(ok.all()):
                v = along + np.sqrt(disc)
                ok = v > 0.0
                if bool(ok.all()):
                    new_cum = cum + sublen_o[sl] / v
                else:
                    new_cum = np.where(ok, cum + sublen_o[sl] / np.where(ok, v, 1.0), math.inf)
            else:
                v = along + np.sqrt(np.where(ok, disc, 0.0))
                ok &= v > 0.0
                dt = sublen_o[sl] / np.where(ok, v, 1.0)
                new_cum = np.where(ok, cum + dt, math.inf)
            if out_cum is not None:
                out_cum[slots_o[sl] + i] = new_cum
            cum_o[sl] = new_cum
    durations = np.empty(len(idx), dtype=np.float64)
    durations[order] = cum_o
    return durations


def edge_times_many(
    ax: np.ndarray,
    ay: np.ndarray,
    bx: np.ndarray,
    by: np.ndarray,
    field: CurrentField,
    t_starts: np.ndarray,
    p: EdgeTimeParams,
    step_m: float | None = None,
    want_boundaries: bool = False,
) -> tuple[np.ndarray, EdgeBoundaries | None]:
    """Traversal times for a batch of independent edges (inf where infeasible).

    Each edge is split into ceil(length/step) equal sub-segments; the field is
    sampled at each sub-segment midpoint at that edge's running arrival time.
    """
    step = p.substep_m if step_m is None else step_m
    geom = edge_geometry(ax, ay, bx, by, step)
    subset = np.arange(len(geom.ax))
    b_cum = np.empty(int(geom.ptr[-1]), dtype=np.float64) if want_boundaries else None
    durations = edge_times_core(geom, subset, field, t_starts, p.usv_speed, out_cum=b_cum)
    boundaries = (
        EdgeBoundaries(geom.ptr, geom.bx, geom.by, b_cum) if want_boundaries else None
    )
    return durations, boundaries


def edge_time(a: Vec2, b: Vec2, field: CurrentField, t_start: float, p: EdgeTimeParams) -> float:
    """Traversal time of segment ab starting at t_start (inf if infeasible)."""
    durs, _ = edge_times_many(
        np.array([a.x]), np.array([a.y]), np.array([b.x]), np.array([b.y]),
        field, np.array([t_start]), p,
    )
    return float(durs[0])


def point_risk(d: float, rp: RiskParams) -> float:
    """Obstacle risk at center distance d, in [0, 1]."""
    if d <= rp.d_min:
        return 1.0
    if d >= rp.d_max:
        return 0.0
    return math.exp((d - rp.d_min) / (d - rp.d_max))


def time_risk_cost(f: float, r: float) -> float:
    """Time cost inflated by risk: f / (1 - r). Infinite (inadmissible) at r = 1."""
    if f < 0.0:
        raise ValueError("time cost must be >= 0")
    if not 0.0 <= r <= 1.0:
        raise ValueError("risk must be in [0, 1]")
    if r == 1.0:
        return math.inf
    return f / (1.0 - r)


def _polyline_edges(waypoints: Sequence[Vec2]) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    pts = [waypoints[0]]
    for w in waypoints[1:]:
        prev = pts[-1]
        if math.sqrt((w.x - prev.x) ** 2 + (w.y - prev.y) ** 2) >= 1e-12:
            pts.append(w)
    ax = np.array([p.x for p in pts[:-1]])
    ay = np.array([p.y for p in pts[:-1]])
    bx = np.array([p.x for p in pts[1:]])
    by = np.array([p.y for p in pts[1:]])
    return ax, ay, bx, by


def path_risk(
    waypoints: Sequence[Vec2],
    world: World,
    field: CurrentField,
    t0: float,
    rp: RiskParams,
    ep: EdgeTimeParams,
    sample_ds: float = 1.0,
    horizon: float = 15.0,
) -> float:
    """Average obstacle risk over sampled points of a path, frozen at epoch t0.

    Points are the path start plus every sub-segment boundary (spacing at most
    min(sample_ds, substep); vertices are always boundaries). Each edge is
    timed with the frozen field epoch t0 as its start, and point arrival times
    accumulate edge durations left to right from t0, reusing the edge-time
    machinery so that f and r stay consistent within one replanning event.

    Risk is evaluated at points whose arrival time is within t0 + horizon (the
    start point always qualifies) against the predicted dynamic obstacle
    positions at those times; the result is the exact arithmetic mean of the
    point risks, overridden to exactly 1.0 if any point enters the d_min band.
    Points past an infeasible sub-segment have infinite arrival time and fall
    outside the horizon.
    """
    if not sample_ds > 0.0:
        raise ValueError("sample_ds must be > 0")
    if not horizon > 0.0:
        raise ValueError("horizon must be > 0")
    px = [waypoints[0].x]
    py = [waypoints[0].y]
    pt = [t0]
    if len(waypoints) > 1:
        ax, ay, bx, by = _polyline_edges(waypoints)
        if len(ax):
            step = min(ep.substep_m, sample_ds)
            durs, bounds = edge_times_many(
                ax, ay, bx, by, field, np.full(len(ax), t0), ep,
                step_m=step, want_boundaries=True,
            )
            offset = 0.0
            for e in range(len(ax)):
                lo, hi = int(bounds.ptr[e]), int(bounds.ptr[e + 1])
                for k in range(lo, hi):
                    px.append(float(bounds.x[k]))
                    py.append(float(bounds.y[k]))
                    pt.append(t0 + (offset + float(bounds.cum[k])))
                offset = offset + float(durs[e])

    px_a = np.array(px)
    py_a = np.array(py)
    pt_a = np.array(pt)
    keep = pt_a <= t0 + horizon
    px_a, py_a, pt_a = px_a[keep], py_a[keep], pt_a[keep]

    d = world.min_dynamic_distance_many(px_a, py_a, pt_a)
    if np.any(d <= rp.d_min):
        return 1.0
    if np.all(d >= rp.d_max):
        return 0.0
    risks = [point_risk(float(di), rp) for di in d]
    return math.fsum(risks) / len(risks)
