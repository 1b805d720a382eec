"""Local Reaction Zone monitoring, replanning triggers, and node reselection.

While the vehicle follows its path it watches a disc (the LRZ) around
itself. A replanning event fires when a dynamic obstacle's hazard disc
touches the LRZ, or when the current field probed along the upcoming in-LRZ
path portion deviates from the plan-time reference by more than a threshold;
the obstacle trigger has priority.

On a trigger, every tree node inside the LRZ is scored with the time-risk
cost

    Cost(N) = f(N) / (1 - r(N)),   f(N) = C(R, N) + g(N)

where C is the travel time from the vehicle to N, g the travel time from N
to the goal along the tree, and r the average path risk of usv -> N -> goal.
The admissible node with minimum cost (ties to the lowest id) is reconnected
to the vehicle. Candidates are rejected when the connecting segment is
statically blocked, enters an obstacle's d_min disc at predicted times, or is
infeasible against the current.

The evaluation below is batched for speed but reproduces, bit for bit, the
composition of the public primitives `edge_time`, `cost_to_go_time`,
`path_risk` and `time_risk_cost`; the equivalence suite enforces this.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .currents import CurrentField, deviation_ratio
from .geometry import Vec2, dist
from .timerisk import EdgeTimeParams, RiskParams, edge_times_many, point_risk, time_risk_cost
from .tree import Path, Tree
from .world import World


class NoFeasibleNodeError(RuntimeError):
    """Every LRZ candidate was rejected, infeasible, or inadmissible."""


@dataclass(frozen=True, slots=True)
class LrzConfig:
    radius: float = 5.0
    current_probe_count: int = 5
    deviation_threshold: float = 0.1

    def __post_init__(self) -> None:
        if not self.radius > 0.0:
            raise ValueError("lrz radius must be > 0")
        if self.current_probe_count < 1:
            raise ValueError("current_probe_count must be >= 1")
        if not self.deviation_threshold > 0.0:
            raise ValueError("deviation_threshold must be > 0")


class TriggerKind(Enum):
    OBSTACLE_RISK = "obstacle_risk"
    CURRENT_DEVIATION = "current_deviation"


@dataclass(frozen=True, slots=True)
class Trigger:
    kind: TriggerKind
    detail: tuple[int, ...] | float  # obstacle ids, or the deviation ratio
    time: float


@dataclass(frozen=True, slots=True)
class ReplanResult:
    new_path: Path
    chosen_node: int
    cost: float
    candidates_evaluated: int
    wall_clock: float
    trigger: Trigger


def lrz_probe_points(usv: Vec2, remaining: Sequence[Vec2], radius: float, count: int) -> list[Vec2]:
    """Evenly spaced probe points on the upcoming path portion inside the LRZ.

    The portion runs from the vehicle along the remaining waypoints up to the
    first exit of the LRZ disc (or the path end). Returns `count` points,
    endpoints included; degenerates to the vehicle position for an empty
    remainder.
    """
    segs: list[tuple[Vec2, Vec2]] = []
    prev = usv
    length_in = 0.0
    for w in remaining:
        if dist(prev, w) < 1e-12:
            continue
        d_prev = dist(prev, usv)
        d_w = dist(w, usv)
        if d_w <= radius:
            segs.append((prev, w))
            length_in += dist(prev, w)
            prev = w
            continue
        # prev inside (d_prev <= radius), w outside: clip at the circle crossing
        ex = w.x - prev.x
        ey = w.y - prev.y
        fx = prev.x - usv.x
        fy = prev.y - usv.y
        a = ex * ex + ey * ey
        bq = 2.0 * (fx * ex + fy * ey)
        c = fx * fx + fy * fy - radius * radius
        disc = bq * bq - 4.0 * a * c
        t = (-bq + math.sqrt(max(disc, 0.0))) / (2.0 * a)
        t = min(max(t, 0.0), 1.0)
        exit_p = Vec2(prev.x + t * ex, prev.y + t * ey)
        if dist(prev, exit_p) >= 1e-12:
            segs.append((prev, exit_p))
            length_in += dist(prev, exit_p)
        break
    if not segs or length_in < 1e-12:
        return [usv] * count
    if count == 1:
        targets = [0.5 * length_in]
    else:
        targets = [length_in * j / (count - 1) for j in range(count)]
    pts: list[Vec2] = []
    acc = 0.0
    k = 0
    for a_p, b_p in segs:
        seg_len = dist(a_p, b_p)
        while k < count and targets[k] <= acc + seg_len + 1e-12:
            f = (targets[k] - acc) / seg_len
            pts.append(Vec2(a_p.x + f * (b_p.x - a_p.x), a_p.y + f * (b_p.y - a_p.y)))
            k += 1
        acc += seg_len
    while k < count:
        pts.append(segs[-1][1])
        k += 1
    return pts


def reference_samples(field: CurrentField, probes: Sequence[Vec2], t_plan: float) -> list[Vec2]:
    """Field vectors at the probe points at plan time (the deviation baseline)."""
    return [field.sample(p, t_plan) for p in probes]


def check_triggers(
    usv: Vec2,
    remaining: Sequence[Vec2],
    world: World,
    field: CurrentField,
    reference: Sequence[Vec2],
    cfg: LrzConfig,
    t: float,
) -> Trigger | None:
    """Obstacle trigger if any OHZ touches the LRZ, else current-deviation
    trigger if the in-LRZ probes drifted past the threshold, else None."""
    ids = world.ohz_intersects_lrz(usv, cfg.radius, t)
    if ids:
        return Trigger(TriggerKind.OBSTACLE_RISK, tuple(ids), t)
    probes = lrz_probe_points(usv, remaining, cfg.radius, cfg.current_probe_count)
    ratio = deviation_ratio(field, [(p, t) for p in probes], list(reference))
    if ratio > cfg.deviation_threshold:
        return Trigger(TriggerKind.CURRENT_DEVIATION, ratio, t)
    return None


def replan(
    usv: Vec2,
    tree: Tree,
    world: World,
    field: CurrentField,
    t: float,
    cfg: LrzConfig,
    rp: RiskParams,
    ep: EdgeTimeParams,
    trigger: Trigger,
    sample_ds: float = 1.0,
    horizon: float = 15.0,
) -> ReplanResult:
    """Reselect the minimum time-risk cost node in the LRZ and reconnect.

    Raises NoFeasibleNodeError when no admissible candidate remains.
    """
    tic = time.perf_counter()
    cand = tree.nodes_in_radius(usv, cfg.radius)
    n_eval = int(len(cand))
    best_id = -1
    best_cost = math.inf

    if n_eval:
        px = tree._px[cand]
        py = tree._py[cand]
        clear = world.segments_clear_static_many(
            np.full(n_eval, usv.x), np.full(n_eval, usv.y), px, py
        )
        risk_step = min(ep.substep_m, sample_ds)
        # C(R, N): connecting-edge travel time on the edge-time grid; the risk
        # grid reuses it when the grids coincide (the default)
        c_durs, c_bounds = edge_times_many(
            np.full(n_eval, usv.x), np.full(n_eval, usv.y), px, py,
            field, np.full(n_eval, t), ep, want_boundaries=True,
        )
        if risk_step == ep.substep_m:
            r_durs, r_bounds = c_durs, c_bounds
        else:
            r_durs, r_bounds = edge_times_many(
                np.full(n_eval, usv.x), np.full(n_eval, usv.y), px, py,
                field, np.full(n_eval, t), ep, step_m=risk_step, want_boundaries=True,
            )
        g_epoch = tree.time_epoch(field, t, ep)
        risk_epoch = (
            g_epoch if risk_step == ep.substep_m else tree.time_epoch(field, t, ep, step_m=risk_step)
        )
        clear_nodes = [int(cand[k]) for k in range(n_eval) if clear[k]]
        g_epoch.ensure(clear_nodes)
        if risk_epoch is not g_epoch:
            risk_epoch.ensure(clear_nodes)

        # assemble every candidate's risk sample points (vehicle position, then
        # the boundary points of each path edge) as ranges into one combined
        # source buffer, expanded in a single vectorized gather
        geom = risk_epoch.geom
        src_x = np.concatenate((np.array([usv.x]), r_bounds.x, geom.bx))
        src_y = np.concatenate((np.array([usv.y]), r_bounds.y, geom.by))
        src_cum = np.concatenate((np.array([0.0]), r_bounds.cum, risk_epoch.bcum))
        geom_base = 1 + len(r_bounds.x)
        ent_lo: list[int] = []
        ent_n: list[int] = []
        ent_off: list[float] = []
        ent_cand: list[int] = []
        f_vals = np.full(n_eval, math.inf)
        parent = tree._parent
        edur = risk_epoch.dur
        for k in range(n_eval):
            if not clear[k]:
                continue
            node = int(cand[k])
            f_vals[k] = float(c_durs[k]) + float(g_epoch.g[node])
            ent_lo.append(0)
            ent_n.append(1)
            ent_off.append(0.0)
            ent_cand.append(k)
            lo, hi = int(r_bounds.ptr[k]), int(r_bounds.ptr[k + 1])
            if hi > lo:
                ent_lo.append(1 + lo)
                ent_n.append(hi - lo)
                ent_off.append(0.0)
                ent_cand.append(k)
            offset = 0.0 + float(r_durs[k])
            i = node
            # walk the chain only while its points can still pass the horizon
            # filter (boundary times are t + (offset + cum) >= t + offset)
            while i != 0 and t + offset <= t + horizon:
                lo, hi = int(geom.ptr[i - 1]), int(geom.ptr[i])
                if hi > lo:
                    ent_lo.append(geom_base + lo)
                    ent_n.append(hi - lo)
                    ent_off.append(offset)
                    ent_cand.append(k)
                offset = offset + float(edur[i - 1])
                i = int(parent[i])

        seg_ptr = np.zeros(n_eval + 1, dtype=np.int64)
        d_all = np.empty(0)
        min_d = np.full(n_eval, math.inf)
        if ent_lo:
            starts = np.array(ent_lo, dtype=np.int64)
            counts = np.array(ent_n, dtype=np.int64)
            eptr = np.zeros(len(starts) + 1, dtype=np.int64)
            np.cumsum(counts, out=eptr[1:])
            total = int(eptr[-1])
            rep = np.repeat(np.arange(len(starts)), counts)
            idx = starts[rep] + (np.arange(total) - eptr[rep])
            pts = t + (np.array(ent_off)[rep] + src_cum[idx])
            pcand = np.array(ent_cand, dtype=np.int64)[rep]
            keep = pts <= t + horizon
            d_all = world.min_dynamic_distance_many(src_x[idx][keep], src_y[idx][keep], pts[keep])
            np.cumsum(np.bincount(pcand[keep], minlength=n_eval), out=seg_ptr[1:])
            nonempty = seg_ptr[1:] > seg_ptr[:-1]
            if nonempty.any():
                min_d[nonempty] = np.minimum.reduceat(d_all, seg_ptr[:-1][nonempty])
        for k in range(n_eval):
            lo, hi = seg_ptr[k], seg_ptr[k + 1]
            if hi == lo or min_d[k] <= rp.d_min:
                continue  # rejected, or r = 1 (certain-collision band)
            if min_d[k] >= rp.d_max:
                r = 0.0  # every point outside the hazard band
            else:
                risks = [point_risk(float(di), rp) for di in d_all[lo:hi]]
                r = math.fsum(risks) / len(risks)
            cost = time_risk_cost(float(f_vals[k]), r)
            if cost < best_cost:
                best_cost = cost
                best_id = int(cand[k])

    wall = time.perf_counter() - tic
    if best_id < 0:
        raise NoFeasibleNodeError(
            f"no admissible LRZ candidate among {n_eval} at t={t:.3f}"
        )
    ids = tree.chain_ids(best_id)
    waypoints = [tree.position(i) for i in ids]
    if dist(usv, waypoints[0]) >= 1e-12:
        waypoints.insert(0, usv)
    return ReplanResult(
        new_path=Path(tuple(waypoints), tuple(ids)),
        chosen_node=best_id,
        cost=best_cost,
        candidates_evaluated=n_eval,
        wall_clock=wall,
        trigger=trigger,
    )
