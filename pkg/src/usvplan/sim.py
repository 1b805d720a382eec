"""Fixed-timestep closed-loop simulation.

Each tick advances time by dt, checks the replanning triggers at the new
time, replans if one fired, then moves the vehicle along its active path at
the effective ground speed for the tick's remaining budget (crossing
waypoints exactly; a tick may consume several short segments). If the
current defeats the vehicle on its track the vehicle stalls for the tick,
and if a replanning event finds no feasible candidate the vehicle holds
position and retries next tick. All failures become log entries rather than
exceptions, and a run is fully deterministic for a fixed scenario and seed.

The trace is line-delimited: a header record binding the run to its scenario
hash, then one "tick" record per step plus one "replan" record per
replanning event (see trace module for the exact schema).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field as dc_field
from enum import Enum

from .currents import CurrentField
from .geometry import Vec2, dist
from .replan import (
    LrzConfig,
    NoFeasibleNodeError,
    Trigger,
    TriggerKind,
    check_triggers,
    lrz_probe_points,
    reference_samples,
    replan,
)
from .scenario import ScenarioConfig
from .timerisk import EdgeTimeParams, RiskParams, effective_speed
from .trace import Trace
from .tree import NoConnectionError, Path, Tree, build, initial_path
from .world import World

TRACE_VERSION = 1


class SimStatus(Enum):
    RUNNING = "running"
    GOAL_REACHED = "goal_reached"
    TIMED_OUT = "timed_out"
    STUCK = "stuck"


@dataclass(frozen=True, slots=True)
class SimParams:
    dt: float = 0.1
    goal_tolerance: float = 1.0
    timeout: float = 120.0
    stuck_window: float = 30.0

    def __post_init__(self) -> None:
        if not self.dt > 0.0:
            raise ValueError("dt must be > 0")
        if not self.timeout > 0.0:
            raise ValueError("timeout must be > 0")


@dataclass(frozen=True)
class Metrics:
    mission_time: float
    path_length: float
    replan_count: int
    replan_wall_clocks: tuple[float, ...]
    min_obstacle_center_distance: float | None
    goal_reached: bool

    @property
    def mean_replan_wall_clock(self) -> float | None:
        if not self.replan_wall_clocks:
            return None
        return math.fsum(self.replan_wall_clocks) / len(self.replan_wall_clocks)


@dataclass
class SimState:
    t: float
    usv_pos: Vec2
    active_path: Path
    target_idx: int
    reference: list[Vec2]
    status: SimStatus = SimStatus.RUNNING
    last_move_t: float = 0.0
    traveled: float = 0.0


class Simulator:
    """One deterministic simulation instance; see `run` for the one-shot API."""

    def __init__(self, scenario: ScenarioConfig, tree: Tree | None = None):
        self.scenario = scenario
        self.world: World = scenario.build_world()
        self.field: CurrentField = scenario.build_field()
        self.lrz: LrzConfig = scenario.lrz
        self.risk: RiskParams = scenario.risk
        self.ep: EdgeTimeParams = EdgeTimeParams(scenario.edge_substep_m, scenario.usv_speed_mps)
        self.sim_params: SimParams = scenario.sim_params
        self.tree = tree if tree is not None else build(self.world, scenario.rrt_params())
        self.records: list[dict] = []
        start = scenario.start
        try:
            path0 = initial_path(self.tree, start, self.world)
            self.state = SimState(0.0, start, path0, self._first_target(path0, start), [])
            self._refresh_reference(0.0)
        except NoConnectionError:
            self.state = SimState(0.0, start, Path((scenario.goal,), (0,)), 0, [])
            self.state.status = SimStatus.STUCK

    @staticmethod
    def _first_target(path: Path, pos: Vec2) -> int:
        return 1 if len(path.waypoints) > 1 and dist(path.waypoints[0], pos) < 1e-12 else 0

    def _remaining(self) -> list[Vec2]:
        return list(self.state.active_path.waypoints[self.state.target_idx :])

    def _remaining_node_ids(self) -> tuple[int, ...]:
        path = self.state.active_path
        offset = len(path.waypoints) - len(path.node_ids)
        return path.node_ids[max(0, self.state.target_idx - offset) :]

    def _current_plan_cost(self) -> float:
        """Time-risk cost of continuing the active plan, evaluated with the
        same frozen epoch the replanner uses; infinite when the plan has
        become infeasible or certain-collision."""
        from .timerisk import edge_time, path_risk, time_risk_cost
        from .tree import cost_to_go_time

        st = self.state
        ids = self._remaining_node_ids()
        if not ids:
            return math.inf
        first = ids[0]
        c = edge_time(st.usv_pos, self.tree.position(first), self.field, st.t, self.ep)
        g = cost_to_go_time(self.tree, first, self.field, st.t, self.ep)
        waypoints = [st.usv_pos] + [self.tree.position(i) for i in ids]
        r = path_risk(
            waypoints, self.world, self.field, st.t, self.risk, self.ep,
            self.scenario.risk_sample_ds_m, self.scenario.risk_horizon_s,
        )
        return time_risk_cost(c + g, r)

    def _refresh_reference(self, t_plan: float) -> None:
        probes = lrz_probe_points(
            self.state.usv_pos, self._remaining(), self.lrz.radius, self.lrz.current_probe_count
        )
        self.state.reference = reference_samples(self.field, probes, t_plan)

    # ---- one tick ------------------------------------------------------------

    def step(self) -> SimState:
        st = self.state
        if st.status is not SimStatus.RUNNING:
            return st
        st.t = st.t + self.sim_params.dt
        t = st.t

        hold = False
        if self.scenario.replanning_enabled:
            trigger = check_triggers(
                st.usv_pos, self._remaining(), self.world, self.field, st.reference, self.lrz, t
            )
            if trigger is not None:
                hold = not self._replan(trigger)

        if not hold:
            self._advance_along_path()

        goal = self.scenario.goal
        if dist(st.usv_pos, goal) <= self.sim_params.goal_tolerance:
            st.status = SimStatus.GOAL_REACHED
        elif t >= self.sim_params.timeout:
            st.status = SimStatus.TIMED_OUT
        elif t - st.last_move_t >= self.sim_params.stuck_window:
            st.status = SimStatus.STUCK
        self._record_tick()
        return st

    def _replan(self, trigger: Trigger) -> bool:
        st = self.state
        detail = list(trigger.detail) if isinstance(trigger.detail, tuple) else trigger.detail
        try:
            result = replan(
                st.usv_pos, self.tree, self.world, self.field, st.t,
                self.lrz, self.risk, self.ep, trigger,
                sample_ds=self.scenario.risk_sample_ds_m,
                horizon=self.scenario.risk_horizon_s,
            )
        except NoFeasibleNodeError:
            self.records.append(
                {
                    "kind": "replan",
                    "t": st.t,
                    "trigger": trigger.kind.value,
                    "detail": detail,
                    "chosen_node": None,
                    "adopted": False,
                    "candidates_evaluated": 0,
                    "wall_clock_s": 0.0,
                }
            )
            return False
        # adopt the reselected path only if it beats continuing the current
        # plan under the same frozen evaluation; keeping the plan on ties
        # stops reconnect thrash when the best LRZ node was just passed
        adopted = bool(result.cost < self._current_plan_cost())
        if adopted:
            st.active_path = result.new_path
            st.target_idx = self._first_target(result.new_path, st.usv_pos)
        self._refresh_reference(st.t)
        self.records.append(
            {
                "kind": "replan",
                "t": st.t,
                "trigger": trigger.kind.value,
                "detail": detail,
                "chosen_node": result.chosen_node,
                "adopted": adopted,
                "candidates_evaluated": result.candidates_evaluated,
                "wall_clock_s": result.wall_clock,
            }
        )
        return True

    def _advance_along_path(self) -> None:
        st = self.state
        budget = self.sim_params.dt
        s = self.scenario.usv_speed_mps
        waypoints = st.active_path.waypoints
        moved = 0.0
        while budget > 1e-15 and st.target_idx < len(waypoints):
            tgt = waypoints[st.target_idx]
            d = dist(st.usv_pos, tgt)
            if d < 1e-12:
                st.target_idx += 1
                continue
            track = Vec2((tgt.x - st.usv_pos.x) / d, (tgt.y - st.usv_pos.y) / d)
            current = self.field.sample(st.usv_pos, st.t)
            v = effective_speed(s, current, track)
            if v is None:
                break  # stalled against the current this tick
            t_need = d / v
            if t_need <= budget:
                st.usv_pos = tgt
                st.target_idx += 1
                budget -= t_need
                moved += d
            else:
                step_d = v * budget
                st.usv_pos = Vec2(st.usv_pos.x + track.x * step_d, st.usv_pos.y + track.y * step_d)
                moved += step_d
                budget = 0.0
        if moved > 1e-9:
            st.last_move_t = st.t
            st.traveled += moved

    def _record_tick(self) -> None:
        st = self.state
        obstacles = [
            self.world.predict_position(ob, st.t).as_tuple() for ob in self.world.dynamics
        ]
        self.records.append(
            {
                "kind": "tick",
                "t": st.t,
                "usv": st.usv_pos.as_tuple(),
                "path_node_ids": list(st.active_path.node_ids),
                "path_xy": [w.as_tuple() for w in st.active_path.waypoints],
                "obstacles": obstacles,
                "status": st.status.value,
            }
        )

    def run(self) -> Trace:
        guard = int(self.sim_params.timeout / self.sim_params.dt) + 2
        for _ in range(guard):
            if self.state.status is not SimStatus.RUNNING:
                break
            self.step()
        header = {
            "kind": "header",
            "version": TRACE_VERSION,
            "seed": self.scenario.seed,
            "scenario_hash": self.scenario.scenario_hash(),
            "scenario": self.scenario.to_dict(),
        }
        return Trace(header, list(self.records))


def run(scenario: ScenarioConfig) -> tuple[Trace, Metrics]:
    """Build the tree, compute the baseline path, simulate to a terminal
    status, and aggregate metrics. Deterministic for a fixed scenario+seed."""
    sim = Simulator(scenario)
    trace = sim.run()
    return trace, metrics(trace)


def metrics(trace: Trace) -> Metrics:
    """Aggregate a trace into mission metrics (see Metrics fields)."""
    ticks = [r for r in trace.records if r.get("kind") == "tick"]
    replans = [r for r in trace.records if r.get("kind") == "replan"]
    wall_clocks = tuple(float(r["wall_clock_s"]) for r in replans)
    mission_time = float(ticks[-1]["t"]) if ticks else 0.0
    length = 0.0
    min_d: float = math.inf
    prev = None
    for r in ticks:
        ux, uy = r["usv"]
        if prev is not None:
            length += math.hypot(ux - prev[0], uy - prev[1])
        prev = (ux, uy)
        for ox, oy in r["obstacles"]:
            d = math.hypot(ux - ox, uy - oy)
            if d < min_d:
                min_d = d
    goal_reached = bool(ticks) and ticks[-1]["status"] == SimStatus.GOAL_REACHED.value
    return Metrics(
        mission_time=mission_time,
        path_length=length,
        replan_count=len(replans),
        replan_wall_clocks=wall_clocks,
        min_obstacle_center_distance=None if math.isinf(min_d) else min_d,
        goal_reached=goal_reached,
    )
