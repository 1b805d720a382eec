import math
import random

import numpy as np
import pytest

from helpers import oracle_evaluate_candidate, oracle_replan, random_small_scenario
from usvplan.currents import CurrentField
from usvplan.geometry import Disc, Rect, Vec2, dist
from usvplan.replan import (
    LrzConfig,
    NoFeasibleNodeError,
    Trigger,
    TriggerKind,
    check_triggers,
    lrz_probe_points,
    reference_samples,
    replan,
)
from usvplan.timerisk import EdgeTimeParams, RiskParams, path_risk, point_risk, time_risk_cost
from usvplan.tree import RrtParams, Tree, build
from usvplan.world import DynamicObstacle, StaticObstacle, World

STILL = CurrentField(Vec2(0, 0))
EP = EdgeTimeParams(1.0, 4.0)
RP = RiskParams(2.0, 5.0)
CFG = LrzConfig(radius=5.0, current_probe_count=5, deviation_threshold=0.1)


def open_world(size=100.0, statics=(), dynamics=()):
    return World(Rect(Vec2(0, 0), Vec2(size, size)), tuple(statics), tuple(dynamics))


def manual_trigger(t=0.0):
    return Trigger(TriggerKind.CURRENT_DEVIATION, 1.0, t)


class TestProbePoints:
    def test_probes_span_the_in_lrz_portion(self):
        usv = Vec2(0, 0)
        pts = lrz_probe_points(usv, [Vec2(20, 0)], 5.0, 5)
        assert len(pts) == 5
        assert pts[0] == Vec2(0, 0)
        assert pts[-1].x == pytest.approx(5.0, abs=1e-9)
        xs = [p.x for p in pts]
        assert xs == sorted(xs)

    def test_path_shorter_than_lrz(self):
        pts = lrz_probe_points(Vec2(0, 0), [Vec2(2, 0)], 5.0, 3)
        assert pts[-1] == Vec2(2, 0)

    def test_empty_remainder(self):
        pts = lrz_probe_points(Vec2(1, 1), [], 5.0, 4)
        assert pts == [Vec2(1, 1)] * 4

    def test_multi_segment_clip(self):
        pts = lrz_probe_points(Vec2(0, 0), [Vec2(3, 0), Vec2(3, 10)], 5.0, 9)
        total = 3.0 + 4.0  # exits the radius-5 circle at (3, 4)
        assert pts[-1].x == pytest.approx(3.0, abs=1e-9)
        assert pts[-1].y == pytest.approx(4.0, abs=1e-9)
        assert pts[4].x == pytest.approx(3.0, abs=1e-6)  # halfway = 3.5 m -> on leg 2
        assert pts[4].y == pytest.approx(0.5, abs=1e-6)


class TestCheckTriggers:
    def test_obstacle_trigger_touching(self):
        w = open_world(dynamics=[DynamicObstacle(0, Vec2(8, 0), Vec2(0, 0), 3.0)])
        ref = reference_samples(STILL, lrz_probe_points(Vec2(0, 0), [Vec2(20, 0)], 5.0, 5), 0.0)
        trig = check_triggers(Vec2(0, 0), [Vec2(20, 0)], w, STILL, ref, CFG, 0.0)
        assert trig is not None and trig.kind is TriggerKind.OBSTACLE_RISK
        assert trig.detail == (0,)

    def test_obstacle_priority_over_deviation(self):
        w = open_world(dynamics=[DynamicObstacle(0, Vec2(7, 0), Vec2(0, 0), 3.0)])
        # reference deliberately wrong so deviation would also fire
        ref = [Vec2(9, 9)] * 5
        trig = check_triggers(Vec2(0, 0), [Vec2(20, 0)], w, STILL, ref, CFG, 0.0)
        assert trig.kind is TriggerKind.OBSTACLE_RISK

    def test_deviation_trigger(self):
        w = open_world()
        ref = [Vec2(2, 0)] * 5
        field = CurrentField(Vec2(2, 0.5))  # ratio |(0, 0.5)| / 2 = 0.25 > 0.1
        trig = check_triggers(Vec2(0, 0), [Vec2(20, 0)], w, field, ref, CFG, 0.0)
        assert trig.kind is TriggerKind.CURRENT_DEVIATION
        assert trig.detail == pytest.approx(0.25, abs=0)

    def test_no_trigger_when_unchanged(self):
        w = open_world()
        probes = lrz_probe_points(Vec2(0, 0), [Vec2(20, 0)], 5.0, 5)
        ref = reference_samples(STILL, probes, 0.0)
        assert check_triggers(Vec2(0, 0), [Vec2(20, 0)], w, STILL, ref, CFG, 0.0) is None


class TestReplan:
    def test_goal_inside_lrz_degenerate_endgame(self):
        w = open_world()
        tree = build(w, RrtParams(goal=Vec2(52, 50), node_budget=0))
        usv = Vec2(48, 50)
        res = replan(usv, tree, w, STILL, 0.0, CFG, RP, EP, manual_trigger())
        assert res.chosen_node == 0
        assert res.new_path.waypoints == (usv, Vec2(52, 50))
        f, r, cost = oracle_evaluate_candidate(usv, tree, 0, w, STILL, 0.0, RP, EP, 1.0, 15.0)
        assert cost == pytest.approx(1.0, rel=1e-12)  # 4 m at 4 m/s

    def test_two_candidates_cost_tradeoff(self):
        # one connection is longer but risk-free, the other shorter but risky;
        # verify against the composed primitives for both and pick the argmin
        w = open_world(dynamics=[DynamicObstacle(0, Vec2(54, 47.2), Vec2(0, 0), 1.0)])
        tree = Tree(w, RrtParams(goal=Vec2(70, 50), node_budget=4))
        risky = tree.add_leaf(Vec2(54, 50), 0)  # passes near the obstacle
        safe = tree.add_leaf(Vec2(51, 54), 0)  # detours above
        usv = Vec2(50, 50)
        res = replan(usv, tree, w, STILL, 0.0, CFG, RP, EP, manual_trigger())
        scored = {}
        for node in (risky, safe, 0):
            if dist(tree.position(node), usv) <= CFG.radius:
                f, r, cost = oracle_evaluate_candidate(
                    usv, tree, node, w, STILL, 0.0, RP, EP, 1.0, 15.0
                )
                scored[node] = cost
        want = min(scored, key=lambda n: (scored[n], n))
        assert res.chosen_node == want
        assert scored[res.chosen_node] < math.inf

    def test_blocked_lrz_raises(self):
        # obstacle parked on the vehicle: every sampled path point starts at r=1
        w = open_world(dynamics=[DynamicObstacle(0, Vec2(50, 50), Vec2(0, 0), 1.0)])
        tree = build(w, RrtParams(goal=Vec2(52, 50), node_budget=64, seed=1))
        with pytest.raises(NoFeasibleNodeError):
            replan(Vec2(50, 50), tree, w, STILL, 0.0, CFG, RP, EP, manual_trigger())

    def test_empty_lrz_raises(self):
        w = open_world()
        tree = build(w, RrtParams(goal=Vec2(90, 90), node_budget=0))
        with pytest.raises(NoFeasibleNodeError):
            replan(Vec2(10, 10), tree, w, STILL, 0.0, CFG, RP, EP, manual_trigger())

    def test_statically_blocked_connection_rejected(self):
        statics = [StaticObstacle(Disc(Vec2(52, 50), 1.0))]
        w = open_world(statics=statics)
        tree = Tree(w, RrtParams(goal=Vec2(70, 50), node_budget=4))
        behind = tree.add_leaf(Vec2(54, 50), 0)  # straight shot crosses the disc
        above = tree.add_leaf(Vec2(50, 54), 0)
        res = replan(Vec2(50, 50), tree, w, STILL, 0.0, CFG, RP, EP, manual_trigger())
        assert res.chosen_node == above

    def test_result_metadata(self):
        w = open_world()
        tree = build(w, RrtParams(goal=Vec2(60, 50), node_budget=500, seed=3))
        usv = Vec2(50, 50)
        trig = manual_trigger(7.0)
        res = replan(usv, tree, w, STILL, 7.0, CFG, RP, EP, trig)
        assert res.trigger is trig
        assert res.wall_clock >= 0.0
        assert res.candidates_evaluated == len(tree.nodes_in_radius(usv, CFG.radius))
        assert res.new_path.waypoints[0] == usv
        assert res.new_path.waypoints[-1] == Vec2(60, 50)

    def test_returned_path_statically_clear_and_safe(self):
        rng = random.Random(99)
        for _ in range(10):
            world, field, tree, usv, t = random_small_scenario(rng)
            try:
                res = replan(usv, tree, world, field, t, CFG, RP, EP, manual_trigger(t))
            except NoFeasibleNodeError:
                continue
            wps = res.new_path.waypoints
            for a, b in zip(wps, wps[1:]):
                assert world.segment_clear_static(a, b)
            r = path_risk(list(wps), world, field, t, RP, EP, 1.0, 15.0)
            assert r < 1.0

    def test_reselection_never_worsens_under_unchanged_conditions(self):
        w = open_world()
        field = CurrentField(Vec2(1.2, -0.4))
        tree = build(w, RrtParams(goal=Vec2(80, 60), node_budget=2000, seed=5))
        from usvplan.tree import initial_path
        from usvplan.timerisk import edge_time
        from usvplan.tree import cost_to_go_time

        path = initial_path(tree, Vec2(10, 10), w)
        # vehicle on the first segment, close enough that the next node is an
        # LRZ candidate (otherwise the connection node changes by necessity)
        a, b = path.waypoints[0], path.waypoints[1]
        d_seg = dist(a, b)
        back = min(4.0, 0.5 * d_seg)
        usv = Vec2(b.x - (b.x - a.x) / d_seg * back, b.y - (b.y - a.y) / d_seg * back)
        n_next = path.node_ids[0]
        t = 4.0
        remaining = edge_time(usv, tree.position(n_next), field, t, EP) + cost_to_go_time(
            tree, n_next, field, t, EP
        )
        res = replan(usv, tree, w, field, t, CFG, RP, EP, manual_trigger(t))
        f, r, cost = oracle_evaluate_candidate(
            usv, tree, res.chosen_node, w, field, t, RP, EP, 1.0, 15.0
        )
        assert r == 0.0
        assert cost <= remaining + 1e-9


class TestBruteForceEquivalence:
    def test_matches_oracle_on_random_scenarios(self):
        rng = random.Random(2024)
        checked = 0
        for _ in range(25):
            world, field, tree, usv, t = random_small_scenario(rng)
            want_id, want_cost, want_n = oracle_replan(usv, tree, world, field, t, CFG, RP, EP)
            try:
                res = replan(usv, tree, world, field, t, CFG, RP, EP, manual_trigger(t))
                got_id, got_n = res.chosen_node, res.candidates_evaluated
                f, r, got_cost = oracle_evaluate_candidate(
                    usv, tree, got_id, world, field, t, RP, EP, 1.0, 15.0
                )
            except NoFeasibleNodeError:
                got_id, got_cost, got_n = -1, math.inf, None
            assert got_id == want_id
            if want_id >= 0:
                assert got_cost == want_cost
                assert got_n == want_n
                checked += 1
        assert checked >= 10  # most random scenarios must be solvable

    def test_argmin_invariant_under_positive_scaling_of_f(self):
        rng = random.Random(7)
        for _ in range(200):
            n = rng.randint(2, 12)
            fs = [rng.uniform(0.1, 50) for _ in range(n)]
            rs = [rng.uniform(0, 0.95) for _ in range(n)]
            c = rng.uniform(0.01, 100)
            base = min(range(n), key=lambda i: (time_risk_cost(fs[i], rs[i]), i))
            scaled = min(range(n), key=lambda i: (time_risk_cost(c * fs[i], rs[i]), i))
            assert base == scaled
