"""Shared independent oracles for the replanner equivalence tests.

The oracle enumerates LRZ candidates by brute force and scores each one by
composing the public primitives (edge_time, cost_to_go_time, path_risk,
time_risk_cost) exactly as documented, independent of the replanner's batched
evaluation loop.
"""

import math
import random

from usvplan.currents import CurrentField, Vortex
from usvplan.geometry import Disc, Rect, Vec2, dist
from usvplan.timerisk import EdgeTimeParams, RiskParams, edge_time, path_risk, time_risk_cost
from usvplan.tree import Tree, build, cost_to_go_time
from usvplan.world import DynamicObstacle, StaticObstacle, World
from usvplan.tree import RrtParams


def oracle_evaluate_candidate(usv, tree, node, world, field, t, rp, ep, sample_ds, horizon):
    """Cost of one candidate node per the documented evaluation."""
    pos = tree.position(node)
    if not world.segment_clear_static(usv, pos):
        return math.inf, math.inf, math.inf
    c = edge_time(usv, pos, field, t, ep)
    g = cost_to_go_time(tree, node, field, t, ep)
    f = c + g
    waypoints = [usv] + [tree.position(j) for j in tree.chain_ids(node)]
    r = path_risk(waypoints, world, field, t, rp, ep, sample_ds, horizon)
    return f, r, time_risk_cost(f, r)


def oracle_replan(usv, tree, world, field, t, cfg, rp, ep, sample_ds=1.0, horizon=15.0):
    """Exhaustive evaluation of every LRZ candidate; returns
    (best_id, best_cost, n_candidates); best_id is -1 when none admissible."""
    cand = [i for i in range(len(tree)) if dist(tree.position(i), usv) <= cfg.radius]
    best_id, best_cost = -1, math.inf
    for i in cand:
        _, _, cost = oracle_evaluate_candidate(
            usv, tree, i, world, field, t, rp, ep, sample_ds, horizon
        )
        if cost < best_cost:
            best_id, best_cost = i, cost
    return best_id, best_cost, len(cand)


def random_small_scenario(rng: random.Random):
    """A randomized compact world + tree + vehicle state for equivalence runs."""
    size = rng.uniform(18, 30)
    bounds = Rect(Vec2(0, 0), Vec2(size, size))
    statics = []
    for _ in range(rng.randint(0, 3)):
        if rng.random() < 0.5:
            r = rng.uniform(1.0, 2.5)
            c = Vec2(rng.uniform(r + 0.5, size - r - 0.5), rng.uniform(r + 0.5, size - r - 0.5))
            statics.append(StaticObstacle(Disc(c, r)))
        else:
            x0 = rng.uniform(0.5, size - 4)
            y0 = rng.uniform(0.5, size - 4)
            statics.append(
                StaticObstacle(Rect(Vec2(x0, y0), Vec2(x0 + rng.uniform(1, 3), y0 + rng.uniform(1, 3))))
            )
    dynamics = tuple(
        DynamicObstacle(
            i,
            Vec2(rng.uniform(1, size - 1), rng.uniform(1, size - 1)),
            Vec2(rng.uniform(-3, 3), rng.uniform(-3, 3)),
            rng.uniform(1.0, 3.0),
        )
        for i in range(rng.randint(0, 5))
    )
    world = World(bounds, tuple(statics), dynamics)

    vortices = tuple(
        Vortex(
            Vec2(rng.uniform(0, size), rng.uniform(0, size)),
            Vec2(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)),
            rng.uniform(0.0, 3.0),
            rng.uniform(2.0, 6.0),
            rng.choice((1, -1)),
        )
        for _ in range(rng.randint(0, 3))
    )
    field = CurrentField(Vec2(rng.uniform(-1, 1), rng.uniform(-1, 1)), vortices)

    while True:
        goal = Vec2(rng.uniform(1, size - 1), rng.uniform(1, size - 1))
        if world.point_clear_static(goal):
            break
    tree = build(
        world,
        RrtParams(goal=goal, node_budget=rng.randint(150, 400), step_size_m=2.0, seed=rng.randrange(10**6)),
    )
    while True:
        usv = Vec2(rng.uniform(1, size - 1), rng.uniform(1, size - 1))
        if world.point_clear_static(usv):
            break
    t = rng.uniform(0.0, 20.0)
    return world, field, tree, usv, t
