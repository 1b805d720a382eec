"""Goal-rooted RRT* over static obstacles.

The tree is rooted at the goal, so the usual RRT* cost-from-root is directly
the distance cost-to-go g_dist(N); extracting a plan for any connection node
is a walk up the parent chain. Build-time edge cost is Euclidean distance
(the baseline plan ignores currents and dynamic obstacles); travel-time
cost-to-go under a current field is evaluated on demand and memoized per
evaluation epoch, see `cost_to_go_time`.

Nodes live in flat numpy arrays, which double as the spatial index: nearest
and radius queries are vectorized scans, plenty fast at the budgets used
here. Ties anywhere resolve to the lowest node id so that builds and queries
are fully deterministic for a fixed seed.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field as dc_field

import numpy as np

from .currents import CurrentField
from .geometry import Vec2, dist
from .timerisk import EdgeGeometry, EdgeTimeParams, edge_geometry, edge_times_core
from .world import World


class InvalidRootError(ValueError):
    """Goal root lies outside the bounds or inside a static obstacle."""


class NoConnectionError(RuntimeError):
    """No tree node is reachable from the start by a statically clear segment."""


@dataclass(frozen=True, slots=True)
class RrtParams:
    goal: Vec2
    node_budget: int
    step_size_m: float = 3.0
    rewire_gamma_m: float | None = None  # None: 2.5 * sqrt(bounds area / pi)
    max_rewire_radius_m: float | None = None  # None: 2.5 * step_size_m
    seed: int = 0

    def __post_init__(self) -> None:
        if self.node_budget < 0:
            raise ValueError("node_budget must be >= 0")
        if not self.step_size_m > 0.0:
            raise ValueError("step_size_m must be > 0")
        if self.max_rewire_radius_m is not None and self.max_rewire_radius_m < self.step_size_m:
            raise ValueError("max_rewire_radius_m must be >= step_size_m")


@dataclass(frozen=True, slots=True)
class Path:
    """Waypoints from the vehicle to the goal, plus the tree suffix ids."""

    waypoints: tuple[Vec2, ...]
    node_ids: tuple[int, ...]

    @property
    def goal(self) -> Vec2:
        return self.waypoints[-1]


class _Epoch:
    """Per-replanning-event memo of travel-time quantities for tree edges,
    evaluated with the field epoch frozen at t0 (every edge's integration
    starts at t0, so an edge's duration is a per-edge constant within the
    event and cost-to-go composes as g(n) = dur(n) + g(parent)).

    Filled lazily one parent chain at a time: `ensure` walks each requested
    node toward the root until it meets already-known values, batch-times the
    new edges, and unwinds the chain sums."""

    def __init__(self, tree: "Tree", key: tuple, geom: EdgeGeometry, field: CurrentField,
                 t0: float, speed: float):
        self.tree = tree
        self.key = key
        self.geom = geom
        self.field = field
        self.t0 = t0
        self.speed = speed
        n = tree.n
        self.dur = np.full(max(n - 1, 0), np.nan)  # edge i (node i -> parent) at slot i - 1
        self.bcum = np.empty(int(geom.ptr[-1]), dtype=np.float64)
        self.g = np.full(n, np.nan)
        self.g[0] = 0.0

    def ensure(self, nodes) -> None:
        parent = self.tree._parent
        g = self.g
        seen: set[int] = set()
        stacks: list[list[int]] = []
        for node in nodes:
            i = int(node)
            stack: list[int] = []
            while i != 0 and i not in seen and math.isnan(g[i]):
                seen.add(i)
                stack.append(i)
                i = int(parent[i])
            if stack:
                stacks.append(stack)
        if not stacks:
            return
        slots = np.array(sorted(seen), dtype=np.int64) - 1
        self.dur[slots] = edge_times_core(
            self.geom, slots, self.field, np.full(len(slots), self.t0), self.speed,
            out_cum=self.bcum,
        )
        for stack in stacks:
            for i in reversed(stack):
                g[i] = self.dur[i - 1] + g[parent[i]]


class Tree:
    def __init__(self, world: World, params: RrtParams):
        cap = params.node_budget + 1
        self.world = world
        self.params = params
        self._px = np.empty(cap, dtype=np.float64)
        self._py = np.empty(cap, dtype=np.float64)
        self._parent = np.full(cap, -1, dtype=np.int64)
        self._gdist = np.zeros(cap, dtype=np.float64)
        self._children: list[list[int]] = [[] for _ in range(cap)]
        self._px[0] = params.goal.x
        self._py[0] = params.goal.y
        self.n = 1
        self._geoms: dict[float, EdgeGeometry] = {}
        self._epochs: dict[tuple, _Epoch] = {}

    # ---- basic access --------------------------------------------------------

    def __len__(self) -> int:
        return self.n

    @property
    def root(self) -> int:
        return 0

    def position(self, i: int) -> Vec2:
        return Vec2(float(self._px[i]), float(self._py[i]))

    def parent(self, i: int) -> int:
        return int(self._parent[i])

    def g_dist(self, i: int) -> float:
        return float(self._gdist[i])

    def chain_ids(self, i: int) -> list[int]:
        """Node ids from i to the root, inclusive."""
        out = [i]
        while out[-1] != 0:
            out.append(int(self._parent[out[-1]]))
        return out

    # ---- queries -------------------------------------------------------------

    def nearest(self, p: Vec2) -> int:
        dx = self._px[: self.n] - p.x
        dy = self._py[: self.n] - p.y
        return int(np.argmin(dx * dx + dy * dy))

    def nodes_in_radius(self, center: Vec2, radius: float) -> np.ndarray:
        """Ids (ascending) of nodes with dist(pos, center) <= radius."""
        if not radius > 0.0:
            raise ValueError("radius must be > 0")
        dx = self._px[: self.n] - center.x
        dy = self._py[: self.n] - center.y
        return np.nonzero(np.sqrt(dx * dx + dy * dy) <= radius)[0]

    # ---- construction --------------------------------------------------------

    def add_leaf(self, pos: Vec2, parent: int) -> int:
        """Append a node under an existing parent (fixture/tooling helper)."""
        if not 0 <= parent < self.n:
            raise IndexError(f"parent id {parent} out of range")
        if self.n >= len(self._px):
            raise ValueError("tree is at its node budget")
        edge_len = dist(pos, self.position(parent))
        i = self._add_node(pos.x, pos.y, parent, edge_len)
        self.invalidate_caches()
        return i

    def _add_node(self, x: float, y: float, parent: int, edge_len: float) -> int:
        i = self.n
        self._px[i] = x
        self._py[i] = y
        self._parent[i] = parent
        self._gdist[i] = self._gdist[parent] + edge_len
        self._children[parent].append(i)
        self.n += 1
        return i

    def _refresh_subtree_gdist(self, node: int) -> None:
        # recompute from coordinates so parent/child costs stay exactly consistent
        stack = [node]
        while stack:
            m = stack.pop()
            for c in self._children[m]:
                self._gdist[c] = self._gdist[m] + math.sqrt(
                    (self._px[c] - self._px[m]) ** 2 + (self._py[c] - self._py[m]) ** 2
                )
                stack.append(c)

    # ---- travel-time epoch ----------------------------------------------------

    def time_epoch(self, field: CurrentField, t0: float, ep: EdgeTimeParams, step_m: float | None = None) -> _Epoch:
        """Travel-time memo for the replanning event at frozen field epoch t0.

        Tree edges (node -> parent, toward the goal) are timed on demand by
        the edge-time integrator started at t0. Recomputed only when
        (field, t0, params) change, so all queries within one replanning
        event share one consistent evaluation.
        """
        step = ep.substep_m if step_m is None else step_m
        key = (id(field), t0, ep.usv_speed, step)
        hit = self._epochs.get(key)
        if hit is not None:
            return hit
        geom = self._geoms.get(step)
        if geom is None:
            n = self.n
            child = np.arange(1, n)
            par = self._parent[1:n]
            geom = edge_geometry(
                self._px[child], self._py[child], self._px[par], self._py[par], step
            )
            self._geoms[step] = geom
        epoch = _Epoch(self, key, geom, field, t0, ep.usv_speed)
        # retain only the current event's epochs (g and risk grids may differ)
        self._epochs = {k: v for k, v in self._epochs.items() if k[1] == t0}
        self._epochs[key] = epoch
        return epoch

    def invalidate_caches(self) -> None:
        self._geoms = {}
        self._epochs = {}


def cost_to_go_time(tree: Tree, node: int, field: CurrentField, t0: float, ep: EdgeTimeParams) -> float:
    """Travel time from a node to the goal along the tree (inf if infeasible).

    Edge times are evaluated with the field epoch frozen at t0 (each edge's
    integration starts at t0), and memoized per replanning event via the
    tree's time epoch, so every candidate within one event shares one
    consistent evaluation.
    """
    if not 0 <= node < tree.n:
        raise IndexError(f"node id {node} out of range")
    epoch = tree.time_epoch(field, t0, ep)
    epoch.ensure([node])
    return float(epoch.g[node])


def build(world: World, params: RrtParams) -> Tree:
    """Grow a goal-rooted RRT* tree over the static obstacles.

    Standard RRT* loop: uniform sample in bounds, steer from the nearest node
    by at most the step size, connect to the clear neighbor minimizing
    distance cost-to-go, then rewire neighbors that improve through the new
    node. The neighbor ball uses the shrinking-radius schedule
    min(r_max, gamma * sqrt(ln n / n)) floored at the step size; the cap also
    bounds every edge length, which keeps edges cheap to re-time during
    replanning. Deterministic for a fixed seed.
    """
    goal = params.goal
    if not world.bounds.contains(goal):
        raise InvalidRootError(f"goal root {goal} outside world bounds")
    if not world.point_clear_static(goal):
        raise InvalidRootError(f"goal root {goal} inside a static obstacle")

    tree = Tree(world, params)
    eta = params.step_size_m
    b = world.bounds
    if params.rewire_gamma_m is None:
        gamma = 2.5 * math.sqrt(b.width * b.height / math.pi)
    else:
        gamma = params.rewire_gamma_m
    r_max = 2.5 * eta if params.max_rewire_radius_m is None else params.max_rewire_radius_m
    rng = random.Random(params.seed)

    for _ in range(params.node_budget):
        sx = rng.uniform(b.lo.x, b.hi.x)
        sy = rng.uniform(b.lo.y, b.hi.y)
        px = tree._px[: tree.n]
        py = tree._py[: tree.n]
        dx = px - sx
        dy = py - sy
        d2 = dx * dx + dy * dy
        near = int(np.argmin(d2))
        d_near = math.sqrt(float(d2[near]))
        if d_near < 1e-12:
            continue
        if d_near <= eta:
            nx, ny = sx, sy
        else:
            scale = eta / d_near
            nx = float(px[near]) + (sx - float(px[near])) * scale
            ny = float(py[near]) + (sy - float(py[near])) * scale

        radius = max(eta, min(r_max, gamma * math.sqrt(math.log(tree.n + 1) / (tree.n + 1))))
        ndx = px - nx
        ndy = py - ny
        ndist = np.sqrt(ndx * ndx + ndy * ndy)
        neighbors = np.nonzero(ndist <= radius)[0]
        if float(ndist[neighbors].min()) < 1e-12:
            continue  # refuse coincident nodes; keeps every edge non-degenerate
        clear = world.segments_clear_static_many(
            px[neighbors], py[neighbors], np.full(len(neighbors), nx), np.full(len(neighbors), ny)
        )
        feasible = neighbors[clear]
        if len(feasible) == 0:
            continue

        edge_len = ndist[feasible]
        through = tree._gdist[feasible] + edge_len
        best_k = int(np.argmin(through))
        parent = int(feasible[best_k])
        new = tree._add_node(nx, ny, parent, float(edge_len[best_k]))

        # rewire: re-parent any neighbor that improves through the new node
        g_new = tree._gdist[new]
        for k, m in enumerate(feasible):
            m = int(m)
            if m == parent:
                continue
            candidate_g = g_new + float(edge_len[k])
            if candidate_g < tree._gdist[m]:
                tree._children[int(tree._parent[m])].remove(m)
                tree._parent[m] = new
                tree._children[new].append(m)
                tree._gdist[m] = candidate_g
                tree._refresh_subtree_gdist(m)

    tree.invalidate_caches()
    return tree


def initial_path(tree: Tree, start: Vec2, world: World) -> Path:
    """Distance-optimal baseline path from the start onto the tree.

    Connects the start to the node minimizing dist(start, N) + g_dist(N)
    among nodes reachable by a statically clear segment. Raises
    NoConnectionError if no node qualifies.
    """
    root_pos = tree.position(0)
    if dist(start, root_pos) < 1e-12:
        return Path((root_pos,), (0,))
    dx = tree._px[: tree.n] - start.x
    dy = tree._py[: tree.n] - start.y
    score = np.sqrt(dx * dx + dy * dy) + tree._gdist[: tree.n]
    order = np.lexsort((np.arange(tree.n), score))
    for i in order:
        i = int(i)
        if world.segment_clear_static(start, tree.position(i)):
            return _path_through(tree, start, i)
    raise NoConnectionError("no tree node reachable from start by a clear segment")


def _path_through(tree: Tree, start: Vec2, node: int) -> Path:
    ids = tree.chain_ids(node)
    waypoints = [tree.position(i) for i in ids]
    if dist(start, waypoints[0]) >= 1e-12:
        waypoints.insert(0, start)
    return Path(tuple(waypoints), tuple(ids))
