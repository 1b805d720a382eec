"""Obstacle store: static shapes, constant-velocity movers, hazard queries.

Dynamic obstacles advance at constant velocity and reflect specularly off the
world bounds, so they stay in play for arbitrarily long missions. Distances
to dynamic obstacles are center-to-center; hazard radii are absorbed by the
risk thresholds configured per scenario.

Scalar queries have vectorized twins (suffix `_many`) used by the planner hot
path; both evaluate the same formulas and tests assert exact agreement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Disc, Rect, Vec2, dist, segment_disc_hit, segment_rect_hit

Shape = Disc | Rect


@dataclass(frozen=True, slots=True)
class StaticObstacle:
    shape: Shape


@dataclass(frozen=True, slots=True)
class DynamicObstacle:
    id: int
    pos0: Vec2
    vel: Vec2
    ohz_radius: float

    def __post_init__(self) -> None:
        if not self.ohz_radius > 0.0:
            raise ValueError("ohz_radius must be > 0")


def _reflect_coord(x0: float, v: float, t: float, lo: float, hi: float) -> float:
    """Position of a 1-D bouncing point at time t (triangle-wave fold)."""
    width = hi - lo
    period = 2.0 * width
    u = math.fmod(x0 - lo + v * t, period)
    if u < 0.0:
        u += period
    return lo + (u if u <= width else period - u)


@dataclass(frozen=True)
class World:
    bounds: Rect
    statics: tuple[StaticObstacle, ...] = field(default_factory=tuple)
    dynamics: tuple[DynamicObstacle, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        ids = [ob.id for ob in self.dynamics]
        if len(set(ids)) != len(ids):
            raise ValueError("dynamic obstacle ids must be unique")
        for ob in self.statics:
            if not self._shape_in_bounds(ob.shape):
                raise ValueError(f"static obstacle {ob.shape} not contained in world bounds")

    def _shape_in_bounds(self, shape: Shape) -> bool:
        b = self.bounds
        if isinstance(shape, Disc):
            c, r = shape.center, shape.radius
            return (
                b.lo.x <= c.x - r
                and c.x + r <= b.hi.x
                and b.lo.y <= c.y - r
                and c.y + r <= b.hi.y
            )
        return b.contains(shape.lo) and b.contains(shape.hi)

    # ---- dynamic obstacle motion -------------------------------------------------

    def predict_position(self, ob: DynamicObstacle, t: float) -> Vec2:
        """Constant-velocity advance from pos0 with specular wall reflection."""
        b = self.bounds
        return Vec2(
            _reflect_coord(ob.pos0.x, ob.vel.x, t, b.lo.x, b.hi.x),
            _reflect_coord(ob.pos0.y, ob.vel.y, t, b.lo.y, b.hi.y),
        )

    def _dynamics_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        cached = getattr(self, "_dyn_arrays", None)
        if cached is None:
            cached = (
                np.array([ob.pos0.x for ob in self.dynamics]),
                np.array([ob.pos0.y for ob in self.dynamics]),
                np.array([ob.vel.x for ob in self.dynamics]),
                np.array([ob.vel.y for ob in self.dynamics]),
            )
            object.__setattr__(self, "_dyn_arrays", cached)
        return cached

    def predict_positions_many(self, ts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Positions of all dynamics at each time in ts.

        Returns arrays of shape (len(ts), n_dynamics). Mirrors
        `predict_position` exactly: np.fmod is the same IEEE operation as
        math.fmod, and the masked in-place adjustments write the identical
        values the scalar branches produce.
        """
        b = self.bounds
        ts = np.asarray(ts, dtype=np.float64)[:, None]
        x0, y0, vx, vy = self._dynamics_arrays()
        out = []
        for p0, v, lo, hi in ((x0, vx, b.lo.x, b.hi.x), (y0, vy, b.lo.y, b.hi.y)):
            width = hi - lo
            period = 2.0 * width
            u = np.fmod(p0 - lo + v * ts, period)
            np.add(u, period, out=u, where=u < 0.0)
            flip = u > width  # reflected half of the bounce cycle
            np.subtract(period, u, out=u, where=flip)
            u += lo
            out.append(u)
        return out[0], out[1]

    # ---- static collision --------------------------------------------------------

    def segment_clear_static(self, a: Vec2, b: Vec2) -> bool:
        """True iff segment ab intersects no static obstacle."""
        for ob in self.statics:
            if isinstance(ob.shape, Disc):
                if segment_disc_hit(a, b, ob.shape):
                    return False
            elif segment_rect_hit(a, b, ob.shape):
                return False
        return True

    def segments_clear_static_many(
        self, ax: np.ndarray, ay: np.ndarray, bx: np.ndarray, by: np.ndarray
    ) -> np.ndarray:
        """Vectorized `segment_clear_static` over parallel segment arrays."""
        clear = np.ones(ax.shape, dtype=bool)
        for ob in self.statics:
            if isinstance(ob.shape, Disc):
                cx, cy, r = ob.shape.center.x, ob.shape.center.y, ob.shape.radius
                dx = bx - ax
                dy = by - ay
                seg_sq = dx * dx + dy * dy
                t = np.where(
                    seg_sq == 0.0,
                    0.0,
                    ((cx - ax) * dx + (cy - ay) * dy) / np.where(seg_sq == 0.0, 1.0, seg_sq),
                )
                # exact endpoints under clamping, as in point_segment_distance
                t = np.clip(t, 0.0, 1.0)
                qx = np.where(t <= 0.0, ax, np.where(t >= 1.0, bx, ax + t * dx))
                qy = np.where(t <= 0.0, ay, np.where(t >= 1.0, by, ay + t * dy))
                px = qx - cx
                py = qy - cy
                clear &= np.sqrt(px * px + py * py) > r
            else:
                rect = ob.shape
                dx = bx - ax
                dy = by - ay
                t0 = np.zeros(ax.shape)
                t1 = np.ones(ax.shape)
                miss = np.zeros(ax.shape, dtype=bool)
                for delta, lo, hi, origin in (
                    (dx, rect.lo.x, rect.hi.x, ax),
                    (dy, rect.lo.y, rect.hi.y, ay),
                ):
                    parallel = delta == 0.0
                    miss |= parallel & ((origin < lo) | (origin > hi))
                    safe = np.where(parallel, 1.0, delta)
                    ta = (lo - origin) / safe
                    tb = (hi - origin) / safe
                    lo_t = np.minimum(ta, tb)
                    hi_t = np.maximum(ta, tb)
                    t0 = np.where(parallel, t0, np.maximum(t0, lo_t))
                    t1 = np.where(parallel, t1, np.minimum(t1, hi_t))
                clear &= miss | (t0 > t1)
        return clear

    def point_clear_static(self, p: Vec2) -> bool:
        """True iff point p lies inside no static obstacle (closed shapes)."""
        return self.segment_clear_static(p, p)

    # ---- dynamic hazard queries ---------------------------------------------------

    def min_dynamic_distance(self, p: Vec2, t: float) -> float:
        """Min center distance from p to any dynamic obstacle at time t (inf if none)."""
        best = math.inf
        for ob in self.dynamics:
            d = dist(p, self.predict_position(ob, t))
            if d < best:
                best = d
        return best

    def min_dynamic_distance_many(self, px: np.ndarray, py: np.ndarray, ts: np.ndarray) -> np.ndarray:
        """Vectorized `min_dynamic_distance` over parallel point/time arrays."""
        if not self.dynamics:
            return np.full(np.asarray(px).shape, math.inf)
        ox, oy = self.predict_positions_many(ts)
        np.subtract(np.asarray(px)[:, None], ox, out=ox)
        np.subtract(np.asarray(py)[:, None], oy, out=oy)
        np.multiply(ox, ox, out=ox)
        np.multiply(oy, oy, out=oy)
        ox += oy
        # sqrt is monotone and correctly rounded, so min commutes with it
        return np.sqrt(np.min(ox, axis=1))

    def ohz_intersects_lrz(self, usv: Vec2, lrz_radius: float, t: float) -> list[int]:
        """Ids of dynamics whose hazard disc touches the LRZ disc at time t."""
        if not lrz_radius > 0.0:
            raise ValueError("lrz_radius must be > 0")
        hits = []
        for ob in self.dynamics:
            if dist(usv, self.predict_position(ob, t)) <= lrz_radius + ob.ohz_radius:
                hits.append(ob.id)
        return hits
