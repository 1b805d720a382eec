"""Planar vector math and intersection predicates.

All quantities are double-precision meters (or m/s where a Vec2 is used as a
velocity). Intersection predicates use the closed-set convention: touching
counts as intersecting, which is the conservative choice for safety checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True, slots=True)
class Vec2:
    x: float
    y: float

    def __add__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x - other.x, self.y - other.y)

    def scaled(self, s: float) -> "Vec2":
        return Vec2(self.x * s, self.y * s)

    def dot(self, other: "Vec2") -> float:
        return self.x * other.x + self.y * other.y

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y)

    def unit(self) -> "Vec2":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize a zero vector")
        return Vec2(self.x / n, self.y / n)

    def perp(self) -> "Vec2":
        # counterclockwise perpendicular
        return Vec2(-self.y, self.x)

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True, slots=True)
class Disc:
    center: Vec2
    radius: float

    def __post_init__(self) -> None:
        if not self.radius > 0.0:
            raise ValueError(f"disc radius must be > 0, got {self.radius}")

    def contains(self, p: Vec2) -> bool:
        return dist(p, self.center) <= self.radius


@dataclass(frozen=True, slots=True)
class Rect:
    lo: Vec2
    hi: Vec2

    def __post_init__(self) -> None:
        if not (self.lo.x < self.hi.x and self.lo.y < self.hi.y):
            raise ValueError(f"rect min corner must be < max corner, got {self.lo} / {self.hi}")

    def contains(self, p: Vec2) -> bool:
        return self.lo.x <= p.x <= self.hi.x and self.lo.y <= p.y <= self.hi.y

    @property
    def width(self) -> float:
        return self.hi.x - self.lo.x

    @property
    def height(self) -> float:
        return self.hi.y - self.lo.y


def dist(p: Vec2, q: Vec2) -> float:
    """Euclidean distance between two points."""
    dx = p.x - q.x
    dy = p.y - q.y
    return math.sqrt(dx * dx + dy * dy)


def point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> float:
    """Distance from point p to the closed segment ab (degenerate ab allowed)."""
    abx = b.x - a.x
    aby = b.y - a.y
    seg_sq = abx * abx + aby * aby
    if seg_sq == 0.0:
        return dist(p, a)
    t = ((p.x - a.x) * abx + (p.y - a.y) * aby) / seg_sq
    # exact endpoints under clamping, so the result is symmetric in (a, b)
    if t <= 0.0:
        return dist(p, a)
    if t >= 1.0:
        return dist(p, b)
    return dist(p, Vec2(a.x + t * abx, a.y + t * aby))


def segment_disc_hit(a: Vec2, b: Vec2, d: Disc) -> bool:
    """True iff segment ab comes within d.radius of d.center (closed)."""
    return point_segment_distance(d.center, a, b) <= d.radius


def segment_rect_hit(a: Vec2, b: Vec2, r: Rect) -> bool:
    """True iff segment ab intersects the closed rectangle r.

    Uses the slab (Liang-Barsky) clip; endpoints inside count as hits.
    """
    dx = b.x - a.x
    dy = b.y - a.y
    t0, t1 = 0.0, 1.0
    for delta, lo, hi, origin in ((dx, r.lo.x, r.hi.x, a.x), (dy, r.lo.y, r.hi.y, a.y)):
        if delta == 0.0:
            if origin < lo or origin > hi:
                return False
        else:
            ta = (lo - origin) / delta
            tb = (hi - origin) / delta
            if ta > tb:
                ta, tb = tb, ta
            t0 = max(t0, ta)
            t1 = min(t1, tb)
            if t0 > t1:
                return False
    return True
