"""Analytic spatio-temporally varying current model.

The field is a uniform ambient flow plus a set of drifting Rankine vortices.
A Rankine vortex spins as a solid body inside its core radius and decays as
1/rho outside, so the tangential speed peaks exactly at the core radius and
the field stays bounded everywhere:

    v_theta(rho) = peak_speed * rho / core_radius      rho <= core_radius
    v_theta(rho) = peak_speed * core_radius / rho      rho >  core_radius

The vortex center at time t is center0 + t * drift. Spin +1 is
counterclockwise, -1 clockwise.

`sample` (scalar) and `sample_many` (vectorized) evaluate the identical
formula in the identical order; tests assert they agree bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Vec2

# floor used by deviation_ratio to avoid dividing by a near-zero reference
DEVIATION_FLOOR_MPS = 0.1


class LengthMismatchError(ValueError):
    """Probe and reference lists have different lengths."""


@dataclass(frozen=True, slots=True)
class Vortex:
    center0: Vec2
    drift: Vec2
    peak_speed: float
    core_radius: float
    spin: int

    def __post_init__(self) -> None:
        if self.peak_speed < 0.0:
            raise ValueError("vortex peak_speed must be >= 0")
        if not self.core_radius > 0.0:
            raise ValueError("vortex core_radius must be > 0")
        if self.spin not in (1, -1):
            raise ValueError("vortex spin must be +1 or -1")


@dataclass(frozen=True)
class CurrentField:
    ambient: Vec2
    vortices: tuple[Vortex, ...] = field(default_factory=tuple)

    def sample(self, p: Vec2, t: float) -> Vec2:
        """Current velocity (m/s) at point p and time t."""
        u = self.ambient.x
        v = self.ambient.y
        for vx in self.vortices:
            cx = vx.center0.x + t * vx.drift.x
            cy = vx.center0.y + t * vx.drift.y
            rx = p.x - cx
            ry = p.y - cy
            rho = math.sqrt(rx * rx + ry * ry)
            if rho == 0.0:
                continue  # vortex contributes nothing at its own center
            if rho <= vx.core_radius:
                v_theta = vx.peak_speed * (rho / vx.core_radius)
            else:
                v_theta = vx.peak_speed * (vx.core_radius / rho)
            f = vx.spin * v_theta / rho
            u += -ry * f
            v += rx * f
        return Vec2(u, v)

    def _vortex_arrays(self) -> tuple[np.ndarray, ...]:
        cached = getattr(self, "_vx_arrays", None)
        if cached is None:
            col = lambda vals: np.array(vals, dtype=np.float64)[:, None]
            cached = (
                col([v.center0.x for v in self.vortices]),
                col([v.center0.y for v in self.vortices]),
                col([v.drift.x for v in self.vortices]),
                col([v.drift.y for v in self.vortices]),
                col([v.peak_speed for v in self.vortices]),
                col([v.core_radius for v in self.vortices]),
                col([float(v.spin) for v in self.vortices]),
            )
            object.__setattr__(self, "_vx_arrays", cached)
        return cached

    def sample_many(self, xs: np.ndarray, ys: np.ndarray, ts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized `sample` over arrays of points and times.

        All vortices are evaluated in one stacked pass; the contributions are
        then accumulated in declaration order so the result matches the
        scalar accumulation bit for bit.
        """
        u = np.full_like(xs, self.ambient.x)
        v = np.full_like(xs, self.ambient.y)
        if not self.vortices:
            return u, v
        cx, cy, dx, dy, peak, core, spin = self._vortex_arrays()
        rx = xs - (cx + ts * dx)
        ry = ys - (cy + ts * dy)
        rho = np.sqrt(rx * rx + ry * ry)
        safe_rho = np.where(rho == 0.0, 1.0, rho)
        v_theta = np.where(rho <= core, peak * (rho / core), peak * (core / safe_rho))
        f = np.where(rho == 0.0, 0.0, spin * v_theta / safe_rho)
        fu = -ry * f
        fv = rx * f
        for i in range(len(self.vortices)):
            u += fu[i]
            v += fv[i]
        return u, v


def deviation_ratio(
    field_: CurrentField,
    samples: list[tuple[Vec2, float]],
    reference: list[Vec2],
) -> float:
    """Worst relative change of the field against plan-time reference vectors.

    For each probe (p, t) the field is sampled now and compared with the
    reference vector recorded at plan time at the same probe slot:

        ratio_i = |now_i - ref_i| / max(|ref_i|, DEVIATION_FLOOR_MPS)

    Returns the maximum ratio. Raises LengthMismatchError if the lists differ
    in length (both must be nonempty).
    """
    if len(samples) != len(reference):
        raise LengthMismatchError(
            f"probe count {len(samples)} != reference count {len(reference)}"
        )
    if not samples:
        raise LengthMismatchError("deviation_ratio needs at least one probe")
    worst = 0.0
    for (p, t), ref in zip(samples, reference):
        now = field_.sample(p, t)
        dx = now.x - ref.x
        dy = now.y - ref.y
        denom = max(math.sqrt(ref.x * ref.x + ref.y * ref.y), DEVIATION_FLOOR_MPS)
        ratio = math.sqrt(dx * dx + dy * dy) / denom
        if ratio > worst:
            worst = ratio
    return worst
