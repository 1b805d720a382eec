"""Scenario configuration: YAML schema, defaults, validation.

A scenario document is a nested mapping with units spelled out in the field
names. Only `world.bounds_m`, `start_m` and `goal_m` are required; everything
else defaults to the reference simulation parameters (USV speed 4 m/s,
dynamic obstacle speed 3 m/s, LRZ radius 5 m, still ambient water, risk band
2..5 m). Dynamic obstacles are authored as position + heading; their speed is
the shared `dynamic_obstacle_speed_mps`, which keeps the equal-speed
invariant true by construction.

    seed: 0
    world:   {bounds_m: [xmin, ymin, xmax, ymax]}
    start_m: [x, y]
    goal_m:  [x, y]
    usv_speed_mps: 4.0
    dynamic_obstacle_speed_mps: 3.0
    lrz:     {radius_m: 5.0, current_probe_count: 5, deviation_threshold: 0.1}
    risk:    {d_min_m: 2.0, d_max_m: 5.0, sample_ds_m: 1.0, horizon_s: 15.0}
    statics: [{disc_center_m: [x, y], radius_m: r},
              {rect_min_m: [x, y], rect_max_m: [x, y]}]
    dynamics: [{pos0_m: [x, y], heading_deg: a, ohz_radius_m: r}]
    field:   {ambient_mps: [u, v], speed_range_mps: [lo, hi],
              vortices: [{center_m: [x, y], drift_mps: [u, v],
                          peak_speed_mps: s, core_radius_m: r, spin: 1}]}
    rrt:     {node_budget: 5000, step_size_m: 3.0, rewire_gamma_m: null}
    sim:     {dt_s: 0.1, goal_tolerance_m: 1.0, timeout_s: 120.0,
              stuck_window_s: 30.0}
    edge:    {substep_m: 1.0}
    replanning_enabled: true

The parsed config is held as one canonical dict (defaults filled, numbers
normalized), so re-serialization is a fixpoint and the scenario hash recorded
in traces is stable. The declared field speed range is enforced at load time
on a probe grid plus each vortex core ring; the ambient magnitude must reach
the range minimum.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path as FsPath

import numpy as np
import yaml

from .currents import CurrentField, Vortex
from .geometry import Disc, Rect, Vec2
from .replan import LrzConfig
from .timerisk import RiskParams
from .world import DynamicObstacle, StaticObstacle, World


class ParseError(ValueError):
    """Document is not structurally a scenario (bad YAML, wrong types)."""


class ValidationError(ValueError):
    def __init__(self, field_path: str, message: str):
        self.field_path = field_path
        super().__init__(f"{field_path}: {message}")


_DEFAULTS = {
    "seed": 0,
    "usv_speed_mps": 4.0,
    "dynamic_obstacle_speed_mps": 3.0,
    "lrz": {"radius_m": 5.0, "current_probe_count": 5, "deviation_threshold": 0.1},
    "risk": {"d_min_m": 2.0, "d_max_m": 5.0, "sample_ds_m": 1.0, "horizon_s": 15.0},
    "statics": [],
    "dynamics": [],
    "field": {"ambient_mps": [0.0, 0.0], "speed_range_mps": [0.0, 8.0], "vortices": []},
    "rrt": {"node_budget": 5000, "step_size_m": 3.0, "rewire_gamma_m": None},
    "sim": {"dt_s": 0.1, "goal_tolerance_m": 1.0, "timeout_s": 120.0, "stuck_window_s": 30.0},
    "edge": {"substep_m": 1.0},
    "replanning_enabled": True,
}

_TOP_KEYS = {"seed", "world", "start_m", "goal_m"} | set(_DEFAULTS)


def _require_num(value, path: str, integer: bool = False) -> float | int:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(path, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ValidationError(path, "must be finite")
    if integer:
        if int(value) != value:
            raise ValidationError(path, f"expected an integer, got {value!r}")
        return int(value)
    return float(value)


def _require_pair(value, path: str) -> list[float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ValidationError(path, f"expected [x, y], got {value!r}")
    return [_require_num(value[0], path + "[0]"), _require_num(value[1], path + "[1]")]


def _check_keys(section: dict, allowed: set[str], path: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ValidationError(f"{path}.{sorted(unknown)[0]}", "unknown field")


def parse_scenario(text: str) -> "ScenarioConfig":
    """Parse and fully validate a scenario document."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ParseError(f"not valid YAML: {e}") from e
    if not isinstance(raw, dict):
        raise ParseError("scenario document must be a mapping")
    cfg = ScenarioConfig(_normalize(raw))
    _validate_semantics(cfg)
    return cfg


def load_scenario(path: str | FsPath) -> "ScenarioConfig":
    return parse_scenario(FsPath(path).read_text(encoding="utf-8"))


def _normalize(raw: dict) -> dict:
    _check_keys(raw, _TOP_KEYS, "scenario")
    for key in ("world", "start_m", "goal_m"):
        if key not in raw:
            raise ValidationError(key, "required field missing")

    doc: dict = {}
    world = raw["world"]
    if not isinstance(world, dict):
        raise ValidationError("world", "expected a mapping")
    _check_keys(world, {"bounds_m"}, "world")
    b = world.get("bounds_m")
    if not isinstance(b, (list, tuple)) or len(b) != 4:
        raise ValidationError("world.bounds_m", "expected [xmin, ymin, xmax, ymax]")
    bounds = [_require_num(v, f"world.bounds_m[{i}]") for i, v in enumerate(b)]
    if not (bounds[0] < bounds[2] and bounds[1] < bounds[3]):
        raise ValidationError("world.bounds_m", "min corner must be < max corner")
    doc["world"] = {"bounds_m": bounds}
    doc["start_m"] = _require_pair(raw["start_m"], "start_m")
    doc["goal_m"] = _require_pair(raw["goal_m"], "goal_m")
    doc["seed"] = _require_num(raw.get("seed", _DEFAULTS["seed"]), "seed", integer=True)
    doc["usv_speed_mps"] = _require_num(
        raw.get("usv_speed_mps", _DEFAULTS["usv_speed_mps"]), "usv_speed_mps"
    )
    doc["dynamic_obstacle_speed_mps"] = _require_num(
        raw.get("dynamic_obstacle_speed_mps", _DEFAULTS["dynamic_obstacle_speed_mps"]),
        "dynamic_obstacle_speed_mps",
    )
    if doc["usv_speed_mps"] <= 0.0:
        raise ValidationError("usv_speed_mps", "must be > 0")
    if doc["dynamic_obstacle_speed_mps"] < 0.0:
        raise ValidationError("dynamic_obstacle_speed_mps", "must be >= 0")

    lrz = {**_DEFAULTS["lrz"], **(raw.get("lrz") or {})}
    _check_keys(lrz, set(_DEFAULTS["lrz"]), "lrz")
    lrz["radius_m"] = _require_num(lrz["radius_m"], "lrz.radius_m")
    lrz["current_probe_count"] = _require_num(lrz["current_probe_count"], "lrz.current_probe_count", integer=True)
    lrz["deviation_threshold"] = _require_num(lrz["deviation_threshold"], "lrz.deviation_threshold")
    if lrz["radius_m"] <= 0.0:
        raise ValidationError("lrz.radius_m", "must be > 0")
    if lrz["current_probe_count"] < 1:
        raise ValidationError("lrz.current_probe_count", "must be >= 1")
    if lrz["deviation_threshold"] <= 0.0:
        raise ValidationError("lrz.deviation_threshold", "must be > 0")
    doc["lrz"] = lrz

    risk = {**_DEFAULTS["risk"], **(raw.get("risk") or {})}
    _check_keys(risk, set(_DEFAULTS["risk"]), "risk")
    for k in risk:
        risk[k] = _require_num(risk[k], f"risk.{k}")
    if not 0.0 < risk["d_min_m"]:
        raise ValidationError("risk.d_min_m", "must be > 0")
    if not risk["d_min_m"] < risk["d_max_m"]:
        raise ValidationError("risk.d_min_m", "must be < risk.d_max_m")
    if risk["sample_ds_m"] <= 0.0:
        raise ValidationError("risk.sample_ds_m", "must be > 0")
    if risk["horizon_s"] <= 0.0:
        raise ValidationError("risk.horizon_s", "must be > 0")
    doc["risk"] = risk

    statics = raw.get("statics") or []
    if not isinstance(statics, list):
        raise ValidationError("statics", "expected a list")
    norm_statics = []
    for i, ob in enumerate(statics):
        path = f"statics[{i}]"
        if not isinstance(ob, dict):
            raise ValidationError(path, "expected a mapping")
        if "disc_center_m" in ob:
            _check_keys(ob, {"disc_center_m", "radius_m"}, path)
            center = _require_pair(ob["disc_center_m"], path + ".disc_center_m")
            radius = _require_num(ob.get("radius_m"), path + ".radius_m")
            if radius <= 0.0:
                raise ValidationError(path + ".radius_m", "must be > 0")
            norm_statics.append({"disc_center_m": center, "radius_m": radius})
        elif "rect_min_m" in ob:
            _check_keys(ob, {"rect_min_m", "rect_max_m"}, path)
            lo = _require_pair(ob["rect_min_m"], path + ".rect_min_m")
            hi = _require_pair(ob.get("rect_max_m"), path + ".rect_max_m")
            if not (lo[0] < hi[0] and lo[1] < hi[1]):
                raise ValidationError(path, "rect_min_m must be < rect_max_m componentwise")
            norm_statics.append({"rect_min_m": lo, "rect_max_m": hi})
        else:
            raise ValidationError(path, "expected disc_center_m or rect_min_m")
    doc["statics"] = norm_statics

    dynamics = raw.get("dynamics") or []
    if not isinstance(dynamics, list):
        raise ValidationError("dynamics", "expected a list")
    norm_dynamics = []
    for i, ob in enumerate(dynamics):
        path = f"dynamics[{i}]"
        if not isinstance(ob, dict):
            raise ValidationError(path, "expected a mapping")
        _check_keys(ob, {"pos0_m", "heading_deg", "ohz_radius_m"}, path)
        pos0 = _require_pair(ob.get("pos0_m"), path + ".pos0_m")
        heading = _require_num(ob.get("heading_deg", 0.0), path + ".heading_deg")
        ohz = _require_num(ob.get("ohz_radius_m"), path + ".ohz_radius_m")
        if ohz <= 0.0:
            raise ValidationError(path + ".ohz_radius_m", "must be > 0")
        norm_dynamics.append({"pos0_m": pos0, "heading_deg": heading, "ohz_radius_m": ohz})
    doc["dynamics"] = norm_dynamics

    fld = {**_DEFAULTS["field"], **(raw.get("field") or {})}
    _check_keys(fld, set(_DEFAULTS["field"]), "field")
    ambient = _require_pair(fld["ambient_mps"], "field.ambient_mps")
    rng = fld["speed_range_mps"]
    if not isinstance(rng, (list, tuple)) or len(rng) != 2:
        raise ValidationError("field.speed_range_mps", "expected [lo, hi]")
    lo = _require_num(rng[0], "field.speed_range_mps[0]")
    hi = _require_num(rng[1], "field.speed_range_mps[1]")
    if not (0.0 <= lo <= hi):
        raise ValidationError("field.speed_range_mps", "require 0 <= lo <= hi")
    vortices = fld.get("vortices") or []
    if not isinstance(vortices, list):
        raise ValidationError("field.vortices", "expected a list")
    norm_vortices = []
    for i, vx in enumerate(vortices):
        path = f"field.vortices[{i}]"
        if not isinstance(vx, dict):
            raise ValidationError(path, "expected a mapping")
        _check_keys(vx, {"center_m", "drift_mps", "peak_speed_mps", "core_radius_m", "spin"}, path)
        center = _require_pair(vx.get("center_m"), path + ".center_m")
        drift = _require_pair(vx.get("drift_mps", [0.0, 0.0]), path + ".drift_mps")
        peak = _require_num(vx.get("peak_speed_mps"), path + ".peak_speed_mps")
        core = _require_num(vx.get("core_radius_m"), path + ".core_radius_m")
        spin = _require_num(vx.get("spin", 1), path + ".spin", integer=True)
        if peak < 0.0:
            raise ValidationError(path + ".peak_speed_mps", "must be >= 0")
        if core <= 0.0:
            raise ValidationError(path + ".core_radius_m", "must be > 0")
        if spin not in (1, -1):
            raise ValidationError(path + ".spin", "must be +1 or -1")
        norm_vortices.append(
            {"center_m": center, "drift_mps": drift, "peak_speed_mps": peak,
             "core_radius_m": core, "spin": spin}
        )
    doc["field"] = {"ambient_mps": ambient, "speed_range_mps": [lo, hi], "vortices": norm_vortices}

    rrt = {**_DEFAULTS["rrt"], **(raw.get("rrt") or {})}
    _check_keys(rrt, set(_DEFAULTS["rrt"]), "rrt")
    rrt["node_budget"] = _require_num(rrt["node_budget"], "rrt.node_budget", integer=True)
    rrt["step_size_m"] = _require_num(rrt["step_size_m"], "rrt.step_size_m")
    if rrt["node_budget"] < 0:
        raise ValidationError("rrt.node_budget", "must be >= 0")
    if rrt["step_size_m"] <= 0.0:
        raise ValidationError("rrt.step_size_m", "must be > 0")
    if rrt["rewire_gamma_m"] is not None:
        rrt["rewire_gamma_m"] = _require_num(rrt["rewire_gamma_m"], "rrt.rewire_gamma_m")
        if rrt["rewire_gamma_m"] <= 0.0:
            raise ValidationError("rrt.rewire_gamma_m", "must be > 0 or null")
    doc["rrt"] = rrt

    sim = {**_DEFAULTS["sim"], **(raw.get("sim") or {})}
    _check_keys(sim, set(_DEFAULTS["sim"]), "sim")
    for k in sim:
        sim[k] = _require_num(sim[k], f"sim.{k}")
        if sim[k] <= 0.0:
            raise ValidationError(f"sim.{k}", "must be > 0")
    doc["sim"] = sim

    edge = {**_DEFAULTS["edge"], **(raw.get("edge") or {})}
    _check_keys(edge, set(_DEFAULTS["edge"]), "edge")
    edge["substep_m"] = _require_num(edge["substep_m"], "edge.substep_m")
    if edge["substep_m"] <= 0.0:
        raise ValidationError("edge.substep_m", "must be > 0")
    doc["edge"] = edge

    enabled = raw.get("replanning_enabled", _DEFAULTS["replanning_enabled"])
    if not isinstance(enabled, bool):
        raise ValidationError("replanning_enabled", "expected true/false")
    doc["replanning_enabled"] = enabled
    return doc


def _validate_semantics(cfg: "ScenarioConfig") -> None:
    doc = cfg.doc
    try:
        world = cfg.build_world()
    except ValueError as e:
        raise ValidationError("statics", str(e)) from e
    for name in ("start_m", "goal_m"):
        p = Vec2(*doc[name])
        if not world.bounds.contains(p):
            raise ValidationError(name, "must lie inside world.bounds_m")
        if not world.point_clear_static(p):
            raise ValidationError(name, "must lie outside all static obstacles")

    field = cfg.build_field()
    lo, hi = doc["field"]["speed_range_mps"]
    ambient_mag = math.hypot(*doc["field"]["ambient_mps"])
    if ambient_mag < lo - 1e-9:
        raise ValidationError(
            "field.ambient_mps", f"ambient magnitude {ambient_mag:.3g} below declared range minimum {lo}"
        )
    peak = _probe_field_max(field, world.bounds, doc["sim"]["timeout_s"])
    if peak > hi + 1e-9:
        raise ValidationError(
            "field.speed_range_mps",
            f"probed field magnitude {peak:.3g} exceeds declared maximum {hi}",
        )


def _probe_field_max(field: CurrentField, bounds: Rect, timeout: float) -> float:
    xs = np.linspace(bounds.lo.x, bounds.hi.x, 21)
    ys = np.linspace(bounds.lo.y, bounds.hi.y, 21)
    gx, gy = np.meshgrid(xs, ys)
    pts_x = [gx.ravel()]
    pts_y = [gy.ravel()]
    ang = np.linspace(0.0, 2.0 * math.pi, 16, endpoint=False)
    peak = 0.0
    for t in (0.0, 0.5 * timeout, timeout):
        px = list(pts_x)
        py = list(pts_y)
        for vx in field.vortices:
            cx = vx.center0.x + t * vx.drift.x
            cy = vx.center0.y + t * vx.drift.y
            px.append(cx + vx.core_radius * np.cos(ang))
            py.append(cy + vx.core_radius * np.sin(ang))
        qx = np.concatenate(px)
        qy = np.concatenate(py)
        u, v = field.sample_many(qx, qy, np.full(qx.shape, t))
        peak = max(peak, float(np.max(np.sqrt(u * u + v * v))))
    return peak


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario, held as its canonical normalized document."""

    doc: dict

    # ---- identity -------------------------------------------------------------

    def to_dict(self) -> dict:
        return json.loads(json.dumps(self.doc))

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.doc, sort_keys=True)

    def scenario_hash(self) -> str:
        blob = json.dumps(self.doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def with_overrides(self, **kv) -> "ScenarioConfig":
        """New config with top-level scalar fields replaced (e.g. seed)."""
        doc = self.to_dict()
        for k, v in kv.items():
            doc[k] = v
        cfg = ScenarioConfig(_normalize(doc))
        _validate_semantics(cfg)
        return cfg

    # ---- typed accessors --------------------------------------------------------

    @property
    def seed(self) -> int:
        return int(self.doc["seed"])

    @property
    def bounds(self) -> Rect:
        b = self.doc["world"]["bounds_m"]
        return Rect(Vec2(b[0], b[1]), Vec2(b[2], b[3]))

    @property
    def start(self) -> Vec2:
        return Vec2(*self.doc["start_m"])

    @property
    def goal(self) -> Vec2:
        return Vec2(*self.doc["goal_m"])

    @property
    def usv_speed_mps(self) -> float:
        return self.doc["usv_speed_mps"]

    @property
    def lrz(self) -> LrzConfig:
        d = self.doc["lrz"]
        return LrzConfig(d["radius_m"], d["current_probe_count"], d["deviation_threshold"])

    @property
    def risk(self) -> RiskParams:
        return RiskParams(self.doc["risk"]["d_min_m"], self.doc["risk"]["d_max_m"])

    @property
    def risk_sample_ds_m(self) -> float:
        return self.doc["risk"]["sample_ds_m"]

    @property
    def risk_horizon_s(self) -> float:
        return self.doc["risk"]["horizon_s"]

    @property
    def edge_substep_m(self) -> float:
        return self.doc["edge"]["substep_m"]

    @property
    def replanning_enabled(self) -> bool:
        return self.doc["replanning_enabled"]

    @property
    def sim_params(self):
        from .sim import SimParams

        s = self.doc["sim"]
        return SimParams(s["dt_s"], s["goal_tolerance_m"], s["timeout_s"], s["stuck_window_s"])

    def rrt_params(self):
        from .tree import RrtParams

        r = self.doc["rrt"]
        return RrtParams(
            goal=self.goal,
            node_budget=r["node_budget"],
            step_size_m=r["step_size_m"],
            rewire_gamma_m=r["rewire_gamma_m"],
            seed=self.seed,
        )

    def build_world(self) -> World:
        statics = []
        for ob in self.doc["statics"]:
            if "disc_center_m" in ob:
                statics.append(StaticObstacle(Disc(Vec2(*ob["disc_center_m"]), ob["radius_m"])))
            else:
                statics.append(StaticObstacle(Rect(Vec2(*ob["rect_min_m"]), Vec2(*ob["rect_max_m"]))))
        speed = self.doc["dynamic_obstacle_speed_mps"]
        dynamics = []
        for i, ob in enumerate(self.doc["dynamics"]):
            rad = math.radians(ob["heading_deg"])
            vel = Vec2(speed * math.cos(rad), speed * math.sin(rad))
            dynamics.append(DynamicObstacle(i, Vec2(*ob["pos0_m"]), vel, ob["ohz_radius_m"]))
        return World(self.bounds, tuple(statics), tuple(dynamics))

    def build_field(self) -> CurrentField:
        f = self.doc["field"]
        vortices = tuple(
            Vortex(
                Vec2(*vx["center_m"]),
                Vec2(*vx["drift_mps"]),
                vx["peak_speed_mps"],
                vx["core_radius_m"],
                int(vx["spin"]),
            )
            for vx in f["vortices"]
        )
        return CurrentField(Vec2(*f["ambient_mps"]), vortices)
