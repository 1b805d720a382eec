"""Time-risk optimal replanning for USVs among moving obstacles and currents."""

from .currents import CurrentField, Vortex, deviation_ratio
from .geometry import Disc, Rect, Vec2, dist, segment_disc_hit, segment_rect_hit
from .replan import LrzConfig, ReplanResult, Trigger, TriggerKind, check_triggers, replan
from .scenario import ScenarioConfig, load_scenario, parse_scenario
from .sim import Metrics, SimParams, SimStatus, Simulator, metrics, run
from .timerisk import (
    EdgeTimeParams,
    RiskParams,
    edge_time,
    effective_speed,
    path_risk,
    point_risk,
    time_risk_cost,
)
from .trace import Trace, read_trace, write_trace
from .tree import Path, RrtParams, Tree, build, cost_to_go_time, initial_path
from .world import DynamicObstacle, StaticObstacle, World

__version__ = "0.1.0"
