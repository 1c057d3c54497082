"""Multi-network FPGA mapping: design-space exploration, cyclic scheduling
and memory-contention simulation."""

from ._core import (
    ConfigError,
    ConfigTable,
    DesignPoint,
    InfeasibleError,
    JointDesignPoint,
    ModelError,
    Network,
    ParseError,
    PlanResult,
    Platform,
    Resources,
    Schedule,
    ScheduleError,
    SimResult,
    SLOWDOWN_FLOOR,
    TableEntry,
    Task,
    ValidationError,
    compute_slots,
    enumerate_joint,
    enumerate_points,
    pareto_front,
    parse_network,
    parse_platform,
    plan,
    simulate,
)

__all__ = [
    "ConfigError",
    "ConfigTable",
    "DesignPoint",
    "InfeasibleError",
    "JointDesignPoint",
    "ModelError",
    "Network",
    "ParseError",
    "PlanResult",
    "Platform",
    "Resources",
    "Schedule",
    "ScheduleError",
    "SimResult",
    "SLOWDOWN_FLOOR",
    "TableEntry",
    "Task",
    "ValidationError",
    "compute_slots",
    "enumerate_joint",
    "enumerate_points",
    "pareto_front",
    "parse_network",
    "parse_platform",
    "plan",
    "simulate",
]
