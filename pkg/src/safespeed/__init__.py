"""Maximum safe flight speed of a UAV under localization drift, sensing range,
latency and actuation limits, with a kinematic simulator to check it."""

__version__ = "0.1.0"

from .model import (
    FlightParams,
    InfeasibleLatency,
    TerminalState,
    TrajectoryState,
    accel_switch_time,
    inflated_radius,
    return_distance,
    stage1_speed_limit,
    stage2_feasible,
    stage2_max_terminal_vy,
    terminal_state,
    total_latency,
    trajectory_state,
)
from .solver import (
    LatencyModel,
    SolverConfig,
    SpeedSolution,
    SweepSpec,
    coupling_surface,
    find_crossings,
    max_safe_speed,
    saturation_ratio,
    sweep,
)
from .sim import (
    SimConfig,
    WorldLayout,
    empirical_max_speed,
    ode_reference_trajectory,
    simulate_run,
)
from .validation import validate_model

__all__ = [
    "FlightParams", "InfeasibleLatency", "TerminalState", "TrajectoryState",
    "accel_switch_time", "inflated_radius", "return_distance", "stage1_speed_limit",
    "stage2_feasible", "stage2_max_terminal_vy", "terminal_state", "total_latency",
    "trajectory_state", "LatencyModel", "SolverConfig", "SpeedSolution", "SweepSpec",
    "coupling_surface", "find_crossings", "max_safe_speed", "saturation_ratio", "sweep",
    "SimConfig", "WorldLayout", "empirical_max_speed", "ode_reference_trajectory",
    "simulate_run", "validate_model",
]
