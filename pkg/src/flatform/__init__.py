"""Differential-flatness formation planning and collision-aware tracking for quadrotor teams.

Typical use::

    from flatform import config, sim
    cfg = config.load_fixture("four_uav")
    trace = sim.run(cfg)
    print(sim.metrics(trace)["min_distance"])
"""
from .collision import SafetyConfig, STRATEGIES
from .config import load, load_fixture, parse_config, serialize
from .errors import (CollisionViolationError, ConfigError, DomainError, FlatformError,
                     NumericalError, PlannerSingularError, RiccatiDivergenceError,
                     SingularityError)
from .flat_dynamics import CostMatrices, build_costs, pack_state
from .flatness import QuadrotorParams
from .graph import DirectedGraph, FormationSpec
from .planner import PlannerSolution, solve
from .sim import ScenarioConfig, SimTrace, metrics, monitor_vhat, run
from .tracker import solve_riccati

__all__ = [
    "CollisionViolationError", "ConfigError", "CostMatrices", "DirectedGraph", "DomainError",
    "FlatformError", "FormationSpec", "NumericalError", "PlannerSingularError",
    "PlannerSolution", "QuadrotorParams", "RiccatiDivergenceError", "STRATEGIES",
    "SafetyConfig", "ScenarioConfig", "SimTrace", "SingularityError", "build_costs",
    "load", "load_fixture", "metrics", "monitor_vhat", "pack_state", "parse_config",
    "run", "serialize", "solve", "solve_riccati",
]
