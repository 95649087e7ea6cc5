"""Distributed formation control of a missile swarm trained with neighbour-coupled evolution strategies."""

from .dynamics import ActuationCommand, MissileState, SystemConstraints, TargetCommand, TargetState
from .formation import FormationPattern, PatternKind, line_pattern, polygon_pattern
from .kernel import BACKEND
from .optimizer import ConstraintConfig, EvolutionConfig, train
from .rollout import run_episode, simulate
from .scenarios import ScenarioSpec, builtin_scenarios, get_scenario, load_scenario
from .topology import Topology, build_topology

__version__ = "0.1.0"

__all__ = [
    "ActuationCommand", "BACKEND", "ConstraintConfig", "EvolutionConfig", "FormationPattern",
    "MissileState", "PatternKind", "ScenarioSpec", "SystemConstraints", "TargetCommand",
    "TargetState", "Topology", "build_topology", "builtin_scenarios", "get_scenario",
    "line_pattern", "load_scenario", "polygon_pattern", "run_episode", "simulate", "train",
]
