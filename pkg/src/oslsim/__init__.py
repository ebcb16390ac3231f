"""oslsim: deterministic multi-agent odor-source localization simulator.

Library layers, from the ground up: communication graphs (graph), a filament
plume model (plume), a swarm decision layer (decision), a surge/cast/search
waypoint planner (planner), a nonlinear sliding-manifold tracking controller
(smc), and the closed-loop simulator (sim) with scenario files (scenario),
trace plotting (plots), and a CLI (cli).
"""

from oslsim.graph import Digraph, GraphMatrices, build_matrices, has_spanning_tree, h_is_nonsingular
from oslsim.scenario import ConfigError, load_config
from oslsim.sim import SimConfig, SimulationError, consensus_metrics, run_scenario
from oslsim.trace import Trace

__version__ = "0.1.0"

__all__ = [
    "Digraph",
    "GraphMatrices",
    "build_matrices",
    "has_spanning_tree",
    "h_is_nonsingular",
    "ConfigError",
    "load_config",
    "SimConfig",
    "SimulationError",
    "consensus_metrics",
    "run_scenario",
    "Trace",
    "__version__",
]
