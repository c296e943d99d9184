"""AsymDPOP: complete inference for asymmetric distributed constraint optimization."""
from .engine import Metrics, RunResult, SimulationDeadlock, run
from .oracle import SearchSpaceTooLarge, brute_force
from .problem import Problem, ProblemParseError, ProblemValidationError, parse, random_adcop, random_maxdcsp, serialize
from .pseudotree import DisconnectedGraphError, PseudoTree, build_dfs
from .solver import SolverConfig, SolverProtocolError

__all__ = [
    "DisconnectedGraphError",
    "Metrics",
    "Problem",
    "ProblemParseError",
    "ProblemValidationError",
    "PseudoTree",
    "RunResult",
    "SearchSpaceTooLarge",
    "SimulationDeadlock",
    "SolverConfig",
    "SolverProtocolError",
    "brute_force",
    "build_dfs",
    "parse",
    "random_adcop",
    "random_maxdcsp",
    "run",
    "serialize",
]
