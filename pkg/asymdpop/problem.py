"""ADCOP instances.

A problem has one variable per agent and, for every binary constraint, two
directed side functions: ``side_costs[(i, j)]`` is agent ``i``'s private cost
matrix toward ``j``, indexed ``[v_i][v_j]``. The objective sums both sides.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Dict, List, Mapping, Tuple

import networkx as nx
import numpy as np
from pydantic import BaseModel, Field, ValidationError

logger = logging.getLogger(__name__)

Side = Tuple[int, int]
Assignment = Dict[int, int]

DEFAULT_MAX_COST = 100


class ProblemValidationError(ValueError):
    """Raised when a problem violates one of its structural invariants."""


class ProblemParseError(ValueError):
    """Raised when a problem document cannot be read."""


@dataclass(frozen=True, eq=False)
class Problem:
    n_agents: int
    domain_sizes: Tuple[int, ...]
    side_costs: Mapping[Side, np.ndarray]

    @classmethod
    def from_sides(cls, domain_sizes, sides: Mapping[Side, object]) -> "Problem":
        costs = {}
        for (i, j), matrix in sides.items():
            array = np.array(matrix, dtype=float)
            array.setflags(write=False)
            costs[(int(i), int(j))] = array
        return cls(
            n_agents=len(domain_sizes),
            domain_sizes=tuple(int(d) for d in domain_sizes),
            side_costs=MappingProxyType(dict(sorted(costs.items()))),
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Problem):
            return NotImplemented
        if self.n_agents != other.n_agents or self.domain_sizes != other.domain_sizes:
            return False
        if set(self.side_costs) != set(other.side_costs):
            return False
        return all(np.array_equal(self.side_costs[k], other.side_costs[k]) for k in self.side_costs)

    __hash__ = object.__hash__

    def neighbors(self, i: int) -> List[int]:
        return sorted(j for (a, j) in self.side_costs if a == i)

    def edges(self) -> List[Side]:
        """Undirected constraints as ``(low, high)`` pairs."""
        return sorted((i, j) for (i, j) in self.side_costs if i < j)

    def search_space(self) -> int:
        return math.prod(self.domain_sizes)

    def total_entries(self) -> int:
        return sum(int(m.size) for m in self.side_costs.values())


def constraint_graph(problem: Problem) -> nx.Graph:
    graph = nx.Graph()
    graph.add_nodes_from(range(problem.n_agents))
    graph.add_edges_from(problem.edges())
    return graph


def validate(problem: Problem) -> None:
    """Check every problem invariant, raising on the first violation."""
    if problem.n_agents < 1:
        raise ProblemValidationError("n_agents must be positive")
    if len(problem.domain_sizes) != problem.n_agents:
        raise ProblemValidationError(
            f"domain_sizes has {len(problem.domain_sizes)} entries, expected {problem.n_agents}"
        )
    for agent, size in enumerate(problem.domain_sizes):
        if size < 1:
            raise ProblemValidationError(f"domain of agent {agent} must be positive, got {size}")

    for (i, j), matrix in problem.side_costs.items():
        if i == j:
            raise ProblemValidationError(f"self pair ({i},{j})")
        if not (0 <= i < problem.n_agents and 0 <= j < problem.n_agents):
            raise ProblemValidationError(f"side ({i},{j}) references an unknown agent")
        expected = (problem.domain_sizes[i], problem.domain_sizes[j])
        if matrix.shape != expected:
            raise ProblemValidationError(f"bad shape for side ({i},{j}): {matrix.shape}, expected {expected}")
        if not np.all(np.isfinite(matrix)):
            raise ProblemValidationError(f"non-finite cost in side ({i},{j})")
        if np.any(matrix < 0):
            raise ProblemValidationError(f"negative cost in side ({i},{j})")
        if (j, i) not in problem.side_costs:
            raise ProblemValidationError(f"missing mirror side ({j},{i}) for ({i},{j})")


def check_assignment(problem: Problem, assignment: Mapping[int, int]) -> None:
    missing = [a for a in range(problem.n_agents) if a not in assignment]
    if missing:
        raise ValueError(f"incomplete assignment, missing agents {missing}")
    for agent, value in assignment.items():
        if not 0 <= value < problem.domain_sizes[agent]:
            raise ValueError(f"value {value} out of domain for agent {agent}")


def total_cost(problem: Problem, assignment: Mapping[int, int]) -> float:
    """Aggregated cost of a complete assignment: both sides of every constraint."""
    check_assignment(problem, assignment)
    return float(sum(m[assignment[i], assignment[j]] for (i, j), m in problem.side_costs.items()))


def _random_constraint_graph(n: int, density: float, rng: np.random.Generator) -> nx.Graph:
    # spanning tree first so that every generated instance admits a pseudo tree
    graph = nx.Graph()
    graph.add_nodes_from(range(n))
    order = rng.permutation(n)
    for k in range(1, n):
        anchor = order[int(rng.integers(k))]
        graph.add_edge(int(order[k]), int(anchor))

    target = max(n - 1, math.ceil(density * n * (n - 1) / 2))
    candidates = sorted(tuple(sorted(e)) for e in nx.non_edges(graph))
    extra = target - graph.number_of_edges()
    if extra > 0 and candidates:
        picks = rng.choice(len(candidates), size=min(extra, len(candidates)), replace=False)
        graph.add_edges_from(candidates[int(k)] for k in sorted(picks))
    logger.debug(f"Generated constraint graph: {n} agents, {graph.number_of_edges()} edges")
    return graph


def _check_generator_args(n: int, density: float, domain: int) -> None:
    if n < 2:
        raise ValueError(f"need at least two agents, got {n}")
    if not 0 < density <= 1:
        raise ValueError(f"density must be in (0, 1], got {density}")
    if domain < 1:
        raise ValueError(f"domain must be positive, got {domain}")


def random_adcop(n: int, density: float, domain: int, max_cost: int = DEFAULT_MAX_COST, seed: int = 0) -> Problem:
    """Random ADCOP with uniform integer costs in ``[0, max_cost]`` on both sides."""
    _check_generator_args(n, density, domain)
    rng = np.random.default_rng(seed)
    graph = _random_constraint_graph(n, density, rng)
    sides = {}
    for i, j in sorted(tuple(sorted(e)) for e in graph.edges()):
        sides[(i, j)] = rng.integers(0, max_cost + 1, size=(domain, domain))
        sides[(j, i)] = rng.integers(0, max_cost + 1, size=(domain, domain))
    return Problem.from_sides([domain] * n, sides)


def random_maxdcsp(n: int, density: float, domain: int, tightness: float, seed: int = 0) -> Problem:
    """Asymmetric MaxDCSP: each directed entry is 1 (prohibited) with probability ``tightness``."""
    _check_generator_args(n, density, domain)
    if not 0 <= tightness <= 1:
        raise ValueError(f"tightness must be in [0, 1], got {tightness}")
    rng = np.random.default_rng(seed)
    graph = _random_constraint_graph(n, density, rng)
    sides = {}
    for i, j in sorted(tuple(sorted(e)) for e in graph.edges()):
        sides[(i, j)] = (rng.random((domain, domain)) < tightness).astype(float)
        sides[(j, i)] = (rng.random((domain, domain)) < tightness).astype(float)
    return Problem.from_sides([domain] * n, sides)


# File format


class SideRecord(BaseModel):
    agent: int = Field(..., ge=0)
    neighbor: int = Field(..., ge=0)
    costs: List[List[float]]


class ProblemDocument(BaseModel):
    """JSON problem file: agents, domains and one record per directed side."""

    n_agents: int = Field(..., ge=1)
    domain_sizes: List[int]
    sides: List[SideRecord] = []

    @classmethod
    def from_problem(cls, problem: Problem) -> "ProblemDocument":
        return cls(
            n_agents=problem.n_agents,
            domain_sizes=list(problem.domain_sizes),
            sides=[
                SideRecord(agent=i, neighbor=j, costs=matrix.tolist())
                for (i, j), matrix in sorted(problem.side_costs.items())
            ],
        )

    def to_problem(self) -> Problem:
        sides = {}
        for index, side in enumerate(self.sides):
            key = (side.agent, side.neighbor)
            if key in sides:
                raise ProblemParseError(f"sides[{index}]: duplicate side {key}")
            rows = {len(row) for row in side.costs}
            if len(rows) > 1:
                raise ProblemParseError(f"sides[{index}].costs: ragged matrix for side {key}")
            sides[key] = side.costs
        problem = Problem.from_sides(self.domain_sizes, sides)
        if problem.n_agents != self.n_agents:
            raise ProblemParseError(
                f"domain_sizes: {problem.n_agents} entries for n_agents={self.n_agents}"
            )
        return problem


def serialize(problem: Problem) -> str:
    return ProblemDocument.from_problem(problem).model_dump_json(indent=2) + "\n"


def parse(text: str) -> Problem:
    """Read a problem document; diagnostics name the offending line or field."""
    try:
        document = ProblemDocument.model_validate_json(text)
    except ValidationError as exc:
        details = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or '<document>'}: {err['msg']}" for err in exc.errors()
        )
        raise ProblemParseError(details) from exc
    problem = document.to_problem()
    validate(problem)
    return problem


def describe(problem: Problem, tree=None) -> Dict[str, object]:
    n = problem.n_agents
    edges = len(problem.edges())
    summary: Dict[str, object] = {
        "agents": n,
        "constraints": edges,
        "density": round(2 * edges / (n * (n - 1)), 4) if n > 1 else 0.0,
        "max_domain": max(problem.domain_sizes),
        "search_space": problem.search_space(),
    }
    if tree is not None:
        summary["root"] = tree.root
        summary["induced_width"] = tree.induced_width
        summary["depth"] = max(tree.depth.values())
    return summary


def load(path) -> Problem:
    with open(path, encoding="utf-8") as handle:
        return parse(handle.read())


def dump(problem: Problem, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(serialize(problem))

