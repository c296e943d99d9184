"""AsymDPOP agents.

Utility propagation eliminates every variable at its highest (pseudo) parent,
once all private functions on it have been aggregated. Two knobs trade
resources:

* ``k_p`` caps the dimensionality of locally built tables. When it reaches the
  induced width of the pseudo tree every agent sends one joint table (plain
  GNLE); below that, agents forward sets of small tables (TSPS).
* ``k_e`` is the batch size of min-eliminations (MBES); ``None`` eliminates each
  connected group of variables in one min.

Value propagation replays the recorded elimination batches backwards, so the
eliminating agent chooses the values of the variables it eliminated.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import networkx as nx
from pydantic import BaseModel, ConfigDict, Field

from .problem import Problem
from .pseudotree import PseudoTree
from .tables import (
    AccessCounter,
    DimensionMismatchError,
    UtilityTable,
    argmin,
    condition,
    eliminate,
    from_side,
    join,
    join_all,
    slice_assignment,
)

logger = logging.getLogger(__name__)

INDUCED_WIDTH = "w*"
WHOLE_GROUP = "all"


class SolverProtocolError(RuntimeError):
    """An agent received a message or call its protocol state does not allow."""


def _parse_knob(value: Union[str, int, None], symbol: str) -> Optional[int]:
    if value is None or value == symbol:
        return None
    return int(value)


class SolverConfig(BaseModel):
    """``k_p``/``k_e`` of a run; ``None`` stands for the induced width / the whole group."""

    model_config = ConfigDict(frozen=True)

    k_p: Optional[int] = Field(None, ge=2)
    k_e: Optional[int] = Field(None, ge=1)

    @classmethod
    def parse(cls, k_p: Union[str, int, None] = None, k_e: Union[str, int, None] = None) -> "SolverConfig":
        return cls(k_p=_parse_knob(k_p, INDUCED_WIDTH), k_e=_parse_knob(k_e, WHOLE_GROUP))

    @property
    def kp_label(self) -> str:
        return INDUCED_WIDTH if self.k_p is None else str(self.k_p)

    @property
    def ke_label(self) -> str:
        return WHOLE_GROUP if self.k_e is None else str(self.k_e)

    @property
    def label(self) -> str:
        return f"AsymDPOP(k_p={self.kp_label}, k_e={self.ke_label})"

    def table_limit(self, tree: PseudoTree) -> int:
        return max(2, tree.induced_width) if self.k_p is None else self.k_p

    def uses_gnle(self, tree: PseudoTree) -> bool:
        return self.k_p is None or self.k_p >= tree.induced_width


@dataclass(frozen=True)
class UtilMessage:
    sender: int
    receiver: int
    tables: Tuple[UtilityTable, ...]
    # remaining (pseudo) parents that have not yet seen each lower variable
    counters: Mapping[int, int] = field(default_factory=dict)

    @property
    def kind(self) -> str:
        return "UTIL" if len(self.tables) == 1 else "UTILSET"

    @property
    def scope(self) -> FrozenSet[int]:
        return frozenset().union(*(t.scope for t in self.tables))

    @property
    def cells(self) -> int:
        return sum(t.cells for t in self.tables)

    @property
    def payload_units(self) -> int:
        return 1 + self.cells


@dataclass(frozen=True)
class ValueMessage:
    sender: int
    receiver: int
    assignment: Mapping[int, int]

    kind = "VALUE"

    @property
    def payload_units(self) -> int:
        return 1 + len(self.assignment)


@dataclass(frozen=True)
class EliminationStep:
    variables: Tuple[int, ...]
    tables: Tuple[UtilityTable, ...]


@dataclass
class AgentState:
    agent: int
    branch_tables: Dict[int, Tuple[UtilityTable, ...]] = field(default_factory=dict)
    branch_steps: Dict[int, List[EliminationStep]] = field(default_factory=dict)
    branch_scope: Dict[int, FrozenSet[int]] = field(default_factory=dict)
    eliminated: Dict[int, FrozenSet[int]] = field(default_factory=dict)
    held: List[UtilityTable] = field(default_factory=list)
    counters: Dict[int, int] = field(default_factory=dict)
    received: int = 0
    assignment: Dict[int, int] = field(default_factory=dict)
    reported_cost: Optional[float] = None
    finished: bool = False


def partition_functions(
    tables: Iterable[UtilityTable], k_p: int, counter: Optional[AccessCounter] = None
) -> List[UtilityTable]:
    """Greedily pack tables into joins of at most ``k_p`` dimensions.

    Each group starts from the first pending table and repeatedly takes the
    pending table with the largest dimension overlap that still fits.
    """
    pending = sorted(tables, key=lambda t: sorted(t.dims))
    packed = []
    while pending:
        group = [pending.pop(0)]
        scope = set(group[0].scope)
        while True:
            best = None
            for position, table in enumerate(pending):
                if len(scope | table.scope) > k_p:
                    continue
                overlap = len(scope & table.scope)
                if best is None or overlap > best[0]:
                    best = (overlap, position)
            if best is None:
                break
            table = pending.pop(best[1])
            group.append(table)
            scope |= table.scope
        packed.append(join_all(group, counter))
    return packed


def local_tables(
    agent: int, problem: Problem, tree: PseudoTree, k_p: int, counter: Optional[AccessCounter] = None
) -> List[UtilityTable]:
    """The agent's private functions toward AP(agent), packed under ``k_p``."""
    sides = [from_side(problem, agent, j) for j in tree.all_parents(agent)]
    return partition_functions(sides, k_p, counter)


def _host_index(tables: Sequence[UtilityTable], scope: FrozenSet[int]) -> Optional[int]:
    hosts = [k for k, t in enumerate(tables) if scope <= t.scope]
    if not hosts:
        return None
    return min(hosts, key=lambda k: (tables[k].cells, k))


def join_private(
    tables: Sequence[UtilityTable], side: UtilityTable, counter: Optional[AccessCounter] = None
) -> List[UtilityTable]:
    """Join a private function into the smallest table already spanning it,
    falling back to the table that grows least."""
    tables = list(tables)
    if not tables:
        return [side]
    host = _host_index(tables, side.scope)
    if host is None:
        host = min(range(len(tables)), key=lambda k: (len(tables[k].scope | side.scope) - len(tables[k].dims), k))
        logger.debug(f"No table spans {sorted(side.scope)}; joining into {list(tables[host].dims)}")
    tables[host] = join(tables[host], side, counter)
    return tables


def merge_subsets(tables: Iterable[UtilityTable], counter: Optional[AccessCounter] = None) -> List[UtilityTable]:
    """Join every table whose dims are covered by another table into it."""
    merged: List[UtilityTable] = []
    for table in sorted(tables, key=lambda t: -len(t.dims)):
        host = _host_index(merged, table.scope)
        if host is None:
            merged.append(table)
        else:
            merged[host] = join(merged[host], table, counter)
    return merged


def _next_batch(tables: Sequence[UtilityTable], remaining: set, k_e: Optional[int]) -> FrozenSet[int]:
    if k_e is None or k_e >= len(remaining):
        return frozenset(remaining)

    def width(candidate: set) -> int:
        scope = set()
        for table in tables:
            if table.scope & candidate:
                scope |= table.scope
        return len(scope - candidate)

    batch: set = set()
    while len(batch) < k_e:
        pool = sorted(remaining - batch)
        if batch:
            linked = [v for v in pool if any(v in t.scope and t.scope & batch for t in tables)]
            pool = linked or pool
        batch.add(min(pool, key=lambda v: (width(batch | {v}), v)))
    return frozenset(batch)


def eliminate_with_mbes(
    tables: Iterable[UtilityTable],
    variables: Iterable[int],
    k_e: Optional[int],
    counter: Optional[AccessCounter] = None,
) -> Tuple[List[UtilityTable], List[EliminationStep]]:
    """Mini-batch elimination.

    Variables are split into groups that are connected through shared tables;
    each group is consumed in batches of ``k_e`` variables (the last batch may
    be short), each batch being min-eliminated from the join of the tables it
    touches. Returns the remaining tables and the batches in elimination order.
    """
    if counter is None:
        counter = AccessCounter()
    tables = list(tables)
    variables = set(variables)
    for variable in sorted(variables):
        if not any(variable in t.scope for t in tables):
            raise DimensionMismatchError(f"variable {variable} is absent from every table")

    graph = nx.Graph()
    graph.add_nodes_from(variables)
    for table in tables:
        shared = sorted(table.scope & variables)
        graph.add_edges_from(zip(shared, shared[1:]))
    groups = sorted((sorted(c) for c in nx.connected_components(graph)), key=lambda g: g[0])

    steps = []
    for group in groups:
        remaining = set(group)
        while remaining:
            batch = _next_batch(tables, remaining, k_e)
            touching = [t for t in tables if t.scope & batch]
            reduced = eliminate(join_all(touching, counter), batch, counter)
            counter.observe(reduced)
            steps.append(EliminationStep(tuple(sorted(batch)), tuple(touching)))
            tables = [t for t in tables if not t.scope & batch] + [reduced]
            remaining -= batch
            logger.debug(f"Eliminated batch {sorted(batch)} into dims {list(reduced.dims)}")
    return tables, steps


def decode_steps(
    steps: Sequence[EliminationStep], assignment: Mapping[int, int], counter: Optional[AccessCounter] = None
) -> Dict[int, int]:
    """Choose values for eliminated variables, last batch first."""
    known = dict(assignment)
    decided = {}
    for step in reversed(steps):
        fixed = [condition(t, known, counter) for t in step.tables]
        choice = argmin(join_all(fixed, counter), step.variables, known, counter)
        known.update(choice)
        decided.update(choice)
    return decided


class Agent:
    """One AsymDPOP agent; reacts to UTIL/UTILSET and VALUE messages."""

    def __init__(self, agent: int, problem: Problem, tree: PseudoTree, config: SolverConfig):
        self.id = agent
        self.problem = problem
        self.tree = tree
        self.config = config
        self.gnle = config.uses_gnle(tree)
        self.table_limit = config.table_limit(tree)
        self.state = AgentState(agent=agent)

    @property
    def children(self) -> Tuple[int, ...]:
        return self.tree.children[self.id]

    @property
    def is_root(self) -> bool:
        return self.id == self.tree.root

    @property
    def ready(self) -> bool:
        return self.state.received == len(self.children)

    def local_tables(self, counter: Optional[AccessCounter] = None) -> List[UtilityTable]:
        return local_tables(self.id, self.problem, self.tree, self.table_limit, counter)

    def absorb_child_message(self, msg: UtilMessage, counter: AccessCounter) -> None:
        child = msg.sender
        if child not in self.children or msg.receiver != self.id:
            raise SolverProtocolError(f"agent {self.id} got a utility message from non-child {child}")
        if child in self.state.branch_tables:
            raise SolverProtocolError(f"agent {self.id} got a second utility message from {child}")

        tables = list(msg.tables)
        counter.observe(*tables)
        scope = msg.scope
        lower = sorted(self.tree.lower_neighbors(self.id) & scope)
        for neighbor in lower:
            tables = join_private(tables, from_side(self.problem, self.id, neighbor), counter)

        counters = dict(msg.counters)
        ready = []
        for neighbor in lower:
            if neighbor not in counters:
                raise SolverProtocolError(f"no elimination counter for variable {neighbor}")
            counters[neighbor] -= 1
            if counters[neighbor] == 0:
                ready.append(neighbor)
        counter.observe(*tables)

        self.state.branch_tables[child] = tuple(tables)
        self.state.branch_scope[child] = scope
        reduced, steps = eliminate_with_mbes(tables, ready, self.config.k_e, counter)
        self.state.branch_steps[child] = steps
        self.state.eliminated[child] = frozenset(ready)
        for variable in ready:
            counters.pop(variable)
        self.state.counters.update(counters)
        self.state.held.extend(reduced)
        self.state.received += 1
        logger.debug(f"Agent {self.id} absorbed {msg.kind} from {child}, eliminated {sorted(ready)}")

    def finalize_util(self, counter: AccessCounter) -> UtilMessage:
        if self.is_root:
            raise SolverProtocolError("the root does not propagate utilities")
        if not self.ready:
            raise SolverProtocolError(
                f"agent {self.id} finalized after {self.state.received} of {len(self.children)} children"
            )
        tables = list(self.state.held)
        residual = []
        for upper in self.tree.all_parents(self.id):
            side = from_side(self.problem, self.id, upper)
            host = _host_index(tables, side.scope)
            if host is None:
                residual.append(side)
            else:
                tables[host] = join(tables[host], side, counter)
        tables.extend(partition_functions(residual, self.table_limit, counter))
        tables = [join_all(tables, counter)] if self.gnle else merge_subsets(tables, counter)
        counter.observe(*tables)

        scope = frozenset().union(*(t.scope for t in tables))
        counters = {v: n for v, n in self.state.counters.items() if v in scope}
        counters[self.id] = len(self.tree.all_parents(self.id))
        return UtilMessage(self.id, self.tree.parent[self.id], tuple(tables), counters)

    def root_decide(self, counter: AccessCounter) -> List[ValueMessage]:
        if not self.is_root or not self.ready:
            raise SolverProtocolError(f"agent {self.id} cannot start value propagation")
        joined = join_all(self.state.held, counter)
        foreign = joined.scope - {self.id}
        if foreign:
            raise SolverProtocolError(f"root {self.id} still holds dimensions {sorted(foreign)}")
        value = argmin(joined, [self.id], {}, counter)[self.id] if joined.dims else 0
        self.state.reported_cost = joined.value_at({self.id: value})
        self.state.assignment = {self.id: value}
        return self._dispatch_values(counter)

    def on_value_message(self, msg: ValueMessage, counter: AccessCounter) -> List[ValueMessage]:
        if msg.sender != self.tree.parent.get(self.id):
            raise SolverProtocolError(f"agent {self.id} got a value message from non-parent {msg.sender}")
        if self.id not in msg.assignment:
            raise SolverProtocolError(f"value message to {self.id} lacks its own assignment")
        # variables eliminated here are decided here, whatever the parent sent
        local = frozenset().union(*self.state.eliminated.values())
        ignored = sorted(set(msg.assignment) & local)
        if ignored:
            logger.debug(f"agent {self.id} ignores parent values for {ignored}, it decides them itself")
        self.state.assignment = {k: v for k, v in msg.assignment.items() if k not in local}
        return self._dispatch_values(counter)

    def _dispatch_values(self, counter: AccessCounter) -> List[ValueMessage]:
        known = dict(self.state.assignment)
        messages = []
        for child in self.children:
            decided = decode_steps(self.state.branch_steps[child], known, counter)
            self.state.assignment.update(decided)
            keys = self.state.branch_scope[child] | {child}
            messages.append(ValueMessage(self.id, child, slice_assignment({**known, **decided}, keys)))
        self.state.finished = True
        return messages
