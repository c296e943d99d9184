"""Deterministic message-passing simulator for AsymDPOP runs.

Agents only react to delivered messages. Leaves start the utility phase (in an
order shuffled by the scheduler seed), and a single FIFO queue delivers every
message afterwards. The recorded history is replayed to compute the metrics.
"""
from __future__ import annotations

import logging
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple, Union

import numpy as np

from .problem import Assignment, Problem, total_cost
from .pseudotree import PseudoTree, build_dfs
from .solver import Agent, SolverConfig, UtilMessage, ValueMessage
from .tables import AccessCounter

logger = logging.getLogger(__name__)

Message = Union[UtilMessage, ValueMessage]

# how each reported quantity is counted; carried with every result
METRIC_UNITS: Dict[str, str] = {
    "nclo": "one access per table cell read or written by join, eliminate or condition; "
            "longest chain of accesses along message causality",
    "network_load": "one unit per table cell or assignment pair, plus one envelope unit per message",
    "max_dims": "largest table held or sent by an agent or produced by eliminating a batch; "
                "the join feeding a batch counts through its output only",
    "privacy_loss": "directed cost entries a receiver deduces exactly, over all directed entries",
    "table_sets": "received tables are joined only when an elimination, a subset merge "
                  "or a private function needs them",
}


class SimulationDeadlock(RuntimeError):
    """The message queue drained while some agent had not finished."""


@dataclass(frozen=True)
class MessageRecord:
    id: int
    tick: int
    message: Message

    @property
    def dims(self) -> List[List[int]]:
        if isinstance(self.message, UtilMessage):
            return [sorted(t.dims) for t in self.message.tables]
        return [sorted(self.message.assignment)]

    def line(self) -> str:
        msg = self.message
        dims = ",".join("[" + ",".join(str(d) for d in group) + "]" for group in self.dims)
        return f"{self.tick} {msg.sender}->{msg.receiver} {msg.kind} dims=[{dims}] units={msg.payload_units}"


@dataclass(frozen=True)
class StepRecord:
    agent: int
    trigger: Optional[int]
    work: int
    sent: Tuple[int, ...]


@dataclass(frozen=True)
class Metrics:
    """Per-run measurements.

    ``max_dims`` is the largest table an agent holds or sends, or produces by
    eliminating a batch. The join that a batch is min-projected from right away
    counts only through its output.
    """

    nclo: int = 0
    network_load: int = 0
    message_count: int = 0
    max_dims: int = 0
    privacy_loss: float = 0.0
    utility_cells: int = 0
    max_message_cells: int = 0

    def as_dict(self) -> Dict[str, Union[int, float]]:
        return {
            "nclo": self.nclo,
            "network_load": self.network_load,
            "message_count": self.message_count,
            "max_dims": self.max_dims,
            "privacy_loss": self.privacy_loss,
            "utility_cells": self.utility_cells,
            "max_message_cells": self.max_message_cells,
        }


@dataclass
class RunResult:
    assignment: Assignment
    cost: float
    reported_cost: float
    metrics: Metrics
    config: SolverConfig
    induced_width: int
    records: List[MessageRecord] = field(default_factory=list)
    steps: List[StepRecord] = field(default_factory=list)
    trace: Optional[List[str]] = None
    metadata: Dict[str, str] = field(default_factory=dict)


def nclo_accounting(steps: Sequence[StepRecord]) -> int:
    """Critical-path length of the run in table accesses.

    Each agent's clock advances by the work of its steps; a step triggered by a
    message first catches up with the clock the message carried.
    """
    clocks: Dict[int, int] = {}
    carried: Dict[int, int] = {}
    for step in steps:
        start = clocks.get(step.agent, 0)
        if step.trigger is not None:
            start = max(start, carried[step.trigger])
        clocks[step.agent] = start + step.work
        for message_id in step.sent:
            carried[message_id] = clocks[step.agent]
    return max(clocks.values(), default=0)


def privacy_accounting(records: Sequence[MessageRecord], problem: Problem, tree: PseudoTree) -> float:
    """Fraction of directed cost entries some receiver can deduce exactly.

    A binary, non-eliminated table on ``{i, c}`` received by ``i`` exposes the
    whole of ``f_ci``. Any zero cell of a received table exposes the matching
    entry of every side ``f_ci`` still summed into it, ``c`` being a lower
    neighbour of the receiver ``i``, since costs are non-negative.
    """
    total = problem.total_entries()
    if total == 0:
        return 0.0
    leaked: Set[Tuple[int, int, int, int]] = set()
    for record in records:
        msg = record.message
        if not isinstance(msg, UtilMessage):
            continue
        receiver = msg.receiver
        lower = tree.lower_neighbors(receiver)
        for table in msg.tables:
            if not table.elimination_result and len(table.dims) == 2 and receiver in table.scope:
                (other,) = table.scope - {receiver}
                if other in lower and (other, receiver) in table.sources:
                    rows, cols = problem.side_costs[(other, receiver)].shape
                    leaked.update((other, receiver, a, b) for a in range(rows) for b in range(cols))
            zeros = np.argwhere(table.values == 0)
            if zeros.size == 0:
                continue
            for owner, neighbor in table.sources:
                if neighbor != receiver or owner not in lower:
                    continue
                axes = (table.dims.index(owner), table.dims.index(neighbor))
                leaked.update((owner, neighbor, int(z[axes[0]]), int(z[axes[1]])) for z in zeros)
    return len(leaked) / total


def run(
    problem: Problem,
    tree: Optional[PseudoTree] = None,
    config: Optional[SolverConfig] = None,
    seed: int = 0,
    trace: bool = False,
) -> RunResult:
    """Solve ``problem`` with AsymDPOP agents exchanging messages to quiescence."""
    if tree is None:
        tree = build_dfs(problem)
    if config is None:
        config = SolverConfig()
    agents = {a: Agent(a, problem, tree, config) for a in tree.order}
    logger.info(f"Running {config.label} on {problem.n_agents} agents, induced width {tree.induced_width}")

    queue: deque = deque()
    records: List[MessageRecord] = []
    steps: List[StepRecord] = []
    peak_dims = 0

    def step(agent: Agent, trigger: Optional[int], handler) -> None:
        nonlocal peak_dims
        counter = AccessCounter()
        outgoing = handler(counter)
        sent = []
        for msg in outgoing:
            record = MessageRecord(id=len(records), tick=len(records), message=msg)
            records.append(record)
            queue.append(record)
            sent.append(record.id)
            logger.debug(record.line())
        peak_dims = max(peak_dims, counter.max_dims)
        steps.append(StepRecord(agent.id, trigger, counter.accesses, tuple(sent)))

    def after_util(agent: Agent, counter: AccessCounter) -> List[Message]:
        if not agent.ready:
            return []
        if agent.is_root:
            return agent.root_decide(counter)
        return [agent.finalize_util(counter)]

    leaves = [a for a in tree.order if not tree.children[a]]
    random.Random(seed).shuffle(leaves)
    for leaf in leaves:
        step(agents[leaf], None, lambda counter, agent=agents[leaf]: after_util(agent, counter))

    while queue:
        record = queue.popleft()
        msg = record.message
        target = agents[msg.receiver]
        if isinstance(msg, UtilMessage):

            def handler(counter: AccessCounter, target=target, msg=msg) -> List[Message]:
                target.absorb_child_message(msg, counter)
                return after_util(target, counter)

        else:

            def handler(counter: AccessCounter, target=target, msg=msg) -> List[Message]:
                return target.on_value_message(msg, counter)

        step(target, record.id, handler)

    stuck = [a for a in tree.order if not agents[a].state.finished]
    if stuck:
        # the deepest agent still waiting on children blocks everyone above it
        waiting = [a for a in stuck if not agents[a].ready] or stuck
        blocker = max(waiting, key=lambda a: tree.depth[a])
        state = agents[blocker].state
        raise SimulationDeadlock(
            f"agent {blocker} never finished: {state.received} of {len(tree.children[blocker])} "
            f"child utility messages received"
        )

    assignment: Assignment = {}
    for agent in agents.values():
        assignment[agent.id] = agent.state.assignment[agent.id]
    assignment = dict(sorted(assignment.items()))

    util_cells = [r.message.cells for r in records if isinstance(r.message, UtilMessage)]
    metrics = Metrics(
        nclo=nclo_accounting(steps),
        network_load=sum(r.message.payload_units for r in records),
        message_count=len(records),
        max_dims=peak_dims,
        privacy_loss=privacy_accounting(records, problem, tree),
        utility_cells=sum(util_cells),
        max_message_cells=max(util_cells, default=0),
    )
    cost = total_cost(problem, assignment)
    metadata = {
        "config": config.label,
        "mode": "GNLE" if config.uses_gnle(tree) else "TSPS",
        "induced_width": str(tree.induced_width),
        **METRIC_UNITS,
    }
    result = RunResult(
        assignment=assignment,
        cost=cost,
        reported_cost=float(agents[tree.root].state.reported_cost),
        metrics=metrics,
        config=config,
        induced_width=tree.induced_width,
        records=records,
        steps=steps,
        trace=format_trace(records) if trace else None,
        metadata=metadata,
    )
    logger.info(f"Finished {config.label}: cost={cost} messages={metrics.message_count} nclo={metrics.nclo}")
    return result


def format_trace(records: Sequence[MessageRecord]) -> List[str]:
    return [record.line() for record in records]
