"""DFS pseudo trees over the constraint graph and the structural sets the
solver asks about: Desc, Sep, ID, AP and the elimination sets EV(i, c)."""
from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from functools import cached_property
from types import MappingProxyType
from typing import Dict, FrozenSet, List, Mapping, Optional, Tuple

import networkx as nx

from .problem import Problem, constraint_graph

logger = logging.getLogger(__name__)


class DisconnectedGraphError(ValueError):
    """The constraint graph has more than one component."""


@dataclass(frozen=True)
class PseudoTree:
    root: int
    parent: Mapping[int, int]
    pseudo_parents: Mapping[int, Tuple[int, ...]]
    children: Mapping[int, Tuple[int, ...]]
    pseudo_children: Mapping[int, Tuple[int, ...]]
    depth: Mapping[int, int]
    order: Tuple[int, ...]

    @property
    def agents(self) -> Tuple[int, ...]:
        return tuple(sorted(self.order))

    def all_parents(self, i: int) -> Tuple[int, ...]:
        """AP(i): parent followed by pseudo parents."""
        head = (self.parent[i],) if i in self.parent else ()
        return head + self.pseudo_parents[i]

    def lower_neighbors(self, i: int) -> FrozenSet[int]:
        return frozenset(self.children[i]) | frozenset(self.pseudo_children[i])

    def neighbors(self, i: int) -> FrozenSet[int]:
        return frozenset(self.all_parents(i)) | self.lower_neighbors(i)

    def ancestors(self, i: int) -> Tuple[int, ...]:
        path = []
        while i in self.parent:
            i = self.parent[i]
            path.append(i)
        return tuple(path)

    @cached_property
    def _descendants(self) -> Mapping[int, FrozenSet[int]]:
        result: Dict[int, FrozenSet[int]] = {}
        for agent in reversed(self.order):
            below = set()
            for child in self.children[agent]:
                below.add(child)
                below |= result[child]
            result[agent] = frozenset(below)
        return MappingProxyType(result)

    def descendants(self, i: int) -> FrozenSet[int]:
        return self._descendants[i]

    def branch(self, c: int) -> FrozenSet[int]:
        return self._descendants[c] | {c}

    @cached_property
    def _separators(self) -> Mapping[int, FrozenSet[int]]:
        result = {}
        for agent in self.order:
            upward = set()
            for member in self.branch(agent):
                upward.update(self.all_parents(member))
            result[agent] = frozenset(upward - self.branch(agent))
        return MappingProxyType(result)

    def separators(self, i: int) -> FrozenSet[int]:
        return self._separators[i]

    @cached_property
    def _interface(self) -> Mapping[int, FrozenSet[int]]:
        result = {}
        for agent in self.order:
            sep = self._separators[agent]
            result[agent] = frozenset(d for d in self._descendants[agent] if sep & set(self.all_parents(d)))
        return MappingProxyType(result)

    def interface_descendants(self, i: int) -> FrozenSet[int]:
        return self._interface[i]

    def highest_parent(self, x: int) -> Optional[int]:
        parents = self.all_parents(x)
        if not parents:
            return None
        return min(parents, key=lambda a: self.depth[a])

    @cached_property
    def induced_width(self) -> int:
        """Largest |Sep(i)| + |ID(i)| + 1 over all agents."""
        return max(len(self._separators[a]) + len(self._interface[a]) + 1 for a in self.order)

    def dump(self) -> str:
        lines = []

        def fmt(values) -> str:
            return "[" + ",".join(str(v) for v in sorted(values)) + "]"

        for agent in self.order:
            indent = "  " * self.depth[agent]
            lines.append(
                f"{indent}a{agent} pp={fmt(self.pseudo_parents[agent])} "
                f"pc={fmt(self.pseudo_children[agent])} sep={fmt(self.separators(agent))} "
                f"id={fmt(self.interface_descendants(agent))}"
            )
        return "\n".join(lines)


def _ordered(candidates, degree, tie_key) -> List[int]:
    return sorted(candidates, key=lambda v: (-degree[v], tie_key(v)))


def build_dfs(problem: Problem, seed: Optional[int] = None, root: Optional[int] = None) -> PseudoTree:
    """Depth-first pseudo tree.

    The root is the highest-degree agent unless given; children are visited by
    descending degree. Ties go to the lowest index, or are shuffled when a
    ``seed`` is supplied.
    """
    graph = constraint_graph(problem)
    if not nx.is_connected(graph):
        components = [sorted(c) for c in nx.connected_components(graph)]
        raise DisconnectedGraphError(f"constraint graph has {len(components)} components: {components}")

    degree = dict(graph.degree())
    if seed is None:
        tie_key = lambda v: v  # noqa: E731
    else:
        shuffled = list(graph.nodes())
        random.Random(seed).shuffle(shuffled)
        rank = {v: k for k, v in enumerate(shuffled)}
        tie_key = rank.__getitem__

    if root is None:
        root = _ordered(graph.nodes(), degree, tie_key)[0]
    elif root not in graph:
        raise ValueError(f"unknown root agent {root}")

    parent: Dict[int, int] = {}
    depth = {root: 0}
    order = [root]
    children: Dict[int, List[int]] = {v: [] for v in graph.nodes()}
    stack = [(root, iter(_ordered(graph.neighbors(root), degree, tie_key)))]
    while stack:
        node, pending = stack[-1]
        advanced = False
        for nxt in pending:
            if nxt in depth:
                continue
            parent[nxt] = node
            depth[nxt] = depth[node] + 1
            children[node].append(nxt)
            order.append(nxt)
            stack.append((nxt, iter(_ordered(graph.neighbors(nxt), degree, tie_key))))
            advanced = True
            break
        if not advanced:
            stack.pop()

    pseudo_parents: Dict[int, List[int]] = {v: [] for v in graph.nodes()}
    pseudo_children: Dict[int, List[int]] = {v: [] for v in graph.nodes()}
    for u, v in graph.edges():
        if parent.get(u) == v or parent.get(v) == u:
            continue
        upper, lower = (u, v) if depth[u] < depth[v] else (v, u)
        pseudo_children[upper].append(lower)
        pseudo_parents[lower].append(upper)

    tree = PseudoTree(
        root=root,
        parent=MappingProxyType(parent),
        pseudo_parents=MappingProxyType({k: tuple(sorted(v)) for k, v in pseudo_parents.items()}),
        children=MappingProxyType({k: tuple(v) for k, v in children.items()}),
        pseudo_children=MappingProxyType({k: tuple(sorted(v)) for k, v in pseudo_children.items()}),
        depth=MappingProxyType(depth),
        order=tuple(order),
    )
    logger.debug(f"Built pseudo tree rooted at {root} with induced width {tree.induced_width}")
    return tree


def _check_agent(tree: PseudoTree, problem: Problem, i: int) -> None:
    if len(tree.order) != problem.n_agents:
        raise ValueError("pseudo tree and problem disagree on the number of agents")
    if i not in tree.depth:
        raise ValueError(f"unknown agent {i}")


def separators(tree: PseudoTree, problem: Problem, i: int) -> FrozenSet[int]:
    """Sep(i): ancestors constrained with i or one of its descendants."""
    _check_agent(tree, problem, i)
    return tree.separators(i)


def interface_descendants(tree: PseudoTree, problem: Problem, i: int) -> FrozenSet[int]:
    """ID(i): descendants constrained with some member of Sep(i)."""
    _check_agent(tree, problem, i)
    return tree.interface_descendants(i)


def elimination_set(tree: PseudoTree, problem: Problem, i: int, c: int) -> FrozenSet[int]:
    """EV(i, c): variables of branch c whose highest (pseudo) parent is i."""
    _check_agent(tree, problem, i)
    if c not in tree.children[i]:
        raise ValueError(f"agent {c} is not a child of {i}")
    return frozenset(x for x in tree.branch(c) if tree.highest_parent(x) == i)


def elimination_set_formula(tree: PseudoTree, i: int, c: int) -> FrozenSet[int]:
    """((PC(i) ∩ Desc(c)) ∪ {c}) \\ ID(i), the closed-form counterpart of elimination_set."""
    if c not in tree.children[i]:
        raise ValueError(f"agent {c} is not a child of {i}")
    pseudo = frozenset(tree.pseudo_children[i]) & tree.descendants(c)
    return (pseudo | {c}) - tree.interface_descendants(i)
