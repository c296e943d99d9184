"""Dense utility tables with join, min-elimination and argmin.

Every operation that touches table cells reports the accesses to an explicit
``AccessCounter``; this is the unit the engine's NCLO metric is built on:
a join writes each output cell once and reads one cell from each operand
(3 accesses per output cell), an elimination reads every input cell and writes
every output cell, conditioning and argmin read the cells they inspect.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from .problem import Problem, Side


class DimensionMismatchError(ValueError):
    """Shared dimensions disagree on their domain size, or a dimension is missing."""


@dataclass
class AccessCounter:
    accesses: int = 0
    max_dims: int = 0

    def add(self, count: int) -> None:
        self.accesses += int(count)

    def observe(self, *tables: "UtilityTable") -> None:
        for table in tables:
            self.max_dims = max(self.max_dims, len(table.dims))


def _count(counter: Optional[AccessCounter], amount: int) -> None:
    if counter is not None:
        counter.add(amount)


@dataclass(frozen=True, eq=False)
class UtilityTable:
    dims: Tuple[int, ...]
    values: np.ndarray
    elimination_result: bool = False
    # directed sides summed into this table that still span two live dimensions
    sources: FrozenSet[Side] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if len(set(self.dims)) != len(self.dims):
            raise ValueError(f"duplicate dimensions {self.dims}")
        if self.values.ndim != len(self.dims):
            raise DimensionMismatchError(f"{len(self.dims)} dims for a {self.values.ndim}-d array")
        self.values.setflags(write=False)

    @property
    def domain_sizes(self) -> Tuple[int, ...]:
        return tuple(int(n) for n in self.values.shape)

    @property
    def cells(self) -> int:
        return int(self.values.size)

    @property
    def scope(self) -> FrozenSet[int]:
        return frozenset(self.dims)

    def value_at(self, assignment: Mapping[int, int]) -> float:
        return float(self.values[tuple(assignment[d] for d in self.dims)])

    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def __repr__(self) -> str:
        return f"UtilityTable(dims={list(self.dims)}, cells={self.cells}, eliminated={self.elimination_result})"


def zero_table() -> UtilityTable:
    return UtilityTable(dims=(), values=np.zeros(()))


def from_side(problem: Problem, i: int, j: int) -> UtilityTable:
    if (i, j) not in problem.side_costs:
        raise KeyError(f"no side ({i},{j}) in problem")
    return UtilityTable(dims=(i, j), values=np.array(problem.side_costs[(i, j)], dtype=float), sources=frozenset({(i, j)}))


def slice_assignment(assignment: Mapping[int, int], keys: Iterable[int]) -> Dict[int, int]:
    keys = set(keys)
    return {k: v for k, v in assignment.items() if k in keys}


def _aligned(table: UtilityTable, out_dims: Sequence[int], sizes: Mapping[int, int]) -> np.ndarray:
    position = {d: k for k, d in enumerate(out_dims)}
    perm = sorted(range(len(table.dims)), key=lambda k: position[table.dims[k]])
    arranged = np.transpose(table.values, perm) if perm else table.values
    shape = [sizes[d] if d in table.scope else 1 for d in out_dims]
    return arranged.reshape(shape)


def join(u: UtilityTable, v: UtilityTable, counter: Optional[AccessCounter] = None) -> UtilityTable:
    sizes = dict(zip(u.dims, u.domain_sizes))
    for dim, size in zip(v.dims, v.domain_sizes):
        if sizes.setdefault(dim, size) != size:
            raise DimensionMismatchError(f"dimension {dim} has sizes {sizes[dim]} and {size}")
    out_dims = u.dims + tuple(d for d in v.dims if d not in u.scope)
    values = np.array(_aligned(u, out_dims, sizes) + _aligned(v, out_dims, sizes), order="C")
    _count(counter, 3 * values.size)
    return UtilityTable(
        dims=out_dims,
        values=values,
        elimination_result=u.elimination_result or v.elimination_result,
        sources=u.sources | v.sources,
    )


def join_all(tables: Iterable[UtilityTable], counter: Optional[AccessCounter] = None) -> UtilityTable:
    tables = list(tables)
    if not tables:
        return zero_table()
    result = tables[0]
    for table in tables[1:]:
        result = join(result, table, counter)
    return result


def eliminate(u: UtilityTable, variables: Iterable[int], counter: Optional[AccessCounter] = None) -> UtilityTable:
    """Min-project ``variables`` out of ``u``."""
    variables = frozenset(variables)
    missing = variables - u.scope
    if missing:
        raise DimensionMismatchError(f"cannot eliminate {sorted(missing)}: not in dims {list(u.dims)}")
    axes = tuple(k for k, d in enumerate(u.dims) if d in variables)
    values = np.min(u.values, axis=axes) if axes else np.array(u.values)
    _count(counter, u.cells + values.size)
    return UtilityTable(
        dims=tuple(d for d in u.dims if d not in variables),
        values=np.array(values, order="C"),
        elimination_result=True,
        sources=frozenset(s for s in u.sources if not variables.intersection(s)),
    )


def condition(u: UtilityTable, assignment: Mapping[int, int], counter: Optional[AccessCounter] = None) -> UtilityTable:
    """Fix every assigned dimension of ``u`` to its value."""
    index = tuple(assignment[d] if d in assignment else slice(None) for d in u.dims)
    for d, size in zip(u.dims, u.domain_sizes):
        if d in assignment and not 0 <= assignment[d] < size:
            raise ValueError(f"value {assignment[d]} out of domain for dimension {d}")
    values = np.array(u.values[index], order="C")
    _count(counter, values.size)
    return UtilityTable(
        dims=tuple(d for d in u.dims if d not in assignment),
        values=values,
        elimination_result=u.elimination_result,
        sources=frozenset(s for s in u.sources if not set(s) & set(assignment)),
    )


def argmin(
    u: UtilityTable,
    variables: Iterable[int],
    context: Mapping[int, int],
    counter: Optional[AccessCounter] = None,
) -> Dict[int, int]:
    """Joint minimiser of ``variables`` under ``context``; ties go to the
    lexicographically smallest value vector (variables in ascending order)."""
    variables = tuple(sorted(set(variables)))
    missing = set(variables) - u.scope
    if missing:
        raise DimensionMismatchError(f"argmin over {sorted(missing)}: not in dims {list(u.dims)}")
    unassigned = [d for d in u.dims if d not in variables and d not in context]
    if unassigned:
        raise ValueError(f"context leaves dimensions {unassigned} unassigned")
    if not variables:
        return {}
    fixed = condition(u, {d: context[d] for d in u.dims if d not in variables}, counter)
    arranged = np.transpose(fixed.values, [fixed.dims.index(v) for v in variables])
    best = np.unravel_index(int(np.argmin(arranged)), arranged.shape)
    return {v: int(k) for v, k in zip(variables, best)}
