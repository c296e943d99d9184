"""Exhaustive ground truth for small problems."""
from __future__ import annotations

import logging
import os
from typing import Optional, Tuple

import numpy as np
from dotenv import load_dotenv

from .problem import Assignment, Problem, total_cost
from .tables import from_side, join_all

load_dotenv()

logger = logging.getLogger(__name__)

ORACLE_CAP = int(os.getenv("ORACLE_CAP", str(10**7)))


class SearchSpaceTooLarge(ValueError):
    """The joint domain exceeds the enumeration cap."""


def brute_force(problem: Problem, cap: Optional[int] = None) -> Tuple[Assignment, float]:
    """Minimal-cost assignment, ties broken on the lexicographically smallest value vector."""
    cap = ORACLE_CAP if cap is None else cap
    space = problem.search_space()
    if space > cap:
        raise SearchSpaceTooLarge(f"search space {space} exceeds cap {cap}")

    agents = list(range(problem.n_agents))
    full = join_all(from_side(problem, i, j) for (i, j) in problem.side_costs)
    # agents outside every constraint keep value 0
    order = [a for a in agents if a in full.scope]
    if order:
        values = full.values.transpose([full.dims.index(a) for a in order])
        flat = int(values.argmin())
        best = {a: int(v) for a, v in zip(order, np.unravel_index(flat, values.shape))}
    else:
        best = {}
    assignment = {a: best.get(a, 0) for a in agents}
    cost = total_cost(problem, assignment)
    logger.debug(f"Oracle enumerated {space} assignments, best cost {cost}")
    return assignment, cost

