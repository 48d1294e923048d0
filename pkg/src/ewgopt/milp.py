"""Branch-and-bound over :func:`ewgopt.linprog.solve_lp`.

Node order is depth first; every ``RESORT_EVERY`` processed nodes the open
list is re-sorted so the best LP bound is explored next.  Branching picks the
most fractional integer variable (ties to the lowest index).  Children start
from their parent's optimal basis.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linprog import LinearProgram, MalformedProgram, Status, solve_lp

log = logging.getLogger(__name__)

INT_TOL = 1e-6
RESORT_EVERY = 64
_PRUNE_REL = 1e-9


class UnboundedRelaxation(RuntimeError):
    """The LP relaxation is unbounded; every EWG formulation is bounded, so this is a modeling bug."""


@dataclass
class MilpSolution:
    status: Status
    objective_value: float
    values: np.ndarray
    nodes_explored: int
    best_bound: float

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


@dataclass
class _Node:
    lower: np.ndarray
    upper: np.ndarray
    bound: float
    depth: int
    seq: int
    basis: object


def _fractionality(x: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Distance to the nearest integer for marked fractional entries, else -1."""
    frac = np.abs(x - np.round(x))
    return np.where(mask & (frac > INT_TOL), frac, -1.0)


def solve_milp(p: LinearProgram, node_log: Optional[bool] = None) -> MilpSolution:
    """Exact minimization of ``p`` with its integer-marked variables integral.

    ``node_log`` emits one DEBUG line per node; by default it follows the
    logger level.
    """
    p.validate()
    if node_log is None:
        node_log = log.isEnabledFor(logging.DEBUG)
    mask = p.integer
    if np.any(mask & ~(np.isfinite(p.lower) & np.isfinite(p.upper))):
        raise MalformedProgram("integer-marked variables need finite bounds")

    if not mask.any():
        sol = solve_lp(p)
        if sol.status is Status.UNBOUNDED:
            raise UnboundedRelaxation("LP relaxation is unbounded")
        return MilpSolution(sol.status, sol.objective_value, sol.values, 1, sol.objective_value)

    lower = p.lower.copy()
    upper = p.upper.copy()
    lower[mask] = np.ceil(lower[mask] - INT_TOL)
    upper[mask] = np.floor(upper[mask] + INT_TOL)
    if np.any(lower > upper):
        return MilpSolution(Status.INFEASIBLE, math.inf, np.full(p.n_vars, np.nan), 0, math.inf)

    incumbent = None
    inc_value = math.inf
    # lowest LP bound among nodes discarded by bound pruning
    pruned_bound = math.inf
    seq = 0
    stack = [_Node(lower, upper, -math.inf, 0, seq, None)]
    explored = 0

    def prune_level():
        return inc_value - _PRUNE_REL * (1.0 + abs(inc_value))

    while stack:
        if explored and explored % RESORT_EVERY == 0:
            # best bound last so it is popped next; seq keeps the order deterministic
            stack.sort(key=lambda nd: (-nd.bound, -nd.seq))
        node = stack.pop()
        if node.bound >= prune_level():
            pruned_bound = min(pruned_bound, node.bound)
            continue
        explored += 1
        sol = solve_lp(p.with_bounds(node.lower, node.upper), warm_start=node.basis)
        if sol.status is Status.UNBOUNDED:
            raise UnboundedRelaxation("LP relaxation is unbounded")
        if sol.status is Status.INFEASIBLE:
            if node_log:
                log.debug("node %d depth %d infeasible", explored, node.depth)
            continue
        bound = sol.objective_value
        if bound >= prune_level():
            pruned_bound = min(pruned_bound, bound)
            if node_log:
                log.debug("node %d depth %d bound %.9g pruned", explored, node.depth, bound)
            continue
        frac = _fractionality(sol.values, mask)
        if frac.max() < 0:
            incumbent = sol.values.copy()
            inc_value = bound
            if node_log:
                log.debug("node %d depth %d bound %.9g incumbent", explored, node.depth, bound)
            continue
        # most fractional; argmax returns the lowest index on ties
        j = int(np.argmax(frac))
        v = sol.values[j]
        if node_log:
            log.debug("node %d depth %d bound %.9g branch x%d=%.6g", explored, node.depth, bound, j, v)
        down_upper = node.upper.copy()
        down_upper[j] = math.floor(v)
        up_lower = node.lower.copy()
        up_lower[j] = math.ceil(v)
        down = _Node(node.lower, down_upper, bound, node.depth + 1, seq + 1, sol.basis)
        up = _Node(up_lower, node.upper, bound, node.depth + 1, seq + 2, sol.basis)
        seq += 2
        # child on the rounding side is explored first
        if v - math.floor(v) > 0.5:
            stack.extend([down, up])
        else:
            stack.extend([up, down])

    if incumbent is None:
        return MilpSolution(Status.INFEASIBLE, math.inf, np.full(p.n_vars, np.nan), explored, math.inf)
    values = incumbent
    values[mask] = np.round(values[mask])
    obj = p.objective(values)
    return MilpSolution(Status.OPTIMAL, obj, values, explored, min(obj, pruned_bound))
