"""Dense bounded-variable primal simplex.

Programs are stated as::

    minimize    c @ x + offset
    subject to  A[i] @ x  (<=, ==, >=)  b[i]
                lower <= x <= upper

Each row gets one logical column with coefficient +1, so the all-logical
basis is the identity.  A composite phase 1 minimizes the total bound
violation of the basic variables; the same loop then switches to the real
costs.  Any starting basis can therefore be supplied, which branch-and-bound
uses to resume from a parent node.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

FEAS_TOL = 1e-7  # relative, reported residuals
PIVOT_TOL = 1e-9
_PRIMAL_TOL = 1e-9
_DUAL_TOL = 1e-9
_REFACTOR_EVERY = 64
_DEGENERATE_SWITCH = 40  # consecutive degenerate pivots before Bland's rule

LE, EQ, GE = "<=", "==", ">="
_RELATIONS = (LE, EQ, GE)


class MalformedProgram(ValueError):
    """Dimension or bound errors in a LinearProgram (a caller bug)."""


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(eq=False)
class LinearProgram:
    """Dense constraint system with bounds and integrality marks.

    ``integer`` is ignored by :func:`solve_lp` and used by the milp module.
    """

    c: np.ndarray
    A: np.ndarray
    relations: tuple
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    integer: np.ndarray
    offset: float = 0.0
    names: Optional[tuple] = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        A = np.asarray(self.A, dtype=float)
        if A.size == 0:
            A = A.reshape(0, n)
        self.A = A
        self.b = np.asarray(self.b, dtype=float).ravel()
        self.relations = tuple(self.relations)
        self.lower = np.asarray(self.lower, dtype=float).ravel()
        self.upper = np.asarray(self.upper, dtype=float).ravel()
        self.integer = np.asarray(self.integer, dtype=bool).ravel()
        self.offset = float(self.offset)

    @classmethod
    def from_rows(cls, c, rows=(), bounds=None, integer=None, offset=0.0, names=None):
        """Build from ``(coefficients, relation, rhs)`` triples.

        ``bounds`` defaults to ``[0, inf)`` for every variable.
        """
        c = np.asarray(c, dtype=float).ravel()
        n = c.size
        rows = list(rows)
        A = np.array([r[0] for r in rows], dtype=float).reshape(len(rows), n) if rows else np.zeros((0, n))
        relations = tuple(r[1] for r in rows)
        b = np.array([r[2] for r in rows], dtype=float)
        if bounds is None:
            bounds = [(0.0, np.inf)] * n
        lower = np.array([lo for lo, _ in bounds], dtype=float)
        upper = np.array([hi for _, hi in bounds], dtype=float)
        if integer is None:
            integer = np.zeros(n, dtype=bool)
        return cls(c, A, relations, b, lower, upper, integer, offset, names)

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    @property
    def constraints(self):
        return [(self.A[i], self.relations[i], float(self.b[i])) for i in range(self.n_rows)]

    def validate(self) -> None:
        n = self.n_vars
        if self.A.ndim != 2 or self.A.shape[1] != n:
            raise MalformedProgram(f"constraint matrix has shape {self.A.shape}, expected (m, {n})")
        m = self.A.shape[0]
        if self.b.size != m or len(self.relations) != m:
            raise MalformedProgram("rhs/relation count does not match number of rows")
        if any(r not in _RELATIONS for r in self.relations):
            raise MalformedProgram(f"relations must be one of {_RELATIONS}")
        if self.lower.size != n or self.upper.size != n or self.integer.size != n:
            raise MalformedProgram("bounds/integrality length does not match n_vars")
        if not np.all(np.isfinite(self.b)):
            raise MalformedProgram("rhs must be finite")
        if not (np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.c))):
            raise MalformedProgram("coefficients must be finite")
        if np.any(np.isnan(self.lower)) or np.any(np.isnan(self.upper)):
            raise MalformedProgram("bounds must not be NaN")
        if np.any(self.lower > self.upper):
            j = int(np.argmax(self.lower > self.upper))
            raise MalformedProgram(f"variable {j}: lower bound {self.lower[j]} > upper {self.upper[j]}")
        if np.any(self.lower == np.inf) or np.any(self.upper == -np.inf):
            raise MalformedProgram("bounds must not exclude every finite value")

    def with_bounds(self, lower, upper) -> "LinearProgram":
        return LinearProgram(self.c, self.A, self.relations, self.b, lower, upper,
                             self.integer, self.offset, self.names)

    def objective(self, x) -> float:
        return float(self.c @ np.asarray(x, dtype=float) + self.offset)

    def dump(self) -> str:
        """Fixed-format text listing, one constraint per line, for diffing."""

        def term(coef, j):
            name = self.names[j] if self.names else f"x{j}"
            return f"{coef:+.12g}*{name}"

        lines = ["min " + " ".join(term(v, j) for j, v in enumerate(self.c) if v != 0)
                 + f" {self.offset:+.12g}"]
        for i in range(self.n_rows):
            lhs = " ".join(term(v, j) for j, v in enumerate(self.A[i]) if v != 0)
            lines.append(f"r{i}: {lhs} {self.relations[i]} {self.b[i]:.12g}")
        for j in range(self.n_vars):
            name = self.names[j] if self.names else f"x{j}"
            kind = " int" if self.integer[j] else ""
            lines.append(f"{self.lower[j]:.12g} <= {name} <= {self.upper[j]:.12g}{kind}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Basis:
    """Simplex basis over structural + logical columns, reusable as a warm start."""

    basic: tuple
    at_upper: frozenset


@dataclass
class LpSolution:
    status: Status
    objective_value: float
    values: np.ndarray
    iterations: int
    basis: Optional[Basis] = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


@dataclass(frozen=True)
class Residuals:
    constraint: float
    bound: float
    objective: float

    def within(self, tol: float = FEAS_TOL) -> bool:
        return self.constraint <= tol and self.bound <= tol


def check_solution(p: LinearProgram, sol: LpSolution) -> Residuals:
    """Residuals of ``sol`` against ``p``.

    Constraint and bound residuals are scaled by ``1 + |rhs|`` (resp.
    ``1 + |bound|``); the objective delta by ``1 + |objective|``.
    """
    x = np.asarray(sol.values, dtype=float)
    act = p.A @ x if p.n_rows else np.zeros(0)
    viol = np.zeros(p.n_rows)
    for i, rel in enumerate(p.relations):
        d = act[i] - p.b[i]
        if rel == LE:
            viol[i] = max(d, 0.0)
        elif rel == GE:
            viol[i] = max(-d, 0.0)
        else:
            viol[i] = abs(d)
    cons = float(np.max(viol / (1.0 + np.abs(p.b)))) if p.n_rows else 0.0
    fin_lo, fin_hi = np.isfinite(p.lower), np.isfinite(p.upper)
    lo = np.zeros(p.n_vars)
    hi = np.zeros(p.n_vars)
    lo[fin_lo] = (p.lower[fin_lo] - x[fin_lo]) / (1.0 + np.abs(p.lower[fin_lo]))
    hi[fin_hi] = (x[fin_hi] - p.upper[fin_hi]) / (1.0 + np.abs(p.upper[fin_hi]))
    bound = float(max(np.max(lo, initial=0.0), np.max(hi, initial=0.0), 0.0))
    obj = p.objective(x)
    delta = abs(obj - sol.objective_value) / (1.0 + abs(sol.objective_value))
    return Residuals(cons, bound, delta)


class _Simplex:
    def __init__(self, p: LinearProgram):
        m, n = p.A.shape
        self.m, self.n = m, n
        # row equilibration; logical columns stay +1 because their bounds scale too
        scale = np.max(np.abs(p.A), axis=1) if m else np.zeros(0)
        scale[scale == 0] = 1.0
        self.row_scale = scale
        self.A = np.hstack([p.A / scale[:, None], np.eye(m)])
        self.b = p.b / scale
        self.cost = np.concatenate([p.c, np.zeros(m)])
        lo_log = np.empty(m)
        hi_log = np.empty(m)
        for i, rel in enumerate(p.relations):
            if rel == LE:
                lo_log[i], hi_log[i] = 0.0, np.inf
            elif rel == GE:
                lo_log[i], hi_log[i] = -np.inf, 0.0
            else:
                lo_log[i] = hi_log[i] = 0.0
        self.lower = np.concatenate([p.lower, lo_log])
        self.upper = np.concatenate([p.upper, hi_log])
        cmax = float(np.max(np.abs(p.c))) if n else 0.0
        self.dual_tol = _DUAL_TOL * max(1.0, cmax)
        self.iterations = 0

    # -- basis bookkeeping -------------------------------------------------

    def _nonbasic_value(self, j, prefer_upper):
        lo, hi = self.lower[j], self.upper[j]
        if prefer_upper and np.isfinite(hi):
            return hi
        if np.isfinite(lo):
            return lo
        if np.isfinite(hi):
            return hi
        return 0.0

    def start(self, basis: Optional[Basis]):
        m, total = self.m, self.n + self.m
        basic = None
        if basis is not None and len(basis.basic) == m:
            cand = np.array(basis.basic, dtype=np.int64)
            if m == 0 or np.linalg.matrix_rank(self.A[:, cand]) == m:
                basic = cand
        if basic is None:
            basic = np.arange(self.n, total, dtype=np.int64)
            at_upper = frozenset()
        else:
            at_upper = basis.at_upper
        self.basic = basic
        self.is_basic = np.zeros(total, dtype=bool)
        self.is_basic[basic] = True
        self.x = np.zeros(total)
        for j in np.flatnonzero(~self.is_basic):
            self.x[j] = self._nonbasic_value(j, j in at_upper)
        self.refactor()

    def refactor(self):
        if self.m:
            self.Binv = np.linalg.inv(self.A[:, self.basic])
            nb = ~self.is_basic
            rhs = self.b - self.A[:, nb] @ self.x[nb]
            self.x[self.basic] = self.Binv @ rhs
        else:
            self.Binv = np.zeros((0, 0))

    def basis(self) -> Basis:
        nb = np.flatnonzero(~self.is_basic)
        at_upper = frozenset(
            int(j) for j in nb
            if np.isfinite(self.upper[j]) and self.x[j] == self.upper[j] and self.lower[j] != self.upper[j]
        )
        return Basis(tuple(int(j) for j in self.basic), at_upper)

    # -- main loop -----------------------------------------------------------

    def _infeasibility(self):
        xb = self.x[self.basic]
        lo = self.lower[self.basic]
        hi = self.upper[self.basic]
        tol_lo = _PRIMAL_TOL * (1.0 + np.abs(np.where(np.isfinite(lo), lo, 0.0)))
        tol_hi = _PRIMAL_TOL * (1.0 + np.abs(np.where(np.isfinite(hi), hi, 0.0)))
        below = xb < lo - tol_lo
        above = xb > hi + tol_hi
        return below, above

    def run(self, max_iter: int) -> Status:
        degenerate_run = 0
        since_refactor = 0
        total = self.n + self.m
        movable = self.lower != self.upper
        while True:
            if since_refactor >= _REFACTOR_EVERY:
                self.refactor()
                since_refactor = 0
            below, above = self._infeasibility()
            phase1 = bool(below.any() or above.any())
            if phase1:
                cb = np.where(below, -1.0, np.where(above, 1.0, 0.0))
                cost = np.zeros(total)
                dual_tol = _DUAL_TOL
            else:
                cb = self.cost[self.basic]
                cost = self.cost
                dual_tol = self.dual_tol
            d = cost - (cb @ self.Binv) @ self.A if self.m else cost.copy()

            x = self.x
            candidates = ~self.is_basic & movable
            can_inc = candidates & (d < -dual_tol) & (x < self.upper)
            can_dec = candidates & (d > dual_tol) & (x > self.lower)
            eligible = can_inc | can_dec
            if not eligible.any():
                return Status.INFEASIBLE if phase1 else Status.OPTIMAL

            bland = degenerate_run >= _DEGENERATE_SWITCH
            if bland:
                j = int(np.argmax(eligible))
            else:
                j = int(np.argmax(np.where(eligible, np.abs(d), -1.0)))
            direction = 1.0 if can_inc[j] else -1.0

            alpha = self.Binv @ self.A[:, j] if self.m else np.zeros(0)
            rate = -direction * alpha  # change of each basic value per unit step
            xb = x[self.basic]
            lo = self.lower[self.basic]
            hi = self.upper[self.basic]
            pivotable = np.abs(alpha) > PIVOT_TOL
            # an infeasible basic blocks where it regains feasibility
            t_dec = np.where(above, hi, np.where(below, np.nan, lo))
            t_inc = np.where(below, lo, np.where(above, np.nan, hi))
            target = np.where(rate < 0, t_dec, t_inc)
            valid = pivotable & np.isfinite(target)
            with np.errstate(invalid="ignore", divide="ignore"):
                steps = np.where(valid, np.maximum((target - xb) / rate, 0.0), np.inf)

            flip = self.upper[j] - self.lower[j]
            theta = float(steps.min()) if steps.size else np.inf
            leave = -1
            if np.isfinite(theta):
                ties = steps <= theta + 1e-12 * (1.0 + theta)
                if flip <= theta + 1e-12 * (1.0 + theta):
                    theta = flip
                elif bland:
                    cand = np.flatnonzero(ties)
                    leave = int(cand[np.argmin(self.basic[cand])])
                else:
                    leave = int(np.argmax(np.where(ties, np.abs(alpha), -1.0)))
            elif np.isfinite(flip):
                theta = flip
            else:
                if phase1:
                    raise RuntimeError("simplex: unbounded phase-1 ray")
                return Status.UNBOUNDED

            self.iterations += 1
            since_refactor += 1
            degenerate_run = degenerate_run + 1 if theta <= _PRIMAL_TOL else 0

            self.x[self.basic] = xb + rate * theta
            if leave < 0:
                self.x[j] = self.upper[j] if direction > 0 else self.lower[j]
            else:
                out = self.basic[leave]
                self.x[j] = x[j] + direction * theta
                self.x[out] = target[leave]
                self.is_basic[out] = False
                self.is_basic[j] = True
                self.basic[leave] = j
                piv_row = self.Binv[leave] / alpha[leave]
                self.Binv -= np.outer(alpha, piv_row)
                self.Binv[leave] = piv_row
            if self.iterations >= max_iter:
                raise RuntimeError(f"simplex: iteration limit {max_iter} reached")


def solve_lp(p: LinearProgram, warm_start: Optional[Basis] = None,
             max_iter: Optional[int] = None) -> LpSolution:
    """Minimize ``p``; returns an optimal vertex or an Infeasible/Unbounded status.

    Deterministic: identical programs (and warm starts) give identical results.
    """
    p.validate()
    s = _Simplex(p)
    s.start(warm_start)
    if max_iter is None:
        max_iter = 200 * (s.n + s.m) + 1000
    status = s.run(max_iter)
    if status is Status.OPTIMAL:
        s.refactor()
        values = s.x[: s.n].copy()
        return LpSolution(status, p.objective(values), values, s.iterations, s.basis())
    nan = np.full(s.n, np.nan)
    value = np.inf if status is Status.INFEASIBLE else -np.inf
    return LpSolution(status, value, nan, s.iterations, None)
