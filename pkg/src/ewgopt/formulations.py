"""Scenario -> LinearProgram builders for the water, gas and joint problems.

Storage levels are not LP variables.  They are prefix sums of the flows::

    S(t) = S(0) + T * sum_{k<=t} (inflow(k) - outflow(k))

so the balance recurrences hold exactly and only the storage bounds and the
cyclic condition S(N) = S(0) appear as rows.  The pipe O&M term prices
pressure, which is linear in linepack: p_p = S_p * p_ref / S_ref.

Integrality of the gas deliveries m(t) is imposed through cumulative
deliveries M(t) = m(1) + ... + m(t), which are the integer-marked variables;
m(t) = M(t) - M(t-1) is then integral too.  The tank constraints are bounds
on exactly these prefix sums, so branching on M(t) splits on tank levels
instead of single deliveries and keeps the search tree small.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linprog import EQ, GE, LE, LinearProgram
from .model import DispatchSchedule, PowerParams, Scenario


class InfeasibleModel(RuntimeError):
    """No feasible schedule exists for ``subsystem``."""

    def __init__(self, subsystem: str, message: str):
        self.subsystem = subsystem
        super().__init__(f"{subsystem}: {message}")


class InfeasibleByConstruction(InfeasibleModel):
    """Infeasibility detected from the data, before any solve."""


@dataclass(frozen=True)
class VariableLayout:
    """Index ranges of each variable group inside the LP vector."""

    n_vars: int
    n_steps: int
    water_flow: Optional[slice] = None
    gas_flow: Optional[slice] = None
    transport: Optional[slice] = None
    cumulative_transport: Optional[slice] = None
    weights: Optional[slice] = None  # lambda(t, n) stored row-major by t
    n_breakpoints: int = 0

    def groups(self):
        return {k: getattr(self, k) for k in ("water_flow", "gas_flow", "transport",
                                                  "cumulative_transport", "weights")
                if getattr(self, k) is not None}

    def weight_matrix(self, values) -> np.ndarray:
        """lambda values reshaped to (n_steps, n_breakpoints)."""
        return np.asarray(values)[self.weights].reshape(self.n_steps, self.n_breakpoints)


@dataclass(frozen=True, eq=False)
class PiecewiseCurve:
    breakpoints: np.ndarray  # kW
    values: np.ndarray  # $ per hour

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def __call__(self, power):
        """Secant interpolation, i.e. the minimum-cost lambda combination."""
        return np.interp(power, self.breakpoints, self.values)


def linearize_quadratic(power: PowerParams) -> PiecewiseCurve:
    """Equally spaced breakpoints on [0, gen_cap] with b_n = c1*a^2 + c2*a + c3."""
    if not power.c1 > 0:
        raise ValueError("piecewise scheme needs c1 > 0")
    if power.n_breakpoints < 2:
        raise ValueError("need at least 2 breakpoints")
    a = np.linspace(0.0, power.gen_cap, power.n_breakpoints)
    b = power.c1 * a**2 + power.c2 * a + power.c3
    a.flags.writeable = False
    b.flags.writeable = False
    return PiecewiseCurve(a, b)


def secant_error_bound(power: PowerParams) -> float:
    """Worst-case secant overestimate c1 * width^2 / 4 of one segment."""
    width = power.gen_cap / (power.n_breakpoints - 1)
    return power.c1 * width**2 / 4.0


class _Rows:
    def __init__(self, n_vars: int):
        self.n = n_vars
        self.A: list = []
        self.rel: list = []
        self.b: list = []

    def add(self, coef, rel, rhs):
        self.A.append(coef)
        self.rel.append(rel)
        self.b.append(float(rhs))

    def program(self, c, offset, lower, upper, integer, names):
        A = np.array(self.A).reshape(len(self.A), self.n)
        return LinearProgram(c, A, tuple(self.rel), self.b, lower, upper, integer, offset, tuple(names))


def _add_storage(rows: _Rows, c: np.ndarray, n: int, T: float, terms, load, init, lo, hi, om_rate):
    """Bounds, cyclicity and O&M cost of one storage.

    ``terms`` is a list of (variable slice, coefficient) whose weighted sum is
    the per-step net inflow excluding ``load``.  Returns the constant part of
    the O&M cost.
    """
    load = np.asarray(load, dtype=float)
    cum_load = np.cumsum(load) * T
    for t in range(n):
        coef = np.zeros(rows.n)
        for sl, k in terms:
            coef[sl.start: sl.start + t + 1] += k * T
        shift = init - cum_load[t]  # S(t) = coef @ x + shift
        if t == n - 1:
            rows.add(coef, EQ, -shift + init)
        else:
            rows.add(coef, LE, hi - shift)
            rows.add(coef.copy(), GE, lo - shift)
    # sum_t S(t) = N*S0 + T * sum_k (N-k+1)(inflow_k - load_k), k = 1..N
    weight = (n - np.arange(n)) * T
    for sl, k in terms:
        c[sl] += om_rate * k * weight
    return om_rate * (n * init - float(weight @ load))


def _water_rows(s: Scenario, rows: _Rows, c: np.ndarray, flow: slice) -> float:
    w = s.water
    return _add_storage(rows, c, s.n_steps, s.step_hours, [(flow, 1.0)], s.loads.water,
                        w.storage_init, w.storage_min, w.storage_max, w.r_w)


def _gas_rows(s: Scenario, rows: _Rows, c: np.ndarray, flow: slice, units: slice,
              cumulative: slice) -> float:
    g = s.gas
    n, T = s.n_steps, s.step_hours
    for t in range(n):
        coef = np.zeros(rows.n)
        coef[cumulative.start + t] = 1.0
        coef[units.start: units.start + t + 1] = -1.0
        rows.add(coef, EQ, 0.0)
    const = _add_storage(rows, c, n, T, [(units, g.unit_volume), (flow, -1.0)], np.zeros(n),
                         g.tank_init, g.tank_min, g.tank_max, g.r_g)
    const += _add_storage(rows, c, n, T, [(flow, 1.0)], s.loads.gas,
                          g.pipe_init, g.pipe_min, g.pipe_max, g.r_p * g.pressure_per_volume)
    c[units] += g.r_s
    return const


def _check_water(s: Scenario):
    n, T = s.n_steps, s.step_hours
    if sum(s.loads.water) * T > n * s.water.flow_max * T * (1 + 1e-12):
        raise InfeasibleByConstruction("water", "total load exceeds n_steps * flow_max")


def _check_gas(s: Scenario):
    g = s.gas
    n, T = s.n_steps, s.step_hours
    demand = sum(s.loads.gas) * T
    if demand > n * g.flow_max * T * (1 + 1e-12):
        raise InfeasibleByConstruction("gas", "total load exceeds n_steps * flow_max")
    if demand > n * g.transport_max_units * g.unit_volume * T * (1 + 1e-12):
        raise InfeasibleByConstruction("gas", "transport cap below horizon demand")


def build_water_lp(s: Scenario, rate: float):
    """Water pumping LP priced at a flat ``rate`` $/kWh."""
    _check_water(s)
    n, T = s.n_steps, s.step_hours
    layout = VariableLayout(n_vars=n, n_steps=n, water_flow=slice(0, n))
    rows = _Rows(n)
    c = np.full(n, rate * s.water.h_w * T)
    offset = _water_rows(s, rows, c, layout.water_flow)
    names = [f"Qw{t + 1}" for t in range(n)]
    lp = rows.program(c, offset, np.zeros(n), np.full(n, s.water.flow_max), np.zeros(n, bool), names)
    return lp, layout


def build_gas_milp(s: Scenario, rate: float):
    """Gas MILP: continuous flows Q_g and integer deliveries m, priced at ``rate``."""
    _check_gas(s)
    g = s.gas
    n, T = s.n_steps, s.step_hours
    layout = VariableLayout(n_vars=3 * n, n_steps=n, gas_flow=slice(0, n), transport=slice(n, 2 * n),
                            cumulative_transport=slice(2 * n, 3 * n))
    rows = _Rows(3 * n)
    c = np.zeros(3 * n)
    c[layout.gas_flow] = rate * g.h_g * T
    offset = _gas_rows(s, rows, c, layout.gas_flow, layout.transport, layout.cumulative_transport)
    lower = np.zeros(3 * n)
    upper = np.concatenate([np.full(n, g.flow_max)] + _transport_upper(s))
    integer = np.zeros(3 * n, bool)
    integer[layout.cumulative_transport] = True
    names = ([f"Qg{t + 1}" for t in range(n)] + [f"m{t + 1}" for t in range(n)]
             + [f"M{t + 1}" for t in range(n)])
    return rows.program(c, offset, lower, upper, integer, names), layout


def _transport_upper(s: Scenario):
    cap = float(s.gas.transport_max_units)
    n = s.n_steps
    return [np.full(n, cap), cap * np.arange(1, n + 1)]


def build_joint_milp(s: Scenario):
    """Water + gas + piecewise generation cost in one MILP.

    Each step's demand P_e(t) = h_w*Q_w + h_g*Q_g + L_r is written as a convex
    combination of the breakpoints.  No adjacency (SOS2) rows are needed: the
    cost curve is convex, so the minimum uses two neighbouring breakpoints.
    """
    _check_water(s)
    _check_gas(s)
    if max(s.loads.residential_electric) > s.power.gen_cap:
        raise InfeasibleByConstruction("power", "residential load alone exceeds gen_cap")
    curve = linearize_quadratic(s.power)
    n, T = s.n_steps, s.step_hours
    ns = s.power.n_breakpoints
    n_vars = 4 * n + n * ns
    layout = VariableLayout(
        n_vars=n_vars, n_steps=n,
        water_flow=slice(0, n), gas_flow=slice(n, 2 * n), transport=slice(2 * n, 3 * n),
        cumulative_transport=slice(3 * n, 4 * n), weights=slice(4 * n, n_vars), n_breakpoints=ns,
    )
    rows = _Rows(n_vars)
    c = np.zeros(n_vars)
    offset = _water_rows(s, rows, c, layout.water_flow)
    offset += _gas_rows(s, rows, c, layout.gas_flow, layout.transport, layout.cumulative_transport)
    w0 = layout.weights.start
    for t in range(n):
        cols = slice(w0 + t * ns, w0 + (t + 1) * ns)
        c[cols] = curve.values * T
        coef = np.zeros(n_vars)
        coef[cols] = 1.0
        rows.add(coef, EQ, 1.0)
        coef = np.zeros(n_vars)
        coef[cols] = curve.breakpoints
        coef[layout.water_flow.start + t] = -s.water.h_w
        coef[layout.gas_flow.start + t] = -s.gas.h_g
        rows.add(coef, EQ, s.loads.residential_electric[t])

    lower = np.zeros(n_vars)
    upper = np.concatenate(
        [np.full(n, s.water.flow_max), np.full(n, s.gas.flow_max)]
        + _transport_upper(s) + [np.full(n * ns, np.inf)]
    )
    integer = np.zeros(n_vars, bool)
    integer[layout.cumulative_transport] = True
    names = ([f"Qw{t + 1}" for t in range(n)] + [f"Qg{t + 1}" for t in range(n)]
             + [f"m{t + 1}" for t in range(n)] + [f"M{t + 1}" for t in range(n)]
             + [f"lam{t + 1}_{k + 1}" for t in range(n) for k in range(ns)])
    return rows.program(c, offset, lower, upper, integer, names), layout


# ---------------------------------------------------------------------------
# schedules


def water_schedule(s: Scenario, flows) -> DispatchSchedule:
    flows = np.asarray(flows, dtype=float)
    T = s.step_hours
    w = s.water
    levels = w.storage_init + np.cumsum(flows - np.asarray(s.loads.water)) * T
    return DispatchSchedule(
        flows=flows,
        storages={"water": levels},
        initial_storages={"water": w.storage_init},
        electric_load=w.h_w * flows,
    )


def gas_schedule(s: Scenario, flows, units) -> DispatchSchedule:
    flows = np.asarray(flows, dtype=float)
    units = np.round(np.asarray(units, dtype=float))
    T = s.step_hours
    g = s.gas
    tank = g.tank_init + np.cumsum(units * g.unit_volume - flows) * T
    pipe = g.pipe_init + np.cumsum(flows - np.asarray(s.loads.gas)) * T
    return DispatchSchedule(
        flows=flows,
        storages={"tank": tank, "pipe": pipe},
        initial_storages={"tank": g.tank_init, "pipe": g.pipe_init},
        electric_load=g.h_g * flows,
        pressures=pipe * g.pressure_per_volume,
        transport_units=units,
    )


def aggregate_power(s: Scenario, water: DispatchSchedule, gas: DispatchSchedule) -> np.ndarray:
    """Total demand P_e(t) = P_w(t) + P_g(t) + L_r(t)."""
    return water.electric_load + gas.electric_load + np.asarray(s.loads.residential_electric)


def extract_schedules(s: Scenario, layout: VariableLayout, values):
    """Rebuild water/gas schedules and total power from a joint solution vector."""
    values = np.asarray(values, dtype=float)
    water = water_schedule(s, values[layout.water_flow])
    gas = gas_schedule(s, values[layout.gas_flow], values[layout.transport])
    return water, gas, aggregate_power(s, water, gas)


def weights_adjacent(weights: np.ndarray, tol: float = 1e-6) -> bool:
    """True if every row of ``weights`` is supported on at most two neighbouring breakpoints."""
    for row in np.atleast_2d(weights):
        support = np.flatnonzero(row > tol)
        if support.size > 2 or (support.size == 2 and support[1] - support[0] != 1):
            return False
    return True
