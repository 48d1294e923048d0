"""Case 1 (independent) and Case 2 (joint) pipelines and their cost comparison."""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .formulations import (
    InfeasibleModel,
    aggregate_power,
    build_gas_milp,
    build_joint_milp,
    build_water_lp,
    extract_schedules,
    gas_schedule,
    linearize_quadratic,
    water_schedule,
)
from .linprog import Status, solve_lp
from .milp import solve_milp
from .model import DispatchSchedule, Scenario

log = logging.getLogger(__name__)

COST_ROWS = (
    ("water_om", "Water O&M cost (A1)"),
    ("gas_om", "Gas O&M cost (A2)"),
    ("water_electric", "Water electric cost (B1)"),
    ("gas_electric", "Gas electric cost (B2)"),
    ("residential_electric", "Residual load cost (B3)"),
    ("total", "Total EWG cost"),
)


@dataclass(frozen=True)
class CostReport:
    water_om: float
    gas_om: float
    water_electric: float
    gas_electric: float
    residential_electric: float
    final_rate: float

    @property
    def om_total(self) -> float:
        return self.water_om + self.gas_om

    @property
    def electric_total(self) -> float:
        return self.water_electric + self.gas_electric + self.residential_electric

    @property
    def total(self) -> float:
        return (self.water_om + self.gas_om + self.water_electric
                + self.gas_electric + self.residential_electric)

    def as_dict(self) -> dict:
        out = {key: getattr(self, key) for key, _ in COST_ROWS}
        out["final_rate"] = self.final_rate
        return out


@dataclass(frozen=True, eq=False)
class CaseResult:
    name: str
    water: DispatchSchedule
    gas: DispatchSchedule
    total_power: np.ndarray
    electric_cost_total: float
    final_rate: float
    report: CostReport
    objectives: dict = field(default_factory=dict)
    nodes_explored: int = 0
    surrogate_cost: Optional[float] = None  # piecewise generation cost, Case 2 only
    weights: Optional[np.ndarray] = None
    step_hours: float = 1.0

    @property
    def energy(self) -> float:
        """Total delivered energy in kWh."""
        return float(np.sum(self.total_power)) * self.step_hours


@dataclass(frozen=True)
class PeakMetrics:
    peak: float
    valley: float
    peak_to_valley: float


@dataclass(frozen=True)
class Comparison:
    case1: CostReport
    case2: CostReport
    change: dict  # fractional (b - a) / a per row, plus "final_rate"

    def rows(self):
        for key, label in COST_ROWS:
            yield key, label, getattr(self.case1, key), getattr(self.case2, key), self.change[key]
        yield ("final_rate", "Final electric rate", self.case1.final_rate,
               self.case2.final_rate, self.change["final_rate"])


def generation_cost(s: Scenario, total_power) -> float:
    """Z_e: quadratic generation cost summed over the horizon (c3 once per step)."""
    return float(np.sum(s.power.cost(total_power))) * s.step_hours


def finalized_rate(cost: float, total_power, step_hours: float) -> float:
    """r_e = Z_e / sum(P_e * T)."""
    energy = float(np.sum(total_power)) * step_hours
    return cost / energy if energy > 0 else 0.0


def cost_report(s: Scenario, water: DispatchSchedule, gas: DispatchSchedule,
                total_power, rate: float) -> CostReport:
    T = s.step_hours
    g = s.gas
    water_om = s.water.r_w * float(np.sum(water.storages["water"]))
    gas_om = (g.r_s * float(np.sum(gas.transport_units))
              + g.r_g * float(np.sum(gas.storages["tank"]))
              + g.r_p * float(np.sum(gas.pressures)))
    return CostReport(
        water_om=water_om,
        gas_om=gas_om,
        water_electric=rate * float(np.sum(water.electric_load)) * T,
        gas_electric=rate * float(np.sum(gas.electric_load)) * T,
        residential_electric=rate * float(np.sum(s.loads.residential_electric)) * T,
        final_rate=rate,
    )


def _finish(name, s, water, gas, objectives, nodes, surrogate=None, weights=None) -> CaseResult:
    total_power = aggregate_power(s, water, gas)
    z_e = generation_cost(s, total_power)
    rate = finalized_rate(z_e, total_power, s.step_hours)
    total_power.flags.writeable = False
    log.info("%s: %d nodes, generation cost %.2f, final rate %.4f", name, nodes, z_e, rate)
    return CaseResult(name, water, gas, total_power, z_e, rate,
                      cost_report(s, water, gas, total_power, rate),
                      objectives, nodes, surrogate, weights, s.step_hours)


def run_case1(s: Scenario) -> CaseResult:
    """Independent operation: each subsystem optimizes at the pseudo rate.

    The finalized rate then replaces the pseudo rate in one substitution pass;
    schedules are not re-optimized.
    """
    water_lp, _ = build_water_lp(s, s.pseudo_rate)
    wsol = solve_lp(water_lp)
    if wsol.status is not Status.OPTIMAL:
        raise InfeasibleModel("water", f"LP is {wsol.status.value}")
    gas_lp, glayout = build_gas_milp(s, s.pseudo_rate)
    gsol = solve_milp(gas_lp)
    if gsol.status is not Status.OPTIMAL:
        raise InfeasibleModel("gas", f"MILP is {gsol.status.value}")
    water = water_schedule(s, wsol.values)
    gas = gas_schedule(s, gsol.values[glayout.gas_flow], gsol.values[glayout.transport])
    total = aggregate_power(s, water, gas)
    if np.any(total > s.power.gen_cap * (1 + 1e-9)):
        t = int(np.argmax(total)) + 1
        raise InfeasibleModel("power", f"aggregated load {total.max():.6g} kW exceeds gen_cap at t={t}")
    objectives = {"water": wsol.objective_value, "gas": gsol.objective_value}
    return _finish("case1", s, water, gas, objectives, gsol.nodes_explored)


def run_case2(s: Scenario) -> CaseResult:
    """Joint operation: one MILP with the piecewise generation cost.

    Reported electric cost uses the true quadratic on the realized demand.
    """
    lp, layout = build_joint_milp(s)
    sol = solve_milp(lp)
    if sol.status is not Status.OPTIMAL:
        raise InfeasibleModel("joint", f"MILP is {sol.status.value}")
    water, gas, _ = extract_schedules(s, layout, sol.values)
    weights = layout.weight_matrix(sol.values)
    curve = linearize_quadratic(s.power)
    surrogate = float(np.sum(weights @ curve.values)) * s.step_hours
    return _finish("case2", s, water, gas, {"joint": sol.objective_value}, sol.nodes_explored,
                   surrogate, weights)


def _change(a: float, b: float) -> float:
    if a == 0:
        return 0.0 if b == 0 else float("inf")
    return (b - a) / a


def compare_cases(a: CaseResult, b: CaseResult) -> Comparison:
    return compare_reports(a.report, b.report)


def compare_reports(a: CostReport, b: CostReport) -> Comparison:
    change = {key: _change(getattr(a, key), getattr(b, key)) for key, _ in COST_ROWS}
    change["final_rate"] = _change(a.final_rate, b.final_rate)
    return Comparison(a, b, change)


def peak_metrics(result) -> PeakMetrics:
    """Peak, valley and peak-to-valley ratio of the total power curve.

    Accepts a CaseResult or a plain sequence of kW values.
    """
    power = np.asarray(getattr(result, "total_power", result), dtype=float)
    peak = float(power.max())
    valley = float(power.min())
    ratio = peak / valley if valley > 0 else float("inf")
    return PeakMetrics(peak, valley, ratio)


# ---------------------------------------------------------------------------
# serialization


def _money(x: float) -> str:
    return f"${x:,.2f}" if x >= 0 else f"-${-x:,.2f}"


def _percent(x: float) -> str:
    return f"{100 * x:+.1f}%"


def format_table(cmp: Comparison) -> str:
    """Aligned text in the layout of the cost-breakdown table."""
    header = f"{'':<26}{'Case1':>16}{'Case2':>16}{'Rate-of-change':>16}"
    lines = [header]
    for key, label, a, b, ch in cmp.rows():
        if key == "final_rate":
            sa, sb = f"${a:.3f}", f"${b:.3f}"
        else:
            sa, sb = _money(a), _money(b)
        lines.append(f"{label:<26}{sa:>16}{sb:>16}{_percent(ch):>16}")
    return "\n".join(lines) + "\n"


def _case_summary(s: Scenario, r: CaseResult) -> dict:
    costs = {key: round(getattr(r.report, key), 2) for key, _ in COST_ROWS}
    pm = peak_metrics(r)
    out = {
        "costs": costs,
        "final_rate": round(r.final_rate, 3),
        "electric_cost_total": round(r.electric_cost_total, 2),
        "energy_kwh": round(r.energy, 2),
        "objective": {k: round(v, 6) for k, v in sorted(r.objectives.items())},
        "nodes_explored": r.nodes_explored,
        "peak_kw": round(pm.peak, 3),
        "valley_kw": round(pm.valley, 3),
        "peak_to_valley": round(pm.peak_to_valley, 6),
        "mean_storage_m3": {
            "water": round(r.water.mean_storage("water"), 3),
            "tank": round(r.gas.mean_storage("tank"), 3),
            "pipe": round(r.gas.mean_storage("pipe"), 3),
        },
    }
    if r.surrogate_cost is not None:
        out["surrogate_electric_cost"] = round(r.surrogate_cost, 6)
    return out


def report_json(s: Scenario, case1: Optional[CaseResult] = None,
                case2: Optional[CaseResult] = None) -> str:
    doc = {
        "scenario": {
            "n_steps": s.n_steps,
            "step_hours": s.step_hours,
            "pseudo_rate": s.pseudo_rate,
            "n_breakpoints": s.power.n_breakpoints,
        },
        "cases": {},
    }
    for r in (case1, case2):
        if r is not None:
            doc["cases"][r.name] = _case_summary(s, r)
    if case1 is not None and case2 is not None:
        cmp = compare_cases(case1, case2)
        doc["rate_of_change_percent"] = {k: round(100 * v, 3) for k, v in cmp.change.items()}
    return json.dumps(doc, indent=2) + "\n"


def report_text(s: Scenario, case1: Optional[CaseResult] = None,
                case2: Optional[CaseResult] = None) -> str:
    if case1 is not None and case2 is not None:
        cmp = compare_cases(case1, case2)
        out = format_table(cmp)
        m1, m2 = peak_metrics(case1), peak_metrics(case2)
        out += (f"\n{'Peak-to-valley ratio':<26}{m1.peak_to_valley:>16.3f}{m2.peak_to_valley:>16.3f}"
                f"{_percent(_change(m1.peak_to_valley, m2.peak_to_valley)):>16}\n")
        return out
    r = case1 if case1 is not None else case2
    lines = [f"{r.name}"]
    for key, label in COST_ROWS:
        lines.append(f"{label:<26}{_money(getattr(r.report, key)):>16}")
    lines.append(f"{'Final electric rate':<26}{'$' + format(r.final_rate, '.3f'):>16}")
    pm = peak_metrics(r)
    lines.append(f"{'Peak-to-valley ratio':<26}{pm.peak_to_valley:>16.3f}")
    return "\n".join(lines) + "\n"


def schedule_csv(s: Scenario, r: CaseResult) -> str:
    """Per-step series: t, P_e, P_w, P_g, S_w, S_g, S_p, p_p, m."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "P_e", "P_w", "P_g", "S_w", "S_g", "S_p", "p_p", "m"])
    cols = (r.total_power, r.water.electric_load, r.gas.electric_load,
            r.water.storages["water"], r.gas.storages["tank"], r.gas.storages["pipe"],
            r.gas.pressures)
    for t in range(s.n_steps):
        row = [str(t + 1)] + [f"{c[t]:.4f}" for c in cols] + [str(int(r.gas.transport_units[t]))]
        writer.writerow(row)
    return buf.getvalue()
