"""Domain types and scenario files for the electricity-water-gas (EWG) model.

All quantities use the same units throughout the package:

* flows in m3/h, volumes in m3, pressures in Pa
* electric power in kW, energy in kWh, money in $
* one time step lasts ``Horizon.step_hours`` hours
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, fields
from importlib import resources
from typing import Optional

import numpy as np

DEFAULT_PSEUDO_RATE = 0.25  # $/kWh
DEFAULT_UNIT_VOLUME = 500.0  # m3 per transported unit
DEFAULT_BREAKPOINTS = 11

_FLOAT_TOL = 1e-9


class ScenarioParseError(ValueError):
    """Raised when a scenario file cannot be parsed."""


class ScenarioValidationError(ValueError):
    """Raised when a parsed scenario fails :func:`validate_scenario`."""

    def __init__(self, violations):
        self.violations = tuple(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class Horizon:
    n_steps: int
    step_hours: float = 1.0


@dataclass(frozen=True)
class LoadProfiles:
    """Hourly water (m3/h), gas (m3/h) and residential electric (kW) loads."""

    water: tuple
    gas: tuple
    residential_electric: tuple

    def __post_init__(self):
        for name in ("water", "gas", "residential_electric"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))


@dataclass(frozen=True)
class WaterParams:
    h_w: float
    r_w: float
    storage_init: float
    storage_min: float
    storage_max: float
    flow_max: float


@dataclass(frozen=True)
class GasParams:
    h_g: float
    r_g: float
    r_p: float
    r_s: float
    unit_volume: float
    pressure_ref: float
    pipe_storage_ref: float
    tank_init: float
    tank_min: float
    tank_max: float
    pipe_init: float
    pipe_min: float
    pipe_max: float
    flow_max: float
    transport_max_units: int

    @property
    def pressure_per_volume(self) -> float:
        """Pa of pipe pressure per m3 of linepack."""
        return self.pressure_ref / self.pipe_storage_ref


@dataclass(frozen=True)
class PowerParams:
    c1: float
    c2: float
    c3: float
    gen_cap: float
    n_breakpoints: int = DEFAULT_BREAKPOINTS

    def cost(self, power):
        """Quadratic generation cost per hour at ``power`` kW (scalar or array)."""
        p = np.asarray(power, dtype=float)
        return self.c1 * p * p + self.c2 * p + self.c3


@dataclass(frozen=True)
class Scenario:
    horizon: Horizon
    loads: LoadProfiles
    water: WaterParams
    gas: GasParams
    power: PowerParams
    pseudo_rate: float = DEFAULT_PSEUDO_RATE

    @property
    def n_steps(self) -> int:
        return self.horizon.n_steps

    @property
    def step_hours(self) -> float:
        return self.horizon.step_hours


def _readonly(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class DispatchSchedule:
    """Per-step operation of one subsystem.

    ``storages`` maps a storage name (``"water"``, or ``"tank"`` and ``"pipe"``)
    to its end-of-step levels S(1..N); ``initial_storages`` holds S(0).
    """

    flows: np.ndarray
    storages: dict
    initial_storages: dict
    electric_load: np.ndarray
    pressures: Optional[np.ndarray] = None
    transport_units: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "flows", _readonly(self.flows))
        object.__setattr__(self, "electric_load", _readonly(self.electric_load))
        object.__setattr__(self, "storages", {k: _readonly(v) for k, v in self.storages.items()})
        object.__setattr__(
            self, "initial_storages", {k: float(v) for k, v in self.initial_storages.items()}
        )
        if self.pressures is not None:
            object.__setattr__(self, "pressures", _readonly(self.pressures))
        if self.transport_units is not None:
            units = np.array(self.transport_units, dtype=np.int64)
            units.flags.writeable = False
            object.__setattr__(self, "transport_units", units)

    def mean_storage(self, name: str) -> float:
        return float(np.mean(self.storages[name]))


def balance_residual(initial, levels, inflow, outflow, step_hours) -> float:
    """Largest violation of S(t) - S(t-1) - (inflow(t) - outflow(t)) * T = 0.

    The result is relative to the storage scale ``1 + max |S|``.
    """
    levels = np.asarray(levels, dtype=float)
    prev = np.concatenate(([initial], levels[:-1]))
    res = levels - prev - (np.asarray(inflow, float) - np.asarray(outflow, float)) * step_hours
    scale = 1.0 + max(abs(initial), float(np.max(np.abs(levels))) if levels.size else 0.0)
    return float(np.max(np.abs(res))) / scale if res.size else 0.0


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def _bounds_ordered(lo, init, hi) -> bool:
    return 0 <= lo <= init <= hi


def validate_scenario(s: Scenario) -> ValidationResult:
    """Structural and necessary-feasibility checks; returns diagnostics as data."""
    v = []
    n = s.horizon.n_steps
    T = s.horizon.step_hours
    if n < 1:
        v.append("horizon: n_steps must be >= 1")
    if not T > 0:
        v.append("horizon: step_hours must be > 0")

    loads = s.loads
    for name in ("water", "gas", "residential_electric"):
        seq = getattr(loads, name)
        if len(seq) != n:
            v.append(f"length mismatch: {name} load has {len(seq)} values, n_steps is {n}")
        if any(not math.isfinite(x) or x < 0 for x in seq):
            v.append(f"loads: {name} values must be finite and >= 0")

    w = s.water
    if not _bounds_ordered(w.storage_min, w.storage_init, w.storage_max):
        v.append("water: bound order requires 0 <= storage_min <= storage_init <= storage_max")
    if not w.flow_max > 0:
        v.append("water: flow_max must be > 0")
    if not w.h_w > 0:
        v.append("water: h_w must be > 0")
    if w.r_w < 0:
        v.append("water: r_w must be >= 0")

    g = s.gas
    if not _bounds_ordered(g.tank_min, g.tank_init, g.tank_max):
        v.append("gas: bound order requires 0 <= tank_min <= tank_init <= tank_max")
    if not _bounds_ordered(g.pipe_min, g.pipe_init, g.pipe_max):
        v.append("gas: bound order requires 0 <= pipe_min <= pipe_init <= pipe_max")
    if not g.flow_max > 0:
        v.append("gas: flow_max must be > 0")
    if not g.unit_volume > 0:
        v.append("gas: unit_volume must be > 0")
    if not g.pressure_ref > 0:
        v.append("gas: pressure_ref must be > 0")
    if not g.pipe_storage_ref > 0:
        v.append("gas: pipe_storage_ref must be > 0")
    if g.h_g < 0:
        v.append("gas: h_g must be >= 0")
    if min(g.r_g, g.r_p, g.r_s) < 0:
        v.append("gas: r_g, r_p, r_s must be >= 0")
    if g.transport_max_units < 0 or int(g.transport_max_units) != g.transport_max_units:
        v.append("gas: transport_max_units must be a non-negative integer")

    p = s.power
    if not p.c1 > 0:
        v.append("power: c1 must be > 0")
    if not p.gen_cap > 0:
        v.append("power: gen_cap must be > 0")
    if p.n_breakpoints < 2:
        v.append("power: n_breakpoints must be >= 2")
    if s.pseudo_rate < 0:
        v.append("power: pseudo_rate must be >= 0")

    if any(msg.startswith(("length mismatch", "horizon:", "loads:")) for msg in v):
        return ValidationResult(tuple(v))

    # necessary feasibility over the whole horizon
    water_demand = sum(loads.water) * T
    if water_demand > n * w.flow_max * T * (1 + _FLOAT_TOL):
        v.append("water horizon infeasible: total load exceeds n_steps * flow_max")
    gas_demand = sum(loads.gas) * T
    if gas_demand > n * g.flow_max * T * (1 + _FLOAT_TOL):
        v.append("gas horizon infeasible: total load exceeds n_steps * flow_max")
    if g.unit_volume > 0 and gas_demand > 0 and g.transport_max_units >= 0:
        needed = gas_demand / (g.unit_volume * T)
        if g.transport_max_units * n < needed * (1 - _FLOAT_TOL):
            v.append("gas transport cap insufficient: transport_max_units too small for horizon demand")
        # cyclic tank and pipe force sum(m) * V_g * T == sum(L_g) * T
        if abs(needed - round(needed)) > 1e-6 * max(1.0, needed):
            v.append(
                "gas cyclic infeasible: total gas load per horizon is not a whole number of transport units"
            )
    if max(loads.residential_electric, default=0.0) > p.gen_cap * (1 + _FLOAT_TOL):
        v.append("power infeasible: residential load alone exceeds gen_cap")
    return ValidationResult(tuple(v))


# ---------------------------------------------------------------------------
# scenario files
#
# [section] headers, ``key = value`` lines, ``#`` comments.  The [loads]
# section holds one CSV row per time step: ``t,L_w,L_g,L_r``.

_SECTIONS = ("horizon", "water", "gas", "power", "loads")

_WATER_KEYS = ("h_w", "r_w", "storage_init", "storage_min", "storage_max", "flow_max")
_GAS_KEYS = (
    "h_g", "r_g", "r_p", "r_s", "unit_volume", "pressure_ref", "pipe_storage_ref",
    "tank_init", "tank_min", "tank_max", "pipe_init", "pipe_min", "pipe_max",
    "flow_max", "transport_max_units",
)
_POWER_KEYS = ("c1", "c2", "c3", "gen_cap", "n_breakpoints", "pseudo_rate")

_OPTIONAL = {
    "horizon": {"step_hours": 1.0},
    "water": {"storage_min": 0.0},
    "gas": {"tank_min": 0.0, "pipe_min": 0.0, "unit_volume": DEFAULT_UNIT_VOLUME},
    "power": {"c3": 0.0, "n_breakpoints": DEFAULT_BREAKPOINTS, "pseudo_rate": DEFAULT_PSEUDO_RATE},
}


def default_transport_cap(peak_gas_load: float, step_hours: float, unit_volume: float) -> int:
    """ceil(2 * peak gas load * T / V_g)."""
    return int(math.ceil(2.0 * peak_gas_load * step_hours / unit_volume - 1e-12))


def _split_sections(text: str, source: str) -> dict:
    sections: dict = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
            if current not in _SECTIONS:
                raise ScenarioParseError(f"{source}:{lineno}: unknown section [{current}]")
            if current in sections:
                raise ScenarioParseError(f"{source}:{lineno}: duplicate section [{current}]")
            sections[current] = []
            continue
        if current is None:
            raise ScenarioParseError(f"{source}:{lineno}: content before first section")
        sections[current].append((lineno, line))
    return sections


def _key_values(lines, section: str, source: str) -> dict:
    out = {}
    for lineno, line in lines:
        if "=" not in line:
            raise ScenarioParseError(f"{source}:{lineno}: expected 'key = value' in [{section}]")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in out:
            raise ScenarioParseError(f"{source}:{lineno}: duplicate key '{key}' in [{section}]")
        out[key] = (lineno, value)
    return out


def _number(entries: dict, key: str, section: str, source: str, kind=float):
    if key not in entries:
        if key in _OPTIONAL.get(section, {}):
            return kind(_OPTIONAL[section][key])
        raise ScenarioParseError(f"{source}: [{section}] missing required key '{key}'")
    lineno, text = entries[key]
    try:
        value = float(text)
    except ValueError:
        raise ScenarioParseError(f"{source}:{lineno}: [{section}] {key} is not a number: {text!r}")
    if kind is int:
        if value != int(value):
            raise ScenarioParseError(f"{source}:{lineno}: [{section}] {key} must be an integer")
        return int(value)
    return value


def _parse_loads(lines, source: str):
    rows = list(csv.reader(line for _, line in lines))
    linenos = [lineno for lineno, _ in lines]
    if rows and rows[0] and rows[0][0].strip().lower() == "t":
        rows, linenos = rows[1:], linenos[1:]
    water, gas, res = [], [], []
    for lineno, row in zip(linenos, rows):
        if len(row) != 4:
            raise ScenarioParseError(f"{source}:{lineno}: [loads] row needs 4 fields t,L_w,L_g,L_r")
        try:
            t, lw, lg, lr = int(row[0]), float(row[1]), float(row[2]), float(row[3])
        except ValueError:
            raise ScenarioParseError(f"{source}:{lineno}: [loads] malformed row {','.join(row)!r}")
        if t != len(water) + 1:
            raise ScenarioParseError(f"{source}:{lineno}: [loads] expected t={len(water) + 1}, got {t}")
        water.append(lw)
        gas.append(lg)
        res.append(lr)
    return LoadProfiles(water=tuple(water), gas=tuple(gas), residential_electric=tuple(res))


def parse_scenario(text: str, source: str = "<string>", validate: bool = True) -> Scenario:
    sections = _split_sections(text, source)
    for name in _SECTIONS:
        if name not in sections:
            raise ScenarioParseError(f"{source}: missing section [{name}]")

    loads = _parse_loads(sections["loads"], source)
    hz = _key_values(sections["horizon"], "horizon", source)
    n_steps = (
        _number(hz, "n_steps", "horizon", source, int) if "n_steps" in hz else len(loads.water)
    )
    horizon = Horizon(n_steps=n_steps, step_hours=_number(hz, "step_hours", "horizon", source))

    wv = _key_values(sections["water"], "water", source)
    water = WaterParams(**{k: _number(wv, k, "water", source) for k in _WATER_KEYS})

    gv = _key_values(sections["gas"], "gas", source)
    gas_kwargs = {}
    for k in _GAS_KEYS:
        if k == "transport_max_units":
            continue
        gas_kwargs[k] = _number(gv, k, "gas", source)
    if "transport_max_units" in gv:
        gas_kwargs["transport_max_units"] = _number(gv, "transport_max_units", "gas", source, int)
    else:
        gas_kwargs["transport_max_units"] = default_transport_cap(
            max(loads.gas, default=0.0), horizon.step_hours, gas_kwargs["unit_volume"]
        )
    gas = GasParams(**gas_kwargs)

    pv = _key_values(sections["power"], "power", source)
    power = PowerParams(
        c1=_number(pv, "c1", "power", source),
        c2=_number(pv, "c2", "power", source),
        c3=_number(pv, "c3", "power", source),
        gen_cap=_number(pv, "gen_cap", "power", source),
        n_breakpoints=_number(pv, "n_breakpoints", "power", source, int),
    )
    pseudo_rate = _number(pv, "pseudo_rate", "power", source)

    for name, known in (("horizon", ("n_steps", "step_hours")), ("water", _WATER_KEYS),
                        ("gas", _GAS_KEYS), ("power", _POWER_KEYS)):
        entries = {"horizon": hz, "water": wv, "gas": gv, "power": pv}[name]
        unknown = sorted(set(entries) - set(known))
        if unknown:
            raise ScenarioParseError(f"{source}: [{name}] unknown key(s): {', '.join(unknown)}")

    scenario = Scenario(horizon, loads, water, gas, power, pseudo_rate)
    if validate:
        result = validate_scenario(scenario)
        if not result.ok:
            raise ScenarioValidationError(result.violations)
    return scenario


def bundled_scenario_path(name: str) -> str:
    """Filesystem path of a scenario shipped with the package."""
    return str(resources.files("ewgopt").joinpath("data", name))


def scenario_from_file(path, validate: bool = True) -> Scenario:
    path = os.fspath(path)
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_scenario(text, source=path, validate=validate)


def load_bundled(name: str) -> Scenario:
    """Load ``default.scenario``, ``tiny2.scenario`` or ``tiny3.scenario``."""
    if not name.endswith(".scenario"):
        name += ".scenario"
    return scenario_from_file(bundled_scenario_path(name))


def format_scenario(s: Scenario) -> str:
    """Serialize ``s``; floats use ``repr`` so parsing round-trips exactly."""
    out = io.StringIO()
    out.write("[horizon]\n")
    out.write(f"n_steps = {s.horizon.n_steps}\n")
    out.write(f"step_hours = {s.horizon.step_hours!r}\n\n")
    out.write("[water]\n")
    for k in _WATER_KEYS:
        out.write(f"{k} = {getattr(s.water, k)!r}\n")
    out.write("\n[gas]\n")
    for f in fields(GasParams):
        out.write(f"{f.name} = {getattr(s.gas, f.name)!r}\n")
    out.write("\n[power]\n")
    for f in fields(PowerParams):
        out.write(f"{f.name} = {getattr(s.power, f.name)!r}\n")
    out.write(f"pseudo_rate = {s.pseudo_rate!r}\n\n")
    out.write("[loads]\nt,L_w,L_g,L_r\n")
    rows = zip(s.loads.water, s.loads.gas, s.loads.residential_electric)
    for t, (lw, lg, lr) in enumerate(rows, 1):
        out.write(f"{t},{lw!r},{lg!r},{lr!r}\n")
    return out.getvalue()


def write_scenario(s: Scenario, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_scenario(s))
