import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ewgopt.model import (
    GasParams,
    Horizon,
    LoadProfiles,
    PowerParams,
    Scenario,
    ScenarioParseError,
    ScenarioValidationError,
    WaterParams,
    balance_residual,
    bundled_scenario_path,
    default_transport_cap,
    format_scenario,
    parse_scenario,
    scenario_from_file,
    validate_scenario,
    write_scenario,
)


def test_default_scenario_validates(default_scenario):
    assert validate_scenario(default_scenario).ok


def test_default_scenario_reference_parameters(default_scenario):
    s = default_scenario
    assert s.pseudo_rate == 0.25
    assert s.gas.unit_volume == 500.0
    assert s.n_steps == 24
    assert s.step_hours == 1.0


def test_zero_water_capacity_is_infeasible(default_scenario):
    s = dataclasses.replace(default_scenario,
                            water=dataclasses.replace(default_scenario.water, flow_max=0.0))
    result = validate_scenario(s)
    assert not result.ok
    assert any("water horizon infeasible" in v for v in result.violations)


def test_small_water_capacity_is_infeasible(default_scenario):
    # positive but too small to meet the daily load
    s = dataclasses.replace(default_scenario,
                            water=dataclasses.replace(default_scenario.water, flow_max=1e-3))
    assert any("water horizon infeasible" in v for v in validate_scenario(s).violations)


def test_length_mismatch(default_scenario):
    loads = default_scenario.loads
    short = LoadProfiles(loads.water[:23], loads.gas, loads.residential_electric)
    result = validate_scenario(dataclasses.replace(default_scenario, loads=short))
    assert any("length mismatch" in v for v in result.violations)


def test_bound_order_violation(default_scenario):
    w = dataclasses.replace(default_scenario.water, storage_init=1e9)
    result = validate_scenario(dataclasses.replace(default_scenario, water=w))
    assert any("bound order" in v for v in result.violations)


def test_fractional_transport_total_flagged(tiny3):
    loads = dataclasses.replace(tiny3.loads, gas=(2.0, 3.0, 1.5))
    result = validate_scenario(dataclasses.replace(tiny3, loads=loads))
    assert any("gas cyclic infeasible" in v for v in result.violations)


def test_transport_cap_insufficient(tiny3):
    gas = dataclasses.replace(tiny3.gas, transport_max_units=0)
    result = validate_scenario(dataclasses.replace(tiny3, gas=gas))
    assert any("transport cap" in v for v in result.violations)


def test_validate_is_deterministic_and_pure(default_scenario):
    before = format_scenario(default_scenario)
    a = validate_scenario(default_scenario)
    b = validate_scenario(default_scenario)
    assert a == b
    assert format_scenario(default_scenario) == before


def test_missing_loads_section_names_it(tmp_path):
    text = open(bundled_scenario_path("tiny2.scenario")).read()
    text = text[: text.index("[loads]")]
    path = tmp_path / "bad.scenario"
    path.write_text(text)
    with pytest.raises(ScenarioParseError, match=r"\[loads\]"):
        scenario_from_file(path)


def test_malformed_number(tmp_path):
    text = open(bundled_scenario_path("tiny2.scenario")).read().replace("h_w = 1.0", "h_w = one")
    path = tmp_path / "bad.scenario"
    path.write_text(text)
    with pytest.raises(ScenarioParseError, match="h_w"):
        scenario_from_file(path)


def test_unknown_key_rejected():
    text = open(bundled_scenario_path("tiny2.scenario")).read().replace("[water]", "[water]\nfoo = 1")
    with pytest.raises(ScenarioParseError, match="foo"):
        parse_scenario(text)


def test_validation_error_from_file(tmp_path):
    text = open(bundled_scenario_path("tiny2.scenario")).read().replace("flow_max = 5.0", "flow_max = 0.5", 1)
    path = tmp_path / "bad.scenario"
    path.write_text(text)
    with pytest.raises(ScenarioValidationError) as err:
        scenario_from_file(path)
    assert any("water horizon infeasible" in v for v in err.value.violations)


def test_optional_fields_get_defaults():
    text = open(bundled_scenario_path("tiny2.scenario")).read()
    for line in ("pseudo_rate = 0.25\n", "unit_volume = 2.0\n", "transport_max_units = 2\n",
                 "n_breakpoints = 5\n", "step_hours = 1.0\n", "n_steps = 2\n"):
        text = text.replace(line, "")
    text = text.replace("[gas]", "[gas]\nunit_volume = 1.0")
    s = parse_scenario(text)
    assert s.pseudo_rate == 0.25
    assert s.power.n_breakpoints == 11
    assert s.horizon == Horizon(2, 1.0)
    # ceil(2 * peak gas load * T / V_g) = ceil(2 * 1 * 1 / 1)
    assert s.gas.transport_max_units == 2


def test_default_transport_cap():
    assert default_transport_cap(6000.0, 1.0, 500.0) == 24
    assert default_transport_cap(6001.0, 1.0, 500.0) == 25


def test_unit_volume_read_from_file(tmp_path):
    text = open(bundled_scenario_path("default.scenario")).read()
    path = tmp_path / "copy.scenario"
    path.write_text(text)
    assert scenario_from_file(path).gas.unit_volume == 500.0


def test_file_round_trip(tmp_path, default_scenario):
    path = tmp_path / "rt.scenario"
    write_scenario(default_scenario, path)
    assert scenario_from_file(path) == default_scenario


pos = st.floats(min_value=0.01, max_value=1e4, allow_nan=False, allow_infinity=False)
nonneg = st.floats(min_value=0.0, max_value=1e4, allow_nan=False, allow_infinity=False)


@st.composite
def scenarios(draw):
    n = draw(st.integers(1, 6))
    loads = LoadProfiles(
        draw(st.lists(nonneg, min_size=n, max_size=n)),
        draw(st.lists(nonneg, min_size=n, max_size=n)),
        draw(st.lists(nonneg, min_size=n, max_size=n)),
    )
    lo, init, hi = sorted(draw(st.lists(nonneg, min_size=3, max_size=3)))
    water = WaterParams(draw(pos), draw(nonneg), init, lo, hi, draw(pos))
    t_lo, t_init, t_hi = sorted(draw(st.lists(nonneg, min_size=3, max_size=3)))
    p_lo, p_init, p_hi = sorted(draw(st.lists(nonneg, min_size=3, max_size=3)))
    gas = GasParams(
        draw(pos), draw(nonneg), draw(nonneg), draw(nonneg), draw(pos), draw(pos), draw(pos),
        t_init, t_lo, t_hi, p_init, p_lo, p_hi, draw(pos), draw(st.integers(0, 50)),
    )
    power = PowerParams(draw(pos), draw(nonneg), draw(nonneg), draw(pos), draw(st.integers(2, 30)))
    return Scenario(Horizon(n, draw(pos)), loads, water, gas, power, draw(nonneg))


@settings(max_examples=60, deadline=None)
@given(scenarios())
def test_round_trip_property(s):
    assert parse_scenario(format_scenario(s), validate=False) == s


@settings(max_examples=60, deadline=None)
@given(scenarios())
def test_validate_never_raises_and_is_deterministic(s):
    a = validate_scenario(s)
    assert a == validate_scenario(s)
    assert isinstance(a.violations, tuple)


def test_balance_residual_detects_error():
    levels = [1.0, 2.0, 2.0]
    assert balance_residual(0.0, levels, [1, 1, 0], [0, 0, 0], 1.0) == 0.0
    assert balance_residual(0.0, levels, [1, 1, 1], [0, 0, 0], 1.0) == pytest.approx(1.0 / 3.0)


def test_schedule_arrays_are_read_only(default_cases):
    case1, _ = default_cases
    with pytest.raises(ValueError):
        case1.water.flows[0] = 1.0
    assert np.all(case1.gas.transport_units >= 0)
