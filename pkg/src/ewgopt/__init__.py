"""Independent and joint scheduling of coupled electricity, water and gas systems."""

from .formulations import (
    InfeasibleByConstruction,
    InfeasibleModel,
    PiecewiseCurve,
    VariableLayout,
    build_gas_milp,
    build_joint_milp,
    build_water_lp,
    extract_schedules,
    linearize_quadratic,
)
from .linprog import LinearProgram, LpSolution, MalformedProgram, Status, check_solution, solve_lp
from .milp import MilpSolution, UnboundedRelaxation, solve_milp
from .model import (
    DispatchSchedule,
    GasParams,
    Horizon,
    LoadProfiles,
    PowerParams,
    Scenario,
    ScenarioParseError,
    ScenarioValidationError,
    ValidationResult,
    WaterParams,
    load_bundled,
    scenario_from_file,
    validate_scenario,
    write_scenario,
)
from .workflows import (
    CaseResult,
    Comparison,
    CostReport,
    compare_cases,
    peak_metrics,
    run_case1,
    run_case2,
)

__version__ = "0.1.0"
