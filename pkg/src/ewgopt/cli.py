"""Command-line driver.

    ewg compare --scenario default.scenario --out out/
    ewg case2 --scenario tiny3.scenario --format json

Exit codes: 0 success, 1 usage, 2 invalid scenario, 3 infeasible model.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
import tempfile
from dataclasses import dataclass
from typing import Optional

from .formulations import InfeasibleModel
from .model import (
    ScenarioParseError,
    bundled_scenario_path,
    scenario_from_file,
    validate_scenario,
)
from .workflows import report_json, report_text, run_case1, run_case2, schedule_csv

EXIT_OK, EXIT_USAGE, EXIT_SCENARIO, EXIT_INFEASIBLE = 0, 1, 2, 3
MODES = ("case1", "case2", "compare")
FORMATS = ("json", "text", "csv-all")

log = logging.getLogger("ewgopt")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


@dataclass(frozen=True)
class RunRequest:
    scenario_path: str
    mode: str
    output_dir: Optional[str] = None
    format: Optional[str] = None  # None: every format when writing to a directory
    verbosity: int = 0
    breakpoints: Optional[int] = None
    pseudo_rate: Optional[float] = None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ewg", description="Independent vs joint electricity-water-gas scheduling.")
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--scenario", required=True, metavar="PATH",
                        help="scenario file, or the name of a bundled one (default.scenario, ...)")
    parser.add_argument("--out", metavar="DIR", help="write reports here instead of stdout")
    parser.add_argument("--format", choices=FORMATS)
    parser.add_argument("--breakpoints", type=int, metavar="N", help="override the number of breakpoints")
    parser.add_argument("--pseudo-rate", type=float, metavar="X", help="override the pseudo rate ($/kWh)")
    parser.add_argument("--verbose", "-v", action="count", default=0)
    return parser


def _resolve(path: str) -> str:
    if os.path.exists(path):
        return path
    bundled = bundled_scenario_path(os.path.basename(path))
    if os.path.basename(path) == path and os.path.exists(bundled):
        return bundled
    return path


def _outputs(req: RunRequest, scenario, case1, case2) -> dict:
    """Map of file name -> contents for the request."""
    files = {}
    fmt = req.format
    if fmt in (None, "json"):
        files["report.json"] = report_json(scenario, case1, case2)
    if fmt in (None, "text"):
        files["report.txt"] = report_text(scenario, case1, case2)
    if fmt in (None, "csv-all"):
        for r in (case1, case2):
            if r is not None:
                files[f"{r.name}.csv"] = schedule_csv(scenario, r)
    return files


def _write_all(out_dir: str, files: dict) -> None:
    os.makedirs(out_dir, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=out_dir)
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            staged.append((tmp, os.path.join(out_dir, name)))
    except BaseException:
        for tmp, _ in staged:
            os.unlink(tmp)
        raise
    for tmp, final in staged:
        os.replace(tmp, final)


def run(req: RunRequest, stdout=None) -> int:
    stdout = stdout or sys.stdout
    path = _resolve(req.scenario_path)
    try:
        scenario = scenario_from_file(path, validate=False)
    except FileNotFoundError:
        print(f"error: scenario file not found: {req.scenario_path}", file=sys.stderr)
        return EXIT_SCENARIO
    except (OSError, ScenarioParseError) as exc:
        print(f"error: cannot read scenario {req.scenario_path}: {exc}", file=sys.stderr)
        return EXIT_SCENARIO

    if req.breakpoints is not None:
        scenario = dataclasses.replace(
            scenario, power=dataclasses.replace(scenario.power, n_breakpoints=req.breakpoints))
    if req.pseudo_rate is not None:
        scenario = dataclasses.replace(scenario, pseudo_rate=req.pseudo_rate)
    check = validate_scenario(scenario)
    if not check.ok:
        print(f"error: invalid scenario {req.scenario_path}:", file=sys.stderr)
        for v in check.violations:
            print(f"  - {v}", file=sys.stderr)
        return EXIT_SCENARIO

    try:
        case1 = run_case1(scenario) if req.mode in ("case1", "compare") else None
        case2 = run_case2(scenario) if req.mode in ("case2", "compare") else None
    except InfeasibleModel as exc:
        print(f"error: infeasible model ({exc.subsystem}): {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE

    if req.output_dir:
        files = _outputs(req, scenario, case1, case2)
        _write_all(req.output_dir, files)
        for name in files:
            log.info("wrote %s", os.path.join(req.output_dir, name))
    else:
        fmt = req.format or "text"
        if fmt == "json":
            stdout.write(report_json(scenario, case1, case2))
        elif fmt == "text":
            stdout.write(report_text(scenario, case1, case2))
        else:
            for r in (case1, case2):
                if r is not None:
                    stdout.write(f"# {r.name}\n")
                    stdout.write(schedule_csv(scenario, r))
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(
        level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    req = RunRequest(
        scenario_path=args.scenario, mode=args.mode, output_dir=args.out, format=args.format,
        verbosity=args.verbose, breakpoints=args.breakpoints, pseudo_rate=args.pseudo_rate,
    )
    return run(req)


if __name__ == "__main__":
    sys.exit(main())
