"""Scenario assembly, solving, reporting and schedule validation."""
from ..config import GridExchangeSpec
from .assemble import COST_KEYS, SCENARIOS, Assembly, ScenarioId, assemble, build
from .report import (
    ScheduleReport, comparison_rows, format_comparison, read_costs_csv, read_schedule_csv,
    recompute_costs, report_costs, write_comparison, write_report,
)
from .run import compare, map_solution, run_scenario, solve_assembly
from .validate import Violation, derive_phases, validate_schedule

__all__ = [
    "COST_KEYS", "SCENARIOS", "Assembly", "GridExchangeSpec", "ScenarioId", "ScheduleReport", "Violation",
    "assemble", "build", "compare", "comparison_rows", "derive_phases", "format_comparison", "map_solution",
    "read_costs_csv", "read_schedule_csv", "recompute_costs", "report_costs", "run_scenario",
    "solve_assembly", "validate_schedule", "write_comparison", "write_report",
]
