"""Scenario runner, random schedule fuzzer and the omniscient auditor."""

from .auditor import Auditor
from .fuzz import FuzzReport, run_random_schedules
from .scenario import ParseError, Scenario, ScenarioResult, parse_scenario, run_scenario
from .world import HarnessError, World

__all__ = [
    "Auditor", "FuzzReport", "HarnessError", "ParseError", "Scenario", "ScenarioResult", "World",
    "parse_scenario", "run_random_schedules", "run_scenario",
]
