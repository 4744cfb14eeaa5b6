"""Interpreter for a small object and aspect language with contract checking and blame."""

from .engine import Engine, Heap, ScenarioReport, Violation, execute_call, execute_scenario
from .frontend import StaticFailure, compile_file, compile_source
from .planner import check_rows, exec_order, plan_call
from .scenario import parse_scenario

__all__ = [
    "Engine",
    "Heap",
    "ScenarioReport",
    "StaticFailure",
    "Violation",
    "check_rows",
    "compile_file",
    "compile_source",
    "exec_order",
    "execute_call",
    "execute_scenario",
    "parse_scenario",
    "plan_call",
]
