"""``conaweave`` command line: check programs, print plans, run scenarios.

Exit codes: 0 clean, 1 contract violation, 2 static or usage error, 3 I/O.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, TextIO

from .engine import ScenarioReport, execute_scenario, trace_to_jsonl
from .frontend import Diagnostic, StaticFailure, compile_source
from .planner import CATEGORIZED, MODES, CheckPlan, PlanningError, exec_order, plan_call, plan_to_json, step_label
from .printer import format_literal
from .scenario import ScenarioFormatError, parse_scenario

EXIT_OK, EXIT_VIOLATION, EXIT_STATIC, EXIT_IO = 0, 1, 2, 3


@dataclass(frozen=True)
class CliConfig:
    subcommand: str
    program: str
    scenario: Optional[str] = None
    target: Optional[str] = None
    mode: str = CATEGORIZED
    format: str = "human"
    trace: Optional[str] = None
    debug: bool = False

    def __post_init__(self):
        if self.mode != CATEGORIZED and self.subcommand not in ("plan", "run"):
            raise ValueError(f"--mode {self.mode} only applies to plan and run")


class _IOFailure(Exception):
    pass


class _Output:
    def __init__(self, stream: TextIO, color: bool):
        self.stream = stream
        self.color = color

    def line(self, text: str = "") -> None:
        self.stream.write(text + "\n")

    def paint(self, text: str, code: str) -> str:
        return f"\x1b[{code}m{text}\x1b[0m" if self.color else text

    def json(self, doc) -> None:
        self.stream.write(json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n")


def _use_color(stream: TextIO) -> bool:
    setting = os.environ.get("CONAWEAVE_COLOR")
    if setting is not None:
        return setting == "1"
    return hasattr(stream, "isatty") and stream.isatty()


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise _IOFailure(f"cannot read {path}: {exc}") from None


def _diagnostics(out: _Output, cfg: CliConfig, diags: list[Diagnostic]) -> int:
    if cfg.format == "json":
        out.json({"ok": False, "diagnostics": [d.to_json() for d in diags]})
    else:
        for d in diags:
            out.line(f"{d.span}: {out.paint(d.code, '31')}: {d.message}")
    return EXIT_STATIC


def cmd_check(cfg: CliConfig, out: _Output) -> int:
    source = _read(cfg.program)
    try:
        program = compile_source(source, cfg.program)
    except StaticFailure as exc:
        return _diagnostics(out, cfg, exc.diagnostics)
    if cfg.format == "json":
        out.json({
            "ok": True,
            "classes": list(program.classes),
            "aspects": [{"name": a.name, "category": a.category} for a in program.aspects],
        })
    else:
        out.line(f"OK: {len(program.classes)} classes, {len(program.aspects)} aspects")
    return EXIT_OK


def render_plan(plan: CheckPlan) -> list[str]:
    aspects = ", ".join(f"{n} ({c})" for n, c in plan.aspects) or "none"
    order = exec_order(plan)
    lines = [
        f"{plan.cls}.{plan.method}  mode={plan.mode}  category={plan.category}  aspects={aspects}"
        + (f"  exec-order={order}" if order else "")
    ]
    for i, step in enumerate(plan.steps):
        blame = getattr(step, "blame", None)
        kind = type(step).__name__
        pad = "  " * step.level
        lines.append(f"  {i:>2}  {pad}{kind:<17} {step_label(step)}" + (f"  [{blame}]" if blame else ""))
    return lines


def cmd_plan(cfg: CliConfig, out: _Output) -> int:
    source = _read(cfg.program)
    try:
        program = compile_source(source, cfg.program)
    except StaticFailure as exc:
        return _diagnostics(out, cfg, exc.diagnostics)
    cls, _, method = (cfg.target or "").partition(".")
    try:
        if not cls or not method:
            raise PlanningError(f"target must be Class.method, got {cfg.target!r}")
        plan = plan_call(program, cls, method, mode=cfg.mode)
    except PlanningError as exc:
        return _diagnostics(out, cfg, [Diagnostic("UnknownTarget", str(exc), _file_span(cfg.program))])
    if cfg.format == "json":
        out.json(plan_to_json(plan))
    else:
        for line in render_plan(plan):
            out.line(line)
    return EXIT_OK


def _file_span(path: str):
    from .syntax import SourceSpan

    return SourceSpan(path, 1, 1, 0)


def _caret(sources: dict, span) -> list[str]:
    if span is None or span.file not in sources:
        return []
    lines = sources[span.file].splitlines()
    if not 1 <= span.line <= len(lines):
        return []
    text = lines[span.line - 1]
    return [f"    {text}", "    " + " " * (span.column - 1) + "^" * max(1, span.length)]


def _call_text(call) -> str:
    return f"{call.var}.{call.method}({', '.join(format_literal(a) for a in call.args)})"


def render_report(report: ScenarioReport, sources: dict, out: _Output) -> None:
    for call in report.calls:
        head = f"[{call.index}] {_call_text(call)} on {call.cls}"
        outcome = call.outcome
        if outcome.ok:
            result = "" if outcome.result is None else f" -> {format_literal(outcome.result)}"
            out.line(f"{head}: {out.paint('ok', '32')}{result}")
        elif outcome.error is not None:
            out.line(f"{head}: {out.paint('error', '31')} {outcome.error}")
        else:
            v = outcome.violation
            out.line(f"{head}: {out.paint(v.kind, '31')} blamed {out.paint(str(v.blamed), '1')}"
                     f" at step {v.step_index} ({v.step_label})")
            if v.span is not None:
                out.line(f"  {v.span}: {v.message}")
            for line in _caret(sources, v.span):
                out.line(line)
            if v.witness:
                shown = ", ".join(f"{k} = {format_literal(val)}" for k, val in sorted(v.witness.items()))
                out.line(f"  where {shown}")
            if len(v.call_stack) > 1:
                out.line("  in " + " <- ".join(f"{c}.{m}" for c, m in reversed(v.call_stack)))
    failed = sum(not c.outcome.ok for c in report.calls)
    out.line(f"{len(report.calls)} call(s), {failed} failed, mode {report.mode}")


def cmd_run(cfg: CliConfig, out: _Output) -> int:
    source = _read(cfg.program)
    scenario_text = _read(cfg.scenario)
    try:
        program = compile_source(source, cfg.program)
    except StaticFailure as exc:
        return _diagnostics(out, cfg, exc.diagnostics)
    try:
        scenario = parse_scenario(scenario_text, cfg.scenario)
        report = execute_scenario(program, scenario, cfg.mode, debug=cfg.debug)
    except ScenarioFormatError as exc:
        span = _file_span(cfg.scenario)
        if exc.line:
            span = type(span)(cfg.scenario, exc.line, 1, 0)
        return _diagnostics(out, cfg, [Diagnostic("ScenarioFormatError", str(exc), span)])
    if cfg.trace:
        try:
            Path(cfg.trace).write_text(trace_to_jsonl(report.trace), encoding="utf-8")
        except OSError as exc:
            raise _IOFailure(f"cannot write trace {cfg.trace}: {exc}") from None
    if cfg.format == "json":
        out.json(report.to_json())
    else:
        render_report(report, {cfg.program: source}, out)
    return EXIT_OK if report.ok else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="conaweave", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--format", choices=("human", "json"), default="human")

    check = sub.add_parser("check", help="parse and validate a program")
    check.add_argument("program")
    common(check)

    plan = sub.add_parser("plan", help="print the check plan for Class.method")
    plan.add_argument("program")
    plan.add_argument("target", metavar="Class.method")
    plan.add_argument("--mode", choices=MODES, default=CATEGORIZED)
    common(plan)

    run = sub.add_parser("run", help="run a scenario against a program")
    run.add_argument("program")
    run.add_argument("scenario")
    run.add_argument("--mode", choices=MODES, default=CATEGORIZED)
    run.add_argument("--trace", metavar="PATH", help="write trace events as JSON Lines")
    run.add_argument("--debug", action="store_true", help="re-check purity and heap kinds at every step")
    common(run)
    return parser


def parse_config(argv) -> CliConfig:
    ns = build_parser().parse_args(argv)
    return CliConfig(
        subcommand=ns.subcommand,
        program=ns.program,
        scenario=getattr(ns, "scenario", None),
        target=getattr(ns, "target", None),
        mode=getattr(ns, "mode", CATEGORIZED),
        format=ns.format,
        trace=getattr(ns, "trace", None),
        debug=getattr(ns, "debug", False),
    )


_COMMANDS = {"check": cmd_check, "plan": cmd_plan, "run": cmd_run}


def main(argv=None, stdout: Optional[TextIO] = None, stderr: Optional[TextIO] = None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        cfg = parse_config(argv)
    except SystemExit as exc:
        return EXIT_STATIC if exc.code else EXIT_OK
    out = _Output(stdout, _use_color(stdout))
    try:
        return _COMMANDS[cfg.subcommand](cfg, out)
    except _IOFailure as exc:
        stderr.write(f"conaweave: {exc}\n")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
