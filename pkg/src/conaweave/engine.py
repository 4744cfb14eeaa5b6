"""Tree-walking interpreter that executes check plans.

Every call on a receiver is compiled to a :class:`~conaweave.planner.CheckPlan`
and its steps are run in order.  The first failing check stops the call with
a :class:`Violation`; the heap keeps whatever state the call had reached.
Calls made from bodies are full woven calls of their own.  Calls made from
assertions run the (statically pure) callee's body directly.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .assertions import (
    NO_RESULT,
    Env,
    EvaluationError,
    KindMismatch,
    eval_assert,
    eval_implication,
    evaluate,
)
from .model import all_fields, initial_fields, kind_of, lookup_method
from .planner import (
    CATEGORIZED,
    AssertionRef,
    BlameParty,
    CheckAssert,
    CheckImplication,
    CheckPlan,
    RunAfterAdvice,
    RunBeforeAdvice,
    RunBody,
    SnapshotOld,
    METHOD,
    advice_party,
    aspect_party,
    plan_call,
    step_label,
)
from .scenario import CallCommand, NewObject, Scenario, check_scenario
from .syntax import Assign, ExprStmt, FieldRef, If, Name, Program, ResultRef, Return, VarDecl

MAX_CALL_DEPTH = 200

VIOLATION_KINDS = (
    "PreconditionViolation",
    "PostconditionViolation",
    "ImplicationViolation",
    "HierarchyViolation",
    "ObedientViolation",
    "AgnosticViolation",
    "RebelliousViolation",
    "EvaluationFault",
)


class EngineError(RuntimeError):
    pass


class ReentrantWeave(EngineError):
    """Advice triggered a join point of its own aspect while still running."""


class CallDepthExceeded(EvaluationError):
    code = "CallDepthExceeded"


# -- heap ----------------------------------------------------------------------


@dataclass
class HeapObject:
    cls: str
    fields: dict


@dataclass
class Heap:
    objects: dict[int, HeapObject] = field(default_factory=dict)
    next_id: int = 1

    def new(self, program: Program, cls: str) -> int:
        oid = self.next_id
        self.next_id += 1
        self.objects[oid] = HeapObject(cls, initial_fields(program, cls))
        return oid

    def __getitem__(self, oid: int) -> HeapObject:
        return self.objects[oid]

    def copy(self) -> "Heap":
        return copy.deepcopy(self)

    def check_kinds(self, program: Program) -> None:
        for oid, obj in self.objects.items():
            decls = all_fields(program, obj.cls)
            if set(decls) != set(obj.fields):
                raise AssertionError(f"object {oid} has fields {sorted(obj.fields)}")
            for name, decl in decls.items():
                if kind_of(obj.fields[name]) != decl.kind:
                    raise AssertionError(f"object {oid} field {name} is not {decl.kind}")

    def to_json(self) -> dict:
        return {str(oid): {"class": o.cls, "fields": dict(o.fields)} for oid, o in self.objects.items()}


# -- reports -------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    kind: str
    blamed: BlameParty
    step_index: int
    step_label: str
    message: str
    assertion_id: str = ""
    span: object = None
    failing_text: Optional[str] = None
    witness: dict = field(default_factory=dict)
    call_stack: tuple[tuple[str, str], ...] = ()
    category: str = "none"

    def __post_init__(self):
        if self.kind not in VIOLATION_KINDS:
            raise ValueError(f"unknown violation kind {self.kind!r}")

    def key(self) -> tuple:
        """What must be identical across repeated runs."""
        return (self.kind, str(self.blamed), self.step_index, self.call_stack)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "blamed": str(self.blamed),
            "blame": self.blamed.to_json(),
            "step": self.step_index,
            "step_label": self.step_label,
            "message": self.message,
            "assertion": self.assertion_id,
            "span": self.span.to_json() if self.span is not None else None,
            "failing_text": self.failing_text,
            "witness": dict(self.witness),
            "call_stack": [{"class": c, "method": m} for c, m in self.call_stack],
            "category": self.category,
        }


@dataclass(frozen=True)
class TraceEvent:
    seq: int
    event: str
    call: int
    depth: int
    data: dict = field(default_factory=dict)

    @property
    def step(self) -> Optional[int]:
        return self.data.get("step")

    def to_json(self) -> dict:
        return {"seq": self.seq, "event": self.event, "call": self.call, "depth": self.depth, **self.data}


def trace_to_jsonl(events: Iterable[TraceEvent]) -> str:
    return "".join(json.dumps(e.to_json(), sort_keys=True) + "\n" for e in events)


STEP_EVENTS = ("CheckPassed", "CheckFailed", "SnapshotTaken", "AdviceEntered", "BodyEntered")


def project_trace(events: Sequence[TraceEvent], call: int) -> list[int]:
    """Plan step indices a call's events account for, in order."""
    return [e.step for e in events if e.call == call and e.event in STEP_EVENTS]


@dataclass(frozen=True)
class CallOutcome:
    result: object = None
    violation: Optional[Violation] = None
    error: Optional[str] = None
    call_id: Optional[int] = None
    plan: Optional[CheckPlan] = None

    @property
    def ok(self) -> bool:
        return self.violation is None and self.error is None


class _Abort(Exception):
    def __init__(self, violation: Violation):
        super().__init__(violation.message)
        self.violation = violation


class _Returned(Exception):
    def __init__(self, value):
        self.value = value


@dataclass
class _Snapshot:
    args: list
    fields: dict
    result: object


@dataclass
class _Call:
    """Mutable state of one woven call while its plan runs."""

    oid: int
    plan: CheckPlan
    args: list
    param_names: tuple[str, ...]
    result: object = None
    snapshots: dict = field(default_factory=dict)


# -- engine --------------------------------------------------------------------


class Engine:
    def __init__(self, program: Program, mode: str = CATEGORIZED, heap: Optional[Heap] = None,
                 debug: bool = False):
        self.program = program
        self.mode = mode
        self.heap = heap if heap is not None else Heap()
        self.debug = debug
        self.trace: list[TraceEvent] = []
        self._seq = 0
        self._calls = 0
        self._stack: list[tuple[str, str]] = []
        self._active: list[str] = []  # aspects whose advice is running
        self._plans: dict[tuple[str, str], CheckPlan] = {}

    # trace -------------------------------------------------------------------

    def _emit(self, event: str, call: int, **data) -> None:
        self.trace.append(TraceEvent(self._seq, event, call, len(self._stack), data))
        self._seq += 1

    # public ------------------------------------------------------------------

    def new(self, cls: str) -> int:
        return self.heap.new(self.program, cls)

    def plan_for(self, cls: str, method: str) -> CheckPlan:
        key = (cls, method)
        if key not in self._plans:
            self._plans[key] = plan_call(self.program, cls, method, mode=self.mode)
        return self._plans[key]

    def execute_call(self, receiver: int, method: str, args: Sequence = ()) -> CallOutcome:
        """Run one top-level call.  Violations are returned, engine errors raised."""
        first_call = self._calls + 1
        try:
            result = self._invoke(receiver, method, list(args))
        except _Abort as abort:
            return CallOutcome(None, abort.violation, call_id=first_call)
        finally:
            self._stack.clear()
            self._active.clear()
        return CallOutcome(result, call_id=first_call)

    # calls -------------------------------------------------------------------

    def _invoke(self, oid: int, method: str, args: list):
        obj = self.heap[oid]
        plan = self.plan_for(obj.cls, method)
        for name, _ in plan.aspects:
            if name in self._active:
                raise ReentrantWeave(f"advice of {name} reached its own join point {obj.cls}.{method}")
        if len(self._stack) >= MAX_CALL_DEPTH:
            raise CallDepthExceeded(f"call depth exceeds {MAX_CALL_DEPTH} at {obj.cls}.{method}")
        _, target = lookup_method(self.program, obj.cls, method)
        self._calls += 1
        call_id = self._calls
        self._emit("CallStarted", call_id, **{"class": obj.cls, "method": method, "args": list(args)})
        self._stack.append((obj.cls, method))
        state = _Call(oid, plan, list(args), target.param_names)
        ok = False
        try:
            for index, step in enumerate(plan.steps):
                self._step(call_id, state, index, step)
            ok = True
            return state.result
        finally:
            self._stack.pop()
            finished = {"class": obj.cls, "method": method, "ok": ok}
            if ok:
                finished["result"] = state.result
            self._emit("CallFinished", call_id, **finished)

    def _step(self, call_id: int, state: _Call, index: int, step) -> None:
        if isinstance(step, CheckAssert):
            self._check_assert(call_id, state, index, step)
        elif isinstance(step, CheckImplication):
            self._check_implication(call_id, state, index, step)
        elif isinstance(step, SnapshotOld):
            obj = self.heap[state.oid]
            result = state.result if step.key == "after" else NO_RESULT
            state.snapshots[(step.level, step.key)] = _Snapshot(
                copy.deepcopy(state.args), copy.deepcopy(obj.fields), result)
            self._emit("SnapshotTaken", call_id, step=index, owner=step.key, level=step.level)
        elif isinstance(step, RunBody):
            self._run_body(call_id, state, index, step)
        else:
            self._run_advice(call_id, state, index, step)

    # contract checks -----------------------------------------------------------

    def _assertion_env(self, state: _Call, ref: AssertionRef, level: int) -> Env:
        obj = self.heap[state.oid]
        if ref.is_method:
            names = self.program.classes[ref.owner].methods[ref.member].param_names
        else:
            names = state.param_names
        takes_result = ref.role == "m_post" or ref.role.startswith("after")
        old = None
        snap = state.snapshots.get((level, ref.snapshot_key))
        if snap is not None:
            old = Env(dict(zip(names, snap.args)), snap.fields, snap.result,
                      call=self._pure_hook(obj.cls, snap.fields))
        return Env(
            dict(zip(names, state.args)),
            obj.fields,
            state.result if takes_result else NO_RESULT,
            old,
            self._pure_hook(obj.cls, obj.fields),
        )

    def _pure_hook(self, cls: str, fields: dict):
        def call(method: str, args: list, env: Env):
            return self._call_pure(cls, fields, method, args)

        return call

    def _call_pure(self, cls: str, fields: dict, method: str, args: list):
        """Run a query method's body directly: no advice, no contracts, no trace."""
        if len(self._stack) >= MAX_CALL_DEPTH:
            raise CallDepthExceeded(f"query depth exceeds {MAX_CALL_DEPTH} at {cls}.{method}")
        _, target = lookup_method(self.program, cls, method)
        local = dict(zip(target.param_names, args))
        env = Env(local, fields, call=self._pure_hook(cls, fields))
        self._stack.append((cls, method))
        try:
            self._exec_block(target.body, env, _Frame(local, _param_kinds(target), "method"))
        except _Returned as ret:
            return ret.value
        finally:
            self._stack.pop()
        return None

    def _fault_blame(self, ref: AssertionRef) -> BlameParty:
        return METHOD if ref.is_method else aspect_party(ref.owner)

    def _violation(self, state, index, step, kind, blamed, message, outcome=None, span=None) -> Violation:
        return Violation(
            kind,
            blamed,
            index,
            step_label(step),
            message,
            outcome.assertion_id if outcome else "",
            outcome.failing_span if outcome else span,
            outcome.failing_text if outcome else None,
            dict(outcome.witness) if outcome else {},
            tuple(self._stack),
            state.plan.category,
        )

    def _fault(self, call_id, state, index, step, ref, exc: EvaluationError):
        violation = self._violation(state, index, step, "EvaluationFault", self._fault_blame(ref),
                                    f"{exc.code} in {ref.id}: {exc.message}", span=exc.span)
        self._emit("CheckFailed", call_id, step=index, kind="EvaluationFault")
        raise _Abort(violation) from None

    def _check_assert(self, call_id, state, index, step: CheckAssert):
        ref = step.assertion
        env = self._assertion_env(state, ref, step.level)
        try:
            outcome = eval_assert(ref.expr, env, ref.id, self.debug)
        except EvaluationError as exc:
            self._fault(call_id, state, index, step, ref, exc)
        if outcome.passed:
            self._emit("CheckPassed", call_id, step=index)
            return
        kind = "PreconditionViolation" if ref.role.endswith("pre") else "PostconditionViolation"
        violation = self._violation(state, index, step, kind, step.blame,
                                    f"{ref.id} failed: {outcome.failing_text}", outcome)
        self._emit("CheckFailed", call_id, step=index, kind=kind)
        raise _Abort(violation)

    def _check_implication(self, call_id, state, index, step: CheckImplication):
        ant, cons = step.antecedent, step.consequent
        ant_env = self._assertion_env(state, ant, step.level)
        cons_env = self._assertion_env(state, cons, step.level)
        try:
            evaluate(ant.expr, ant_env)
        except EvaluationError as exc:
            self._fault(call_id, state, index, step, ant, exc)
        try:
            outcome = eval_implication(ant.expr, cons.expr, ant_env, cons_env, f"{ant.id} -> {cons.id}",
                                       self.debug)
        except EvaluationError as exc:
            self._fault(call_id, state, index, step, cons, exc)
        if outcome.passed:
            self._emit("CheckPassed", call_id, step=index)
            return
        if step.hierarchy is not None:
            kind = "HierarchyViolation"
        elif step.category is not None:
            kind = f"{step.category.capitalize()}Violation"
        else:
            kind = "ImplicationViolation"
        violation = self._violation(state, index, step, kind, step.blame,
                                    f"{ant.id} holds but {cons.id} fails: {outcome.failing_text}", outcome)
        self._emit("CheckFailed", call_id, step=index, kind=kind)
        raise _Abort(violation)

    # bodies and advice ---------------------------------------------------------

    def _body_hook(self, oid: int):
        def call(method: str, args: list, env: Env):
            return self._invoke(oid, method, list(args))

        return call

    def _run_body(self, call_id, state: _Call, index, step: RunBody):
        obj = self.heap[state.oid]
        method = self.program.classes[step.cls].methods[step.method]
        local = dict(zip(method.param_names, state.args))
        env = Env(local, obj.fields, call=self._body_hook(state.oid))
        frame = _Frame(local, _param_kinds(method), "method", all_fields(self.program, obj.cls))
        self._emit("BodyEntered", call_id, step=index, **{"class": step.cls, "method": step.method})
        try:
            self._exec_block(method.body, env, frame)
            state.result = None
        except _Returned as ret:
            state.result = ret.value
        except EvaluationError as exc:
            self._abort_run(state, index, step, METHOD, exc)
        finally:
            self._emit("BodyExited", call_id, **{"class": step.cls, "method": step.method})

    def _run_advice(self, call_id, state: _Call, index, step):
        position = "before" if isinstance(step, RunBeforeAdvice) else "after"
        aspect = self.program.aspect(step.aspect)
        advice = aspect.advice(position)
        obj = self.heap[state.oid]
        _, target = lookup_method(self.program, obj.cls, state.plan.method)
        local = dict(zip(state.param_names, state.args))
        result = state.result if position == "after" else NO_RESULT
        env = Env(local, obj.fields, result, call=self._body_hook(state.oid))
        frame = _Frame(local, _param_kinds(target), position, all_fields(self.program, obj.cls),
                       result_kind=target.returns)
        self._emit("AdviceEntered", call_id, step=index, aspect=aspect.name, position=position)
        self._active.append(aspect.name)
        try:
            try:
                self._exec_block(advice.body, env, frame)
            except _Returned:
                pass
            except EvaluationError as exc:
                self._abort_run(state, index, step, advice_party(aspect.name, position), exc)
            state.args = [local[name] for name in state.param_names]
            if position == "after":
                state.result = env.result
        finally:
            self._active.remove(aspect.name)
            self._emit("AdviceExited", call_id, aspect=aspect.name, position=position)

    def run_advice(self, aspect: str, position: str, receiver: int, args: Sequence, result=None):
        """Run one advice body outside any plan; returns the rewritten (args, result)."""
        obj = self.heap[receiver]
        jp_method = self.program.aspect(aspect).pointcut.method
        plan = self.plan_for(obj.cls, jp_method)
        _, target = lookup_method(self.program, obj.cls, jp_method)
        state = _Call(receiver, plan, list(args), target.param_names, result)
        step = (RunBeforeAdvice if position == "before" else RunAfterAdvice)(aspect)
        self._calls += 1
        self._run_advice(self._calls, state, -1, step)
        return state.args, state.result

    def _abort_run(self, state, index, step, blamed: BlameParty, exc: EvaluationError):
        violation = self._violation(state, index, step, "EvaluationFault", blamed,
                                    f"{exc.code}: {exc.message}", span=exc.span)
        raise _Abort(violation) from None

    # statements ----------------------------------------------------------------

    def _exec_block(self, stmts, env: Env, frame: "_Frame") -> None:
        for stmt in stmts:
            self._exec(stmt, env, frame)
            if self.debug:
                self.heap.check_kinds(self.program)

    def _exec(self, stmt, env: Env, frame: "_Frame") -> None:
        if isinstance(stmt, VarDecl):
            value = evaluate(stmt.init, env)
            _expect_kind(value, stmt.kind, stmt.span, stmt.name)
            frame.local[stmt.name] = value
            frame.kinds[stmt.name] = stmt.kind
        elif isinstance(stmt, Assign):
            self._assign(stmt, evaluate(stmt.value, env), env, frame)
        elif isinstance(stmt, If):
            cond = evaluate(stmt.cond, env)
            _expect_kind(cond, "bool", stmt.cond.span, "if condition")
            self._exec_block(stmt.then if cond else stmt.orelse, env, frame)
        elif isinstance(stmt, Return):
            raise _Returned(None if stmt.value is None else evaluate(stmt.value, env))
        elif isinstance(stmt, ExprStmt):
            evaluate(stmt.expr, env)
        else:
            raise TypeError(f"not a statement: {stmt!r}")

    def _assign(self, stmt: Assign, value, env: Env, frame: "_Frame") -> None:
        target = stmt.target
        if isinstance(target, ResultRef):
            if frame.result_kind is not None:
                _expect_kind(value, frame.result_kind, stmt.span, "result")
            env.result = value
        elif isinstance(target, Name) and target.ident in frame.local:
            _expect_kind(value, frame.kinds[target.ident], stmt.span, target.ident)
            frame.local[target.ident] = value
        else:
            name = target.name if isinstance(target, FieldRef) else target.ident
            decl = frame.fields.get(name)
            if decl is None:
                raise KindMismatch(f"no assignable {name!r}", stmt.span)
            _expect_kind(value, decl.kind, stmt.span, name)
            env.fields[name] = value


@dataclass
class _Frame:
    local: dict
    kinds: dict
    where: str  # "method" | "before" | "after"
    fields: dict = field(default_factory=dict)
    result_kind: Optional[str] = None


def _param_kinds(method) -> dict:
    return {p.name: p.kind for p in method.params}


def _expect_kind(value, kind: str, span, what: str) -> None:
    if kind_of(value) != kind:
        raise KindMismatch(f"{what} expects {kind}, got {kind_of(value)}", span)


# -- module-level entry points -------------------------------------------------


def execute_call(program: Program, heap: Heap, receiver: int, method: str, args: Sequence = (),
                 mode: str = CATEGORIZED, debug: bool = False):
    """Run one call on ``heap`` (mutated in place).  Returns (outcome, heap, trace)."""
    engine = Engine(program, mode, heap, debug)
    outcome = engine.execute_call(receiver, method, args)
    return outcome, heap, engine.trace


@dataclass(frozen=True)
class ScenarioCall:
    index: int
    var: str
    cls: str
    method: str
    args: tuple
    outcome: CallOutcome
    line: int = 0

    def to_json(self) -> dict:
        data = {
            "index": self.index,
            "line": self.line,
            "receiver": self.var,
            "class": self.cls,
            "method": self.method,
            "args": list(self.args),
            "status": "ok" if self.outcome.ok else ("violation" if self.outcome.violation else "error"),
            "result": self.outcome.result,
        }
        if self.outcome.violation is not None:
            data["violation"] = self.outcome.violation.to_json()
        if self.outcome.error is not None:
            data["error"] = self.outcome.error
        return data


@dataclass
class ScenarioReport:
    calls: list[ScenarioCall]
    trace: list[TraceEvent]
    heap: Heap
    mode: str = CATEGORIZED

    @property
    def violations(self) -> list[Violation]:
        return [c.outcome.violation for c in self.calls if c.outcome.violation is not None]

    @property
    def ok(self) -> bool:
        return all(c.outcome.ok for c in self.calls)

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "ok": self.ok,
            "calls": [c.to_json() for c in self.calls],
            "heap": self.heap.to_json(),
        }


def execute_scenario(program: Program, scenario: Scenario, mode: str = CATEGORIZED,
                     debug: bool = False) -> ScenarioReport:
    """Run every call of ``scenario`` in order against one fresh heap.

    A violation or engine error in one call is recorded and the next call
    still runs.
    """
    check_scenario(program, scenario)
    engine = Engine(program, mode, debug=debug)
    objects: dict[str, int] = {}
    calls: list[ScenarioCall] = []
    for cmd in scenario.commands:
        if isinstance(cmd, NewObject):
            objects[cmd.var] = engine.new(cmd.cls)
            continue
        assert isinstance(cmd, CallCommand)
        oid = objects[cmd.var]
        try:
            outcome = engine.execute_call(oid, cmd.method, cmd.args)
        except (EngineError, EvaluationError) as exc:
            outcome = CallOutcome(error=f"{type(exc).__name__}: {exc}")
        calls.append(ScenarioCall(len(calls), cmd.var, engine.heap[oid].cls, cmd.method, cmd.args, outcome,
                                  cmd.line))
    return ScenarioReport(calls, engine.trace, engine.heap, mode)
