"""Expression evaluation, assertion checks and runtime implications.

The same evaluator runs contract clauses and the expressions inside method and
advice bodies.  Contract evaluation never writes: calls reachable from an
assertion were proven pure by the validator, and the ``call`` hook an engine
installs for assertion environments runs bodies without weaving.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

from .printer import format_expr
from .syntax import (
    Binary,
    BoolLit,
    Call,
    FieldRef,
    IntLit,
    Name,
    Old,
    ResultRef,
    SourceSpan,
    StrLit,
    Unary,
)


class _NoResult:
    def __repr__(self):
        return "NO_RESULT"

    def __copy__(self):
        return self

    def __deepcopy__(self, memo):
        return self


NO_RESULT = _NoResult()

RECEIVERS = ("this", "target")


class EvaluationError(Exception):
    code = "EvaluationFault"

    def __init__(self, message: str, span: Optional[SourceSpan] = None):
        super().__init__(message)
        self.message = message
        self.span = span


class UnboundName(EvaluationError):
    code = "UnboundName"


class KindMismatch(EvaluationError):
    code = "KindMismatch"


class DivisionByZero(EvaluationError):
    code = "DivisionByZero"


CallHook = Callable[[str, list, "Env"], object]


@dataclass
class Env:
    """Bindings visible to an expression.

    ``params`` holds parameters (and, for bodies, locals); ``fields`` is the
    receiver's field map, reachable as bare names or through ``this.`` /
    ``target.``.  ``old`` is the pre-state snapshot used by ``old(...)``.
    """

    params: Mapping[str, object] = field(default_factory=dict)
    fields: Mapping[str, object] = field(default_factory=dict)
    result: object = NO_RESULT
    old: Optional["Env"] = None
    call: Optional[CallHook] = None

    def lookup(self, name: str, span=None):
        if name in self.params:
            return self.params[name]
        if name in self.fields:
            return self.fields[name]
        raise UnboundName(f"unbound name {name!r}", span)

    def field(self, name: str, span=None):
        try:
            return self.fields[name]
        except KeyError:
            raise UnboundName(f"no field {name!r}", span) from None

    def snapshot(self) -> dict:
        """Comparable copy of everything an evaluation could observe."""
        return {
            "params": copy.deepcopy(dict(self.params)),
            "fields": copy.deepcopy(dict(self.fields)),
            "result": self.result,
            "old": self.old.snapshot() if self.old is not None else None,
        }


@dataclass(frozen=True)
class CheckOutcome:
    passed: bool
    assertion_id: str = ""
    failing_span: Optional[SourceSpan] = None
    failing_text: Optional[str] = None
    witness: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.passed and self.failing_span is not None:
            raise ValueError("a passed check has no failing span")


def _kind(value) -> str:
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, int):
        return "int"
    if isinstance(value, str):
        return "string"
    return type(value).__name__


def _need(value, kind: str, expr, what: str):
    if _kind(value) != kind:
        raise KindMismatch(f"{what} expects {kind}, got {_kind(value)} ({format_expr(expr)})", expr.span)
    return value


def _trunc_div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


_ARITH = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": _trunc_div,
    "%": lambda a, b: a - b * _trunc_div(a, b),
}
_ORDER = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def _record(witness, expr, value):
    if witness is not None:
        witness.setdefault(format_expr(expr), value)


def evaluate(expr, env: Env, witness: Optional[dict] = None):
    """Evaluate ``expr`` in ``env``.

    When ``witness`` is given, the value of every name, field, ``result``,
    ``old(...)``, call and arithmetic subterm read along the way is recorded
    under its source text.
    """
    if isinstance(expr, (IntLit, StrLit, BoolLit)):
        return expr.value
    if isinstance(expr, Name):
        value = env.lookup(expr.ident, expr.span)
        _record(witness, expr, value)
        return value
    if isinstance(expr, ResultRef):
        if env.result is NO_RESULT:
            raise UnboundName("'result' is not bound here", expr.span)
        _record(witness, expr, env.result)
        return env.result
    if isinstance(expr, Old):
        if env.old is None:
            raise UnboundName("no pre-state snapshot for old(...)", expr.span)
        value = evaluate(expr.expr, env.old)
        _record(witness, expr, value)
        return value
    if isinstance(expr, FieldRef):
        if not (isinstance(expr.obj, Name) and expr.obj.ident in RECEIVERS):
            raise UnboundName(f"cannot access field through {format_expr(expr.obj)}", expr.span)
        value = env.field(expr.name, expr.span)
        _record(witness, expr, value)
        return value
    if isinstance(expr, Call):
        if env.call is None:
            raise UnboundName(f"no method context for {expr.method}()", expr.span)
        args = [evaluate(a, env, witness) for a in expr.args]
        value = env.call(expr.method, args, env)
        _record(witness, expr, value)
        return value
    if isinstance(expr, Unary):
        operand = evaluate(expr.operand, env, witness)
        if expr.op == "!":
            return not _need(operand, "bool", expr.operand, "'!'")
        return -_need(operand, "int", expr.operand, "unary '-'")
    if isinstance(expr, Binary):
        return _binary(expr, env, witness)
    raise TypeError(f"not an expression: {expr!r}")


def _binary(expr: Binary, env: Env, witness):
    op = expr.op
    left = evaluate(expr.left, env, witness)
    if op in ("&&", "||"):
        _need(left, "bool", expr.left, f"'{op}'")
        if (op == "&&" and not left) or (op == "||" and left):
            return left
        return _need(evaluate(expr.right, env, witness), "bool", expr.right, f"'{op}'")
    right = evaluate(expr.right, env, witness)
    if op in ("==", "!="):
        if _kind(left) != _kind(right):
            raise KindMismatch(f"cannot compare {_kind(left)} with {_kind(right)} ({format_expr(expr)})", expr.span)
        return (left == right) if op == "==" else (left != right)
    if op == "+" and isinstance(left, str) and isinstance(right, str):
        value = left + right
    else:
        _need(left, "int", expr.left, f"'{op}'")
        _need(right, "int", expr.right, f"'{op}'")
        if op in _ORDER:
            return _ORDER[op](left, right)
        if op in ("/", "%") and right == 0:
            raise DivisionByZero(f"division by zero in {format_expr(expr)}", expr.span)
        value = _ARITH[op](left, right)
    _record(witness, expr, value)
    return value


def _culprit(expr, env: Env):
    """Smallest subterm that makes a false boolean expression false."""
    if isinstance(expr, Binary) and expr.op == "&&":
        if not evaluate(expr.left, env):
            return _culprit(expr.left, env)
        return _culprit(expr.right, env)
    return expr


def _check_bool(expr, env: Env, witness: dict) -> bool:
    value = evaluate(expr, env, witness)
    if not isinstance(value, bool):
        raise KindMismatch(f"assertion must be bool, got {_kind(value)} ({format_expr(expr)})", expr.span)
    return value


def _failed(expr, env, assertion_id, witness) -> CheckOutcome:
    culprit = _culprit(expr, env)
    return CheckOutcome(False, assertion_id, culprit.span, format_expr(culprit), witness)


def eval_assert(expr, env: Env, assertion_id: str = "", debug: bool = False) -> CheckOutcome:
    """Check a single assertion on the current state."""
    before = env.snapshot() if debug else None
    witness: dict = {}
    passed = _check_bool(expr, env, witness)
    outcome = CheckOutcome(True, assertion_id, witness=witness) if passed else _failed(expr, env, assertion_id, witness)
    if debug and env.snapshot() != before:
        raise AssertionError(f"assertion {assertion_id or format_expr(expr)} changed its environment")
    return outcome


def eval_implication(antecedent, consequent, env: Env, consequent_env: Optional[Env] = None,
                     assertion_id: str = "", debug: bool = False) -> CheckOutcome:
    """Check ``antecedent -> consequent`` on the single current state.

    The consequent is only evaluated when the antecedent holds.  Each side may
    see its own environment (parameter names and ``old`` snapshots differ
    between a method and its advice).
    """
    consequent_env = env if consequent_env is None else consequent_env
    before = (env.snapshot(), consequent_env.snapshot()) if debug else None
    witness: dict = {}
    outcome = CheckOutcome(True, assertion_id, witness=witness)
    if _check_bool(antecedent, env, witness):
        if not _check_bool(consequent, consequent_env, witness):
            outcome = _failed(consequent, consequent_env, assertion_id, witness)
    if debug and (env.snapshot(), consequent_env.snapshot()) != before:
        raise AssertionError(f"implication {assertion_id} changed its environment")
    return outcome
