"""Static well-formedness of programs, class hierarchy queries and pointcut binding."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Iterable, Optional

from .syntax import (
    NO_SPAN,
    AdviceDef,
    AspectDef,
    Assign,
    Call,
    ClassDef,
    FieldDecl,
    FieldRef,
    If,
    MethodDef,
    Name,
    Old,
    Program,
    Return,
    ResultRef,
    SourceSpan,
    VarDecl,
    children,
    walk,
    walk_block,
)

# Error codes.  The first six come straight from the model's contract; the rest
# cover name resolution and statement-level checks.
CYCLE = "CycleInHierarchy"
UNKNOWN_SUPERTYPE = "UnknownSupertype"
UNBOUND_POINTCUT = "UnboundPointcut"
IMPURE_ASSERTION = "ImpureAssertion"
MISSING_CATEGORY = "MissingCategory"
ARITY_MISMATCH = "ArityMismatchOnOverride"
ASPECT_ON_ASPECT = "AspectOnAspect"
EMPTY_ASPECT = "EmptyAspect"
DUPLICATE_FIELD = "DuplicateField"
DUPLICATE_PARAM = "DuplicateParam"
UNKNOWN_NAME = "UnknownName"
UNKNOWN_METHOD = "UnknownMethod"
MISPLACED_RESULT = "MisplacedResult"
MISPLACED_OLD = "MisplacedOld"
MISSING_RETURN = "MissingReturn"
RETURN_MISMATCH = "ReturnMismatch"
INVALID_ASSIGNMENT = "InvalidAssignment"
KIND_MISMATCH = "KindMismatch"

_DEFAULTS = {"int": 0, "bool": False, "string": ""}
_PY_KINDS = {"int": int, "bool": bool, "string": str}


@dataclass(frozen=True)
class StaticError:
    code: str
    message: str
    span: SourceSpan = NO_SPAN

    def __str__(self):
        return f"{self.span}: {self.code}: {self.message}"


class ValidationError(Exception):
    def __init__(self, errors: list[StaticError]):
        super().__init__("\n".join(str(e) for e in errors))
        self.errors = errors


class NoSuchClass(LookupError):
    pass


class NoSuchMethod(LookupError):
    pass


def kind_of(value) -> str:
    """Value-kind of a runtime value (bool is checked before int on purpose)."""
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, int):
        return "int"
    if isinstance(value, str):
        return "string"
    raise TypeError(f"not a language value: {value!r}")


def default_value(kind: str):
    return _DEFAULTS[kind]


# -- hierarchy queries -------------------------------------------------------


def ancestry(program: Program, cls: str) -> list[str]:
    """Class names from ``cls`` up to its root.  Stops on cycles or unknown names."""
    if cls not in program.classes:
        raise NoSuchClass(cls)
    chain = [cls]
    current = program.classes[cls].supertype
    while current is not None and current in program.classes and current not in chain:
        chain.append(current)
        current = program.classes[current].supertype
    return chain


def is_subclass(program: Program, sub: str, sup: str) -> bool:
    return sub in program.classes and sup in ancestry(program, sub)


def subclasses(program: Program, cls: str) -> list[str]:
    """``cls`` and every class that has it as an ancestor, in declaration order."""
    return [name for name in program.classes if is_subclass(program, name, cls)]


def all_fields(program: Program, cls: str) -> dict[str, FieldDecl]:
    """Fields visible on ``cls`` including inherited ones, root fields first."""
    fields: dict[str, FieldDecl] = {}
    for name in reversed(ancestry(program, cls)):
        for decl in program.classes[name].fields:
            fields.setdefault(decl.name, decl)
    return fields


def initial_fields(program: Program, cls: str) -> dict[str, object]:
    return {
        name: decl.init if decl.init is not None else default_value(decl.kind)
        for name, decl in all_fields(program, cls).items()
    }


def lookup_method(program: Program, cls: str, name: str) -> Optional[tuple[str, MethodDef]]:
    """Dynamic dispatch: the most-derived definition of ``name`` visible on ``cls``."""
    for owner in ancestry(program, cls):
        method = program.classes[owner].methods.get(name)
        if method is not None:
            return owner, method
    return None


def resolve_override_chain(program: Program, cls: str, method: str) -> list[tuple[str, MethodDef]]:
    """Every definition of ``method`` from the dynamic type ``cls`` up to the root.

    The first entry is the definition that runs for a receiver of class
    ``cls``; each later entry is the definition it overrides.
    """
    chain = [
        (owner, program.classes[owner].methods[method])
        for owner in ancestry(program, cls)
        if method in program.classes[owner].methods
    ]
    if not chain:
        raise NoSuchMethod(f"{cls}.{method}")
    return chain


# -- pointcuts ---------------------------------------------------------------


def pointcut_matches(program: Program, aspect: AspectDef, cls: str, method: str) -> bool:
    pc = aspect.pointcut
    if pc.method != method or cls not in program.classes:
        return False
    if lookup_method(program, cls, method) is None:
        return False
    return pc.cls == "*" or is_subclass(program, cls, pc.cls)


def bind_pointcut(program: Program, aspect: AspectDef) -> tuple[tuple[str, str], ...]:
    return tuple(
        (cls, aspect.pointcut.method)
        for cls in program.classes
        if pointcut_matches(program, aspect, cls, aspect.pointcut.method)
    )


def matching_aspects(program: Program, cls: str, method: str) -> tuple[AspectDef, ...]:
    """Aspects advising a call of ``method`` on a receiver of class ``cls``, by precedence."""
    return tuple(a for a in program.aspects if pointcut_matches(program, a, cls, method))


# -- purity ------------------------------------------------------------------


def _declared_locals(method: MethodDef) -> set[str]:
    return {s.name for s in walk_block(method.body) if isinstance(s, VarDecl)} | set(method.param_names)


def _writes_fields(method: MethodDef) -> bool:
    local = _declared_locals(method)
    for node in walk_block(method.body):
        if isinstance(node, Assign):
            if isinstance(node.target, FieldRef):
                return True
            if isinstance(node.target, Name) and node.target.ident not in local:
                return True
    return False


def _called_names(stmts) -> set[str]:
    return {n.method for n in walk_block(stmts) if isinstance(n, Call)}


def pure_methods(program: Program) -> set[tuple[str, str]]:
    """(class, method) definitions whose bodies cannot write object state.

    Greatest fixed point: a method is pure when it writes no field and every
    method it calls (under any override reachable from its class) is pure.
    """
    defs = {
        (cls.name, m.name): m for cls in program.classes.values() for m in cls.methods.values()
    }
    pure = {key for key, m in defs.items() if not _writes_fields(m)}
    changed = True
    while changed:
        changed = False
        for key in list(pure):
            cls, _ = key
            for callee in _called_names(defs[key].body):
                if not _callable_pure(program, pure, [cls], callee):
                    pure.discard(key)
                    changed = True
                    break
    return pure


def _callable_pure(program: Program, pure: set, classes: Iterable[str], method: str) -> bool:
    """True when every definition a call of ``method`` could dispatch to is pure."""
    for cls in classes:
        if cls not in program.classes:
            return False
        targets = set()
        for sub in subclasses(program, cls):
            found = lookup_method(program, sub, method)
            if found is None:
                return False
            targets.add((found[0], method))
        if not targets or not targets <= pure:
            return False
    return True


# -- validation --------------------------------------------------------------


@dataclass
class _Scope:
    """What an expression or statement may refer to."""

    names: set[str]  # params and locals
    fields: dict[str, FieldDecl]  # bare-name field access (methods only)
    receiver: str  # "this" in methods, "target" in advice
    receiver_classes: tuple[str, ...]
    result: bool = False  # `result` readable
    old: bool = False  # `old(...)` allowed
    assertion: bool = False
    locals: set[str] = dataclasses.field(default_factory=set)


class _Validator:
    def __init__(self, program: Program):
        self.program = program
        self.errors: list[StaticError] = []
        self.pure: set[tuple[str, str]] = set()

    def error(self, code, message, span):
        self.errors.append(StaticError(code, message, span or NO_SPAN))

    # hierarchy -------------------------------------------------------------

    def check_hierarchy(self) -> bool:
        """Reports hierarchy errors; False when a cycle makes further checks meaningless."""
        ok = True
        classes = self.program.classes
        for cls in classes.values():
            if cls.supertype is not None and cls.supertype not in classes:
                kind = "an aspect" if any(a.name == cls.supertype for a in self.program.aspects) else "unknown"
                self.error(UNKNOWN_SUPERTYPE, f"{cls.name} extends {kind} type {cls.supertype!r}", cls.span)
        reported: set[str] = set()
        for cls in classes.values():
            seen = [cls.name]
            current = cls.supertype
            while current is not None and current in classes:
                if current in seen:
                    cycle = seen[seen.index(current):]
                    if not reported & set(cycle):
                        self.error(CYCLE, "inheritance cycle: " + " -> ".join(cycle + [current]), cls.span)
                        reported |= set(cycle)
                    ok = False
                    break
                seen.append(current)
                current = classes[current].supertype
        return ok

    def check_classes(self):
        program = self.program
        for cls in program.classes.values():
            inherited = {}
            if cls.supertype in program.classes:
                inherited = all_fields(program, cls.supertype)
            local: set[str] = set()
            for decl in cls.fields:
                if decl.name in local or decl.name in inherited:
                    self.error(DUPLICATE_FIELD, f"field {decl.name!r} already declared for {cls.name}", decl.span)
                local.add(decl.name)
                if decl.init is not None and _PY_KINDS[decl.kind] is not type(decl.init):
                    self.error(KIND_MISMATCH, f"initializer of {decl.name!r} is not a {decl.kind}", decl.span)
            for method in cls.methods.values():
                self.check_override(cls, method)
                self.check_method(cls, method)

    def check_override(self, cls: ClassDef, method: MethodDef):
        if cls.supertype not in self.program.classes:
            return
        overridden = lookup_method(self.program, cls.supertype, method.name)
        if overridden is None:
            return
        owner, base = overridden
        if method.signature != base.signature:
            self.error(
                ARITY_MISMATCH,
                f"{cls.name}.{method.name}{_sig(method)} does not match overridden "
                f"{owner}.{method.name}{_sig(base)}",
                method.span,
            )

    # methods ---------------------------------------------------------------

    def check_method(self, cls: ClassDef, method: MethodDef):
        names = [p.name for p in method.params]
        for dup in {n for n in names if names.count(n) > 1}:
            self.error(DUPLICATE_PARAM, f"parameter {dup!r} repeated in {cls.name}.{method.name}", method.span)
        fields = all_fields(self.program, cls.name)
        base = dict(names=set(names), fields=fields, receiver="this", receiver_classes=(cls.name,))
        for clause in method.requires:
            self.check_expr(clause, _Scope(**base, assertion=True), f"{cls.name}.{method.name} requires")
        for clause in method.ensures:
            scope = _Scope(**base, result=method.returns is not None, old=True, assertion=True)
            self.check_expr(clause, scope, f"{cls.name}.{method.name} ensures")
        self.check_block(method.body, _Scope(**base), returns=method.returns, where=f"{cls.name}.{method.name}")
        if method.returns is not None and not _always_returns(method.body):
            self.error(MISSING_RETURN, f"{cls.name}.{method.name} can finish without returning a {method.returns}",
                       method.span)

    # aspects ---------------------------------------------------------------

    def check_aspects(self) -> dict[str, tuple[tuple[str, str], ...]]:
        program = self.program
        bindings = {}
        for aspect in program.aspects:
            if aspect.category is None:
                self.error(MISSING_CATEGORY, f"aspect {aspect.name} has no category", aspect.span)
            if aspect.before is None and aspect.after is None:
                self.error(EMPTY_ASPECT, f"aspect {aspect.name} declares no advice", aspect.span)
            pc = aspect.pointcut
            if any(a.name == pc.cls for a in program.aspects):
                self.error(ASPECT_ON_ASPECT, f"pointcut {pc} of {aspect.name} targets an aspect", pc.span)
                continue
            bound = bind_pointcut(program, aspect)
            if not bound:
                self.error(UNBOUND_POINTCUT, f"pointcut {pc} of {aspect.name} matches no method", pc.span)
                continue
            bindings[aspect.name] = bound
            for advice in (aspect.before, aspect.after):
                if advice is not None:
                    self.check_advice(aspect, advice, bound)
        return bindings

    def check_advice(self, aspect: AspectDef, advice: AdviceDef, bound):
        program = self.program
        methods = [lookup_method(program, cls, m)[1] for cls, m in bound]
        common = set(methods[0].param_names)
        for m in methods[1:]:
            common &= set(m.param_names)
        common_fields = None
        for cls, _ in bound:
            names = all_fields(program, cls)
            common_fields = names if common_fields is None else {
                k: v for k, v in common_fields.items() if k in names
            }
        classes = tuple(cls for cls, _ in bound)
        has_result = advice.position == "after" and all(m.returns is not None for m in methods)
        where = f"{aspect.name}.{advice.position}"
        base = dict(names=set(common), fields={}, receiver="target", receiver_classes=classes)
        self._target_fields = common_fields or {}
        for clause in advice.requires:
            self.check_expr(clause, _Scope(**base, result=has_result, assertion=True), f"{where} requires")
        for clause in advice.ensures:
            self.check_expr(clause, _Scope(**base, result=has_result, old=True, assertion=True), f"{where} ensures")
        self.check_block(advice.body, _Scope(**base, result=has_result), returns=None, where=where,
                         advice=advice.position)
        self._target_fields = None

    # expressions -----------------------------------------------------------

    _target_fields: Optional[dict] = None

    def receiver_fields(self, scope: _Scope) -> dict:
        if scope.receiver == "target" and self._target_fields is not None:
            return self._target_fields
        return scope.fields

    def check_expr(self, expr, scope: _Scope, where: str, in_old: bool = False):
        if isinstance(expr, Name):
            ident = expr.ident
            if ident in scope.names or ident in scope.fields:
                return
            if ident in ("this", "target"):
                self.error(UNKNOWN_NAME, f"{ident!r} can only be used to access a member in {where}", expr.span)
            else:
                self.error(UNKNOWN_NAME, f"unknown name {ident!r} in {where}", expr.span)
            return
        if isinstance(expr, ResultRef):
            if not scope.result:
                self.error(MISPLACED_RESULT, f"'result' is not available in {where}", expr.span)
            return
        if isinstance(expr, Old):
            if not scope.old or in_old:
                self.error(MISPLACED_OLD, f"'old' is only allowed (un-nested) in postconditions; {where}", expr.span)
            self.check_expr(expr.expr, scope, where, in_old=True)
            return
        if isinstance(expr, FieldRef):
            if isinstance(expr.obj, Name) and expr.obj.ident == scope.receiver:
                if expr.name not in self.receiver_fields(scope):
                    self.error(UNKNOWN_NAME, f"no field {expr.name!r} on {scope.receiver} in {where}", expr.span)
            else:
                self.error(UNKNOWN_NAME, f"field access must go through {scope.receiver!r} in {where}", expr.span)
            return
        if isinstance(expr, Call):
            self.check_call(expr, scope, where)
            for arg in expr.args:
                self.check_expr(arg, scope, where, in_old)
            return
        for child in children(expr):
            self.check_expr(child, scope, where, in_old)

    def check_call(self, call: Call, scope: _Scope, where: str):
        if call.receiver is None:
            if scope.receiver != "this":
                self.error(UNKNOWN_METHOD, f"unqualified call {call.method}() in {where}; use target.{call.method}()",
                           call.span)
                return
        elif not (isinstance(call.receiver, Name) and call.receiver.ident == scope.receiver):
            self.error(UNKNOWN_METHOD, f"calls must go through {scope.receiver!r} in {where}", call.span)
            return
        for cls in scope.receiver_classes:
            found = lookup_method(self.program, cls, call.method)
            if found is None:
                self.error(UNKNOWN_METHOD, f"{cls} has no method {call.method!r} ({where})", call.span)
                return
            if len(found[1].params) != len(call.args):
                self.error(UNKNOWN_METHOD, f"{found[0]}.{call.method} takes {len(found[1].params)} "
                                           f"argument(s), {len(call.args)} given ({where})", call.span)
                return
            if scope.assertion and found[1].returns is None:
                self.error(IMPURE_ASSERTION, f"{call.method}() returns nothing and cannot appear in {where}",
                           call.span)
                return
        if scope.assertion and not _callable_pure(self.program, self.pure, scope.receiver_classes, call.method):
            self.error(IMPURE_ASSERTION, f"{call.method}() may write object state; not allowed in {where}", call.span)

    # statements ------------------------------------------------------------

    def check_block(self, stmts, scope: _Scope, returns, where, advice: Optional[str] = None):
        scope = dataclasses.replace(scope, names=set(scope.names), locals=set(scope.locals))
        for stmt in stmts:
            self.check_stmt(stmt, scope, returns, where, advice)

    def check_stmt(self, stmt, scope: _Scope, returns, where, advice):
        if isinstance(stmt, VarDecl):
            self.check_expr(stmt.init, scope, where)
            scope.names.add(stmt.name)
            scope.locals.add(stmt.name)
        elif isinstance(stmt, Assign):
            self.check_expr(stmt.value, scope, where)
            target = stmt.target
            if isinstance(target, ResultRef):
                if advice != "after" or not scope.result:
                    self.error(INVALID_ASSIGNMENT, f"'result' can only be rewritten by after advice ({where})",
                               target.span)
            elif isinstance(target, Name) and advice == "after" and target.ident not in scope.locals:
                self.error(INVALID_ASSIGNMENT, f"after advice may not rewrite argument {target.ident!r} ({where})",
                           target.span)
            else:
                self.check_expr(target, scope, where)
        elif isinstance(stmt, If):
            self.check_expr(stmt.cond, scope, where)
            self.check_block(stmt.then, scope, returns, where, advice)
            self.check_block(stmt.orelse, scope, returns, where, advice)
        elif isinstance(stmt, Return):
            if stmt.value is not None:
                self.check_expr(stmt.value, scope, where)
                if returns is None:
                    self.error(RETURN_MISMATCH, f"{where} does not return a value", stmt.span)
            elif returns is not None:
                self.error(RETURN_MISMATCH, f"{where} must return a {returns}", stmt.span)
        else:
            self.check_expr(stmt.expr, scope, where)

    def run(self) -> Program:
        acyclic = self.check_hierarchy()
        bindings = {}
        if acyclic:
            self.pure = pure_methods(self.program)
            self.check_classes()
            bindings = self.check_aspects()
        if self.errors:
            raise ValidationError(self.errors)
        return dataclasses.replace(self.program, bindings=bindings, validated=True)


def _sig(method: MethodDef) -> str:
    params = ", ".join(p.kind for p in method.params)
    return f"({params})" + (f" returns {method.returns}" if method.returns else "")


def _always_returns(stmts) -> bool:
    for stmt in stmts:
        if isinstance(stmt, Return):
            return True
        if isinstance(stmt, If) and _always_returns(stmt.then) and _always_returns(stmt.orelse):
            return True
    return False


def validate_program(program: Program) -> Program:
    """Check every static rule and return the program with pointcuts bound.

    All violations are collected; :class:`ValidationError` carries the full
    list.  Validating an already validated program returns an equal program.
    """
    return _Validator(program).run()
