"""AST node types for `.dbc` programs.

Every node carries a :class:`SourceSpan`.  Spans are excluded from equality so
two trees parsed from differently formatted sources compare equal when their
structure matches.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

VALUE_KINDS = ("int", "bool", "string")
CATEGORIES = ("agnostic", "obedient", "rebellious")


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int
    length: int

    def __post_init__(self):
        if self.line < 1 or self.column < 1 or self.length < 0:
            raise ValueError(f"invalid span {self!r}")

    def __str__(self):
        return f"{self.file}:{self.line}:{self.column}"

    def to_json(self) -> dict:
        return {"file": self.file, "line": self.line, "column": self.column, "length": self.length}


NO_SPAN = SourceSpan("<builtin>", 1, 1, 0)


def _span():
    return field(default=NO_SPAN, compare=False, repr=False)


# -- expressions -------------------------------------------------------------


@dataclass(frozen=True)
class IntLit:
    value: int
    span: SourceSpan = _span()


@dataclass(frozen=True)
class StrLit:
    value: str
    span: SourceSpan = _span()


@dataclass(frozen=True)
class BoolLit:
    value: bool
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Name:
    """A bare identifier: local, parameter, field, `this` or `target`."""

    ident: str
    span: SourceSpan = _span()


@dataclass(frozen=True)
class ResultRef:
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Old:
    expr: "Expr"
    span: SourceSpan = _span()


@dataclass(frozen=True)
class FieldRef:
    obj: "Expr"
    name: str
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Call:
    receiver: Optional["Expr"]
    method: str
    args: tuple["Expr", ...]
    span: SourceSpan = _span()


Expr = Union[IntLit, StrLit, BoolLit, Name, ResultRef, Old, FieldRef, Unary, Binary, Call]

TRUE = BoolLit(True)


# -- statements --------------------------------------------------------------


@dataclass(frozen=True)
class VarDecl:
    name: str
    kind: str
    init: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Assign:
    target: Expr  # Name, FieldRef or ResultRef
    value: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class If:
    cond: Expr
    then: tuple["Stmt", ...]
    orelse: tuple["Stmt", ...] = ()
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Return:
    value: Optional[Expr]
    span: SourceSpan = _span()


@dataclass(frozen=True)
class ExprStmt:
    expr: Expr
    span: SourceSpan = _span()


Stmt = Union[VarDecl, Assign, If, Return, ExprStmt]


# -- declarations ------------------------------------------------------------


def conjoin(clauses: tuple[Expr, ...]) -> Expr:
    """Fold contract clauses into one `&&` chain; no clauses means `true`."""
    if not clauses:
        return TRUE
    expr = clauses[0]
    for clause in clauses[1:]:
        expr = Binary("&&", expr, clause, expr.span)
    return expr


@dataclass(frozen=True)
class Param:
    name: str
    kind: str
    span: SourceSpan = _span()


@dataclass(frozen=True)
class FieldDecl:
    name: str
    kind: str
    init: Optional[Union[int, bool, str]] = None
    span: SourceSpan = _span()


@dataclass(frozen=True)
class MethodDef:
    name: str
    params: tuple[Param, ...]
    returns: Optional[str]
    requires: tuple[Expr, ...]
    ensures: tuple[Expr, ...]
    body: tuple[Stmt, ...]
    span: SourceSpan = _span()

    @property
    def pre(self) -> Expr:
        return conjoin(self.requires)

    @property
    def post(self) -> Expr:
        return conjoin(self.ensures)

    @property
    def param_names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.params)

    @property
    def signature(self) -> tuple[tuple[str, ...], Optional[str]]:
        return tuple(p.kind for p in self.params), self.returns


@dataclass(frozen=True)
class ClassDef:
    name: str
    supertype: Optional[str]
    fields: tuple[FieldDecl, ...]
    methods: dict[str, MethodDef]
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Pointcut:
    cls: str  # class name or "*"
    method: str
    span: SourceSpan = _span()

    def __str__(self):
        return f"{self.cls}.{self.method}"


@dataclass(frozen=True)
class AdviceDef:
    position: str  # "before" | "after"
    requires: tuple[Expr, ...]
    ensures: tuple[Expr, ...]
    body: tuple[Stmt, ...]
    span: SourceSpan = _span()

    @property
    def pre(self) -> Expr:
        return conjoin(self.requires)

    @property
    def post(self) -> Expr:
        return conjoin(self.ensures)


@dataclass(frozen=True)
class AspectDef:
    name: str
    category: Optional[str]
    pointcut: Pointcut
    before: Optional[AdviceDef] = None
    after: Optional[AdviceDef] = None
    span: SourceSpan = _span()

    def advice(self, position: str) -> Optional[AdviceDef]:
        return self.before if position == "before" else self.after


@dataclass(frozen=True)
class Program:
    """A parsed program.

    ``bindings`` is empty until :func:`conaweave.model.validate_program` fills
    it with the ``(class, method)`` join points each aspect advises.
    """

    classes: dict[str, ClassDef] = field(default_factory=dict)
    aspects: tuple[AspectDef, ...] = ()
    bindings: dict[str, tuple[tuple[str, str], ...]] = field(default_factory=dict)
    validated: bool = False
    file: str = field(default="<input>", compare=False)

    def aspect(self, name: str) -> AspectDef:
        for aspect in self.aspects:
            if aspect.name == name:
                return aspect
        raise KeyError(name)


# -- traversal helpers -------------------------------------------------------


def children(node) -> list:
    """Direct sub-expressions / sub-statements of an expression or statement."""
    if isinstance(node, (IntLit, StrLit, BoolLit, Name, ResultRef)):
        return []
    if isinstance(node, Old):
        return [node.expr]
    if isinstance(node, FieldRef):
        return [node.obj]
    if isinstance(node, Unary):
        return [node.operand]
    if isinstance(node, Binary):
        return [node.left, node.right]
    if isinstance(node, Call):
        return ([node.receiver] if node.receiver is not None else []) + list(node.args)
    if isinstance(node, VarDecl):
        return [node.init]
    if isinstance(node, Assign):
        return [node.target, node.value]
    if isinstance(node, If):
        return [node.cond, *node.then, *node.orelse]
    if isinstance(node, Return):
        return [node.value] if node.value is not None else []
    if isinstance(node, ExprStmt):
        return [node.expr]
    raise TypeError(f"not an AST node: {node!r}")


def walk(node):
    """Pre-order iterator over a node and all its descendants."""
    stack = [node]
    while stack:
        current = stack.pop()
        yield current
        stack.extend(reversed(children(current)))


def walk_block(stmts):
    for stmt in stmts:
        yield from walk(stmt)
