"""Canonical source rendering of AST nodes, plus a JSON form with spans."""

from __future__ import annotations

import json

from .syntax import (
    AdviceDef,
    AspectDef,
    Assign,
    Binary,
    BoolLit,
    Call,
    ClassDef,
    ExprStmt,
    FieldRef,
    If,
    IntLit,
    MethodDef,
    Name,
    Old,
    Program,
    Return,
    ResultRef,
    StrLit,
    Unary,
    VarDecl,
)

_PREC = {
    "||": 1, "&&": 2, "==": 3, "!=": 3, "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5, "*": 6, "/": 6, "%": 6,
}
_UNARY_PREC = 7
_ATOM_PREC = 8


def _prec(expr) -> int:
    if isinstance(expr, Binary):
        return _PREC[expr.op]
    if isinstance(expr, Unary):
        return _UNARY_PREC
    return _ATOM_PREC


def quote(value: str) -> str:
    escaped = value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
    return f'"{escaped}"'


def format_literal(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return quote(value)
    return str(value)


def format_expr(expr) -> str:
    if isinstance(expr, IntLit):
        return str(expr.value)
    if isinstance(expr, StrLit):
        return quote(expr.value)
    if isinstance(expr, BoolLit):
        return "true" if expr.value else "false"
    if isinstance(expr, Name):
        return expr.ident
    if isinstance(expr, ResultRef):
        return "result"
    if isinstance(expr, Old):
        return f"old({format_expr(expr.expr)})"
    if isinstance(expr, FieldRef):
        return f"{_wrap(expr.obj, _ATOM_PREC)}.{expr.name}"
    if isinstance(expr, Call):
        args = ", ".join(format_expr(a) for a in expr.args)
        if expr.receiver is None:
            return f"{expr.method}({args})"
        return f"{_wrap(expr.receiver, _ATOM_PREC)}.{expr.method}({args})"
    if isinstance(expr, Unary):
        return f"{expr.op}{_wrap(expr.operand, _UNARY_PREC)}"
    if isinstance(expr, Binary):
        prec = _PREC[expr.op]
        left = _wrap(expr.left, prec)
        right = _wrap(expr.right, prec + 1)
        return f"{left} {expr.op} {right}"
    raise TypeError(f"not an expression: {expr!r}")


def _wrap(expr, min_prec: int) -> str:
    text = format_expr(expr)
    return f"({text})" if _prec(expr) < min_prec else text


def _block(stmts, indent: int) -> list[str]:
    lines = []
    pad = "  " * indent
    for stmt in stmts:
        if isinstance(stmt, VarDecl):
            lines.append(f"{pad}var {stmt.name}: {stmt.kind} = {format_expr(stmt.init)};")
        elif isinstance(stmt, Assign):
            lines.append(f"{pad}{format_expr(stmt.target)} = {format_expr(stmt.value)};")
        elif isinstance(stmt, Return):
            lines.append(f"{pad}return;" if stmt.value is None else f"{pad}return {format_expr(stmt.value)};")
        elif isinstance(stmt, ExprStmt):
            lines.append(f"{pad}{format_expr(stmt.expr)};")
        elif isinstance(stmt, If):
            lines.append(f"{pad}if ({format_expr(stmt.cond)}) {{")
            lines.extend(_block(stmt.then, indent + 1))
            if stmt.orelse:
                lines.append(f"{pad}}} else {{")
                lines.extend(_block(stmt.orelse, indent + 1))
            lines.append(f"{pad}}}")
        else:
            raise TypeError(f"not a statement: {stmt!r}")
    return lines


def _contracts(requires, ensures, indent: int) -> list[str]:
    pad = "  " * indent
    return [f"{pad}requires {format_expr(e)}" for e in requires] + [
        f"{pad}ensures {format_expr(e)}" for e in ensures
    ]


def format_method(method: MethodDef, indent: int = 1) -> list[str]:
    pad = "  " * indent
    params = ", ".join(f"{p.name}: {p.kind}" for p in method.params)
    head = f"{pad}method {method.name}({params})"
    if method.returns:
        head += f" returns {method.returns}"
    lines = [head, *_contracts(method.requires, method.ensures, indent + 1), pad + "{"]
    lines.extend(_block(method.body, indent + 1))
    lines.append(pad + "}")
    return lines


def format_class(cls: ClassDef) -> list[str]:
    head = f"class {cls.name}" + (f" extends {cls.supertype}" if cls.supertype else "") + " {"
    lines = [head]
    for decl in cls.fields:
        init = f" = {format_literal(decl.init)}" if decl.init is not None else ""
        lines.append(f"  var {decl.name}: {decl.kind}{init};")
    for method in cls.methods.values():
        lines.extend(format_method(method))
    lines.append("}")
    return lines


def format_advice(advice: AdviceDef) -> list[str]:
    lines = [f"  {advice.position}", *_contracts(advice.requires, advice.ensures, 2), "  {"]
    lines.extend(_block(advice.body, 2))
    lines.append("  }")
    return lines


def format_aspect(aspect: AspectDef) -> list[str]:
    head = f"{aspect.category} aspect {aspect.name} {{" if aspect.category else f"aspect {aspect.name} {{"
    lines = [head, f"  pointcut {aspect.pointcut};"]
    for advice in (aspect.before, aspect.after):
        if advice is not None:
            lines.extend(format_advice(advice))
    lines.append("}")
    return lines


def format_program(program: Program) -> str:
    chunks = [format_class(c) for c in program.classes.values()]
    chunks += [format_aspect(a) for a in program.aspects]
    return "\n\n".join("\n".join(chunk) for chunk in chunks) + ("\n" if chunks else "")


def to_data(node):
    """Plain-data form of any AST value, spans included, for canonical JSON."""
    if hasattr(node, "__dataclass_fields__"):
        data = {"node": type(node).__name__}
        for name in node.__dataclass_fields__:
            data[name] = to_data(getattr(node, name))
        return data
    if isinstance(node, dict):
        return {k: to_data(v) for k, v in node.items()}
    if isinstance(node, (list, tuple)):
        return [to_data(v) for v in node]
    return node


def canonical_json(node) -> str:
    return json.dumps(to_data(node), sort_keys=True, separators=(",", ":"))
