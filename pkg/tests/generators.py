"""Random source generators shared by property and acceptance tests.

Expressions are produced twice in lockstep: once as `.dbc` text and once as
Python text, so the Python side serves as an oracle that never touches the
package's AST or evaluator.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

INT_VARS = ("x", "y", "z")
BOOL_VARS = ("b", "c")


@dataclass(frozen=True)
class GenExpr:
    dbc: str
    py: str


def _lit(rng: random.Random) -> GenExpr:
    n = rng.randint(-3, 9)
    text = str(n) if n >= 0 else f"(0 - {-n})"
    return GenExpr(text, f"({n})")


def gen_int(rng: random.Random, depth: int) -> GenExpr:
    if depth <= 0 or rng.random() < 0.3:
        if rng.random() < 0.5:
            v = rng.choice(INT_VARS)
            return GenExpr(v, v)
        return _lit(rng)
    roll = rng.random()
    if roll < 0.15:
        e = gen_int(rng, depth - 1)
        return GenExpr(f"-({e.dbc})", f"(-({e.py}))")
    op = rng.choice(("+", "-", "*"))
    a, b = gen_int(rng, depth - 1), gen_int(rng, depth - 1)
    return GenExpr(f"({a.dbc} {op} {b.dbc})", f"({a.py} {op} {b.py})")


def gen_bool(rng: random.Random, depth: int) -> GenExpr:
    if depth <= 0 or rng.random() < 0.2:
        roll = rng.random()
        if roll < 0.4:
            v = rng.choice(BOOL_VARS)
            return GenExpr(v, v)
        if roll < 0.55:
            lit = rng.choice((True, False))
            return GenExpr("true" if lit else "false", str(lit))
        return _compare(rng, 0)
    roll = rng.random()
    if roll < 0.35:
        return _compare(rng, depth - 1)
    if roll < 0.5:
        e = gen_bool(rng, depth - 1)
        return GenExpr(f"!({e.dbc})", f"(not ({e.py}))")
    if roll < 0.6:
        a, b = gen_bool(rng, depth - 1), gen_bool(rng, depth - 1)
        op = rng.choice(("==", "!="))
        return GenExpr(f"({a.dbc} {op} {b.dbc})", f"({a.py} {op} {b.py})")
    a, b = gen_bool(rng, depth - 1), gen_bool(rng, depth - 1)
    if rng.random() < 0.5:
        return GenExpr(f"({a.dbc} && {b.dbc})", f"({a.py} and {b.py})")
    return GenExpr(f"({a.dbc} || {b.dbc})", f"({a.py} or {b.py})")


def _compare(rng: random.Random, depth: int) -> GenExpr:
    op = rng.choice(("<", "<=", ">", ">=", "==", "!="))
    a, b = gen_int(rng, depth), gen_int(rng, depth)
    return GenExpr(f"({a.dbc} {op} {b.dbc})", f"({a.py} {op} {b.py})")


def gen_env(rng: random.Random) -> dict:
    env = {v: rng.randint(-8, 8) for v in INT_VARS}
    env.update({v: rng.random() < 0.5 for v in BOOL_VARS})
    return env


def py_eval(text: str, env: dict) -> bool:
    return eval(text, {"__builtins__": {}}, dict(env))


# -- random programs ------------------------------------------------------------


@dataclass(frozen=True)
class GenProgram:
    woven: str  # class plus agnostic aspect
    plain: str  # the same class alone
    fields: tuple[str, ...]
    calls: tuple[int, ...]


def _prog_int(rng: random.Random, names, depth: int) -> str:
    if depth <= 0 or rng.random() < 0.35:
        if rng.random() < 0.7:
            return rng.choice(names)
        return str(rng.randint(0, 7))
    op = rng.choice(("+", "-", "*", "+"))
    return f"({_prog_int(rng, names, depth - 1)} {op} {_prog_int(rng, names, depth - 1)})"


def _prog_cond(rng: random.Random, names) -> str:
    op = rng.choice(("<", "<=", ">", ">=", "==", "!="))
    text = f"{_prog_int(rng, names, 1)} {op} {_prog_int(rng, names, 1)}"
    if rng.random() < 0.3:
        other = f"{_prog_int(rng, names, 1)} {rng.choice(('<', '>=', '!='))} {rng.randint(0, 7)}"
        text = f"{text} {rng.choice(('&&', '||'))} {other}"
    return text


def _to_advice(text: str, fields) -> str:
    """Rewrite bare field names of a method assertion to ``target.`` form."""
    import re

    return re.sub(r"\b(" + "|".join(fields) + r")\b", r"target.\1", text)


def gen_program(rng: random.Random) -> GenProgram:
    """One class with <= 3 int fields over [0, 8) and a write-free agnostic aspect.

    Advice contracts are ``true`` or copies of the method's own assertions,
    so a woven call can fail only where the plain call fails too.
    """
    fields = tuple(f"f{i}" for i in range(rng.randint(1, 3)))
    inits = {f: rng.randint(0, 7) for f in fields}
    reads = (*fields, "p")
    pre = _prog_cond(rng, reads) if rng.random() < 0.6 else "true"
    post = _prog_cond(rng, (*reads, "result")) if rng.random() < 0.6 else "true"

    body = []
    for _ in range(rng.randint(0, 3)):
        f = rng.choice(fields)
        stmt = f"{f} = {_prog_int(rng, reads, 2)};"
        if rng.random() < 0.3:
            stmt = f"if ({_prog_cond(rng, reads)}) {{ {stmt} }} else {{ {rng.choice(fields)} = p; }}"
        body.append(stmt)
    body.append(f"return {_prog_int(rng, reads, 2)};")

    field_lines = "\n".join(f"  var {f}: int = {v};" for f, v in inits.items())
    cls = (
        "class C {\n"
        f"{field_lines}\n"
        "  method m(p: int) returns int\n"
        f"    requires {pre}\n"
        f"    ensures {post}\n"
        "  {\n    " + "\n    ".join(body) + "\n  }\n}\n"
    )

    adv_reads = (*(f"target.{f}" for f in fields), "p")

    def contract(copy_of: str) -> str:
        return _to_advice(copy_of, fields) if rng.random() < 0.5 else "true"

    def read_only_body(extra=()) -> str:
        names = (*adv_reads, *extra)
        lines = []
        if rng.random() < 0.6:
            lines.append(f"var t: int = {_prog_int(rng, names, 2)};")
            if rng.random() < 0.5:
                lines.append(f"if (t > {rng.randint(0, 7)}) {{ t = t - 1; }}")
        return " ".join(lines)

    has_before = rng.random() < 0.7
    has_after = not has_before or rng.random() < 0.7
    advice = []
    if has_before:
        advice.append(
            "  before\n"
            f"    requires {contract(pre)}\n"
            f"    ensures {contract(pre)}\n"
            f"  {{ {read_only_body()} }}\n"
        )
    if has_after:
        advice.append(
            "  after\n"
            f"    requires {contract(post)}\n"
            f"    ensures {contract(post)}\n"
            f"  {{ {read_only_body(('result',))} }}\n"
        )
    aspect = "agnostic aspect Watch {\n  pointcut C.m;\n" + "".join(advice) + "}\n"
    calls = tuple(rng.randint(0, 7) for _ in range(rng.randint(1, 4)))
    return GenProgram(cls + "\n" + aspect, cls, fields, calls)
