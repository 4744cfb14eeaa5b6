"""Call scripts run against one heap.

One command per line, ``#`` starts a comment::

    new store ILBranch
    call store.stock(8000, 10000, 500, 500, false, true)
    call store.sale("PB")

Arguments are literals only: integers, ``true``/``false`` and double-quoted
strings.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from .lexer import INT, KEYWORD, OP, PUNCT, STRING, LexError, lex
from .model import kind_of, lookup_method
from .syntax import Program


class ScenarioFormatError(ValueError):
    def __init__(self, message: str, line: int = 0, index: int | None = None):
        where = f"line {line}" if line else "scenario"
        if index is not None:
            where += f", call {index}"
        super().__init__(f"{where}: {message}")
        self.message = message
        self.line = line
        self.index = index


@dataclass(frozen=True)
class NewObject:
    var: str
    cls: str
    line: int = 0


@dataclass(frozen=True)
class CallCommand:
    var: str
    method: str
    args: tuple
    line: int = 0


Command = Union[NewObject, CallCommand]


@dataclass(frozen=True)
class Scenario:
    commands: tuple[Command, ...] = ()
    file: str = "<scenario>"

    @property
    def calls(self) -> list[CallCommand]:
        return [c for c in self.commands if isinstance(c, CallCommand)]


_NEW = re.compile(r"^new\s+([A-Za-z_]\w*)\s+([A-Za-z_]\w*)$")
_CALL = re.compile(r"^call\s+([A-Za-z_]\w*)\s*\.\s*([A-Za-z_]\w*)\s*\((.*)\)$")


def _strip_comment(line: str) -> str:
    in_string = escaped = False
    for i, ch in enumerate(line):
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
        elif ch == '"':
            in_string = True
        elif ch == "#":
            return line[:i]
    return line


def _parse_args(text: str, lineno: int) -> tuple:
    try:
        tokens = lex(text)[:-1]
    except LexError as exc:
        raise ScenarioFormatError(exc.message, lineno) from None
    args, expect_value = [], True
    negate = False
    for tok in tokens:
        if expect_value:
            if tok.is_(OP, "-") and not negate:
                negate = True
                continue
            if tok.kind == INT:
                args.append(-tok.value if negate else tok.value)
            elif negate:
                raise ScenarioFormatError("'-' must precede an integer", lineno)
            elif tok.kind == STRING:
                args.append(tok.value)
            elif tok.kind == KEYWORD and tok.lexeme in ("true", "false"):
                args.append(tok.lexeme == "true")
            else:
                raise ScenarioFormatError(f"expected a literal argument, found {tok.lexeme!r}", lineno)
            negate, expect_value = False, False
        elif tok.is_(PUNCT, ","):
            expect_value = True
        else:
            raise ScenarioFormatError(f"expected ',' between arguments, found {tok.lexeme!r}", lineno)
    if tokens and expect_value:
        raise ScenarioFormatError("trailing ',' in argument list", lineno)
    return tuple(args)


def parse_scenario(text: str, file: str = "<scenario>") -> Scenario:
    commands: list[Command] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if m := _NEW.match(line):
            commands.append(NewObject(m.group(1), m.group(2), lineno))
        elif m := _CALL.match(line):
            commands.append(CallCommand(m.group(1), m.group(2), _parse_args(m.group(3), lineno), lineno))
        else:
            raise ScenarioFormatError(f"cannot parse {line!r}", lineno)
    return Scenario(tuple(commands), file)


def check_scenario(program: Program, scenario: Scenario) -> None:
    """Resolve every variable, class, method and argument kind before anything runs."""
    classes: dict[str, str] = {}
    index = 0
    for cmd in scenario.commands:
        if isinstance(cmd, NewObject):
            if cmd.cls not in program.classes:
                raise ScenarioFormatError(f"unknown class {cmd.cls!r}", cmd.line)
            classes[cmd.var] = cmd.cls
            continue
        if cmd.var not in classes:
            raise ScenarioFormatError(f"unknown object {cmd.var!r}", cmd.line, index)
        found = lookup_method(program, classes[cmd.var], cmd.method)
        if found is None:
            raise ScenarioFormatError(f"{classes[cmd.var]} has no method {cmd.method!r}", cmd.line, index)
        params = found[1].params
        if len(params) != len(cmd.args):
            raise ScenarioFormatError(
                f"{cmd.method} takes {len(params)} argument(s), got {len(cmd.args)}", cmd.line, index)
        for param, arg in zip(params, cmd.args):
            if kind_of(arg) != param.kind:
                raise ScenarioFormatError(
                    f"argument {param.name} expects {param.kind}, got {kind_of(arg)}", cmd.line, index)
        index += 1
