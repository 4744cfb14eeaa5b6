"""Source text to validated program, with every static problem as one diagnostic list."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .lexer import LexError, lex
from .model import StaticError, ValidationError, validate_program
from .parser import ParseFailure, parse
from .syntax import Program, SourceSpan


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    span: SourceSpan

    def __str__(self):
        return f"{self.span}: {self.code}: {self.message}"

    def to_json(self) -> dict:
        return {"code": self.code, "message": self.message, "span": self.span.to_json()}


class StaticFailure(Exception):
    def __init__(self, diagnostics: list[Diagnostic]):
        super().__init__("\n".join(str(d) for d in diagnostics))
        self.diagnostics = diagnostics


def compile_source(source: str, file: str = "<input>") -> Program:
    try:
        program = parse(lex(source, file), file)
    except LexError as exc:
        raise StaticFailure([Diagnostic("LexError", exc.message, exc.span)]) from None
    except ParseFailure as exc:
        raise StaticFailure([Diagnostic(e.code, e.message, e.span) for e in exc.errors]) from None
    try:
        return validate_program(program)
    except ValidationError as exc:
        raise StaticFailure([_diag(e) for e in exc.errors]) from None


def compile_file(path) -> Program:
    """Raises OSError / UnicodeDecodeError on unreadable input."""
    path = Path(path)
    return compile_source(path.read_text(encoding="utf-8"), str(path))


def _diag(error: StaticError) -> Diagnostic:
    return Diagnostic(error.code, error.message, error.span)
