"""Tokenizer for `.dbc` source text."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .syntax import SourceSpan

KEYWORDS = frozenset(
    """class extends method requires ensures aspect agnostic obedient rebellious
    pointcut before after old result returns var if else return true false""".split()
)

KEYWORD = "keyword"
IDENT = "identifier"
INT = "integer-literal"
STRING = "string-literal"
OP = "operator"
PUNCT = "punctuation"
EOI = "end-of-input"

# Longest first so that `==` wins over `=`.
OPERATORS = ("==", "!=", "<=", ">=", "&&", "||", "<", ">", "+", "-", "*", "/", "%", "!", "=")
PUNCTUATION = "{}();,:."

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}

_SCANNER = re.compile(
    "|".join(
        [
            r"(?P<newline>\n)",
            r"(?P<space>[ \t\r\f]+)",
            r"(?P<comment>//[^\n]*)",
            r"(?P<int>[0-9]+)",
            r"(?P<word>[A-Za-z_][A-Za-z0-9_]*)",
            r'(?P<string>"(?:[^"\\\n]|\\.)*")',
            r'(?P<badstring>")',
            "(?P<op>" + "|".join(re.escape(op) for op in OPERATORS) + ")",
            "(?P<punct>[" + re.escape(PUNCTUATION) + "])",
        ]
    )
)


def _decode(text: str, span: SourceSpan) -> str:
    out, i = [], 1
    while i < len(text) - 1:
        c = text[i]
        if c == "\\":
            esc = text[i + 1]
            if esc not in _ESCAPES:
                raise LexError("invalid escape sequence", SourceSpan(span.file, span.line, span.column + i, 2))
            out.append(_ESCAPES[esc])
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


@dataclass(frozen=True)
class Token:
    kind: str
    lexeme: str
    span: SourceSpan
    value: object = None  # decoded literal value for INT / STRING tokens

    def is_(self, kind: str, lexeme: str | None = None) -> bool:
        return self.kind == kind and (lexeme is None or self.lexeme == lexeme)

    def __repr__(self):
        return f"{self.kind}({self.lexeme!r})@{self.span.line}:{self.span.column}"


class LexError(Exception):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(f"{span}: {message}")
        self.message = message
        self.span = span


def lex(source: str, file: str = "<input>") -> list[Token]:
    """Split ``source`` into tokens, ending with an EOI marker.

    Raises :class:`LexError` on the first illegal character or unterminated
    string literal.
    """
    tokens: list[Token] = []
    i, line, line_start = 0, 1, 0
    n = len(source)

    def span(at, length):
        return SourceSpan(file, line, at - line_start + 1, length)

    while i < n:
        m = _SCANNER.match(source, i)
        if m is None:
            raise LexError(f"illegal character {source[i]!r}", span(i, 1))
        group, text = m.lastgroup, m.group()
        if group == "newline":
            line, line_start = line + 1, m.end()
        elif group == "int":
            tokens.append(Token(INT, text, span(i, len(text)), int(text)))
        elif group == "word":
            tokens.append(Token(KEYWORD if text in KEYWORDS else IDENT, text, span(i, len(text))))
        elif group == "op":
            tokens.append(Token(OP, text, span(i, len(text))))
        elif group == "punct":
            tokens.append(Token(PUNCT, text, span(i, 1)))
        elif group == "string":
            tokens.append(Token(STRING, text, span(i, len(text)), _decode(text, span(i, len(text)))))
        elif group == "badstring":
            raise LexError("unterminated string literal", span(i, 1))
        i = m.end()
    tokens.append(Token(EOI, "", span(n, 0)))
    return tokens
