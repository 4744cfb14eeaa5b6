"""Recursive-descent parser producing the raw :class:`Program` model.

The grammar is documented in ``docs/grammar.ebnf``.  On a syntax error the
parser records a :class:`ParseError` and resynchronises at the next
declaration keyword, so one run reports every broken declaration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .lexer import EOI, IDENT, INT, KEYWORD, OP, PUNCT, STRING, Token, lex
from .syntax import (
    CATEGORIES,
    VALUE_KINDS,
    AdviceDef,
    AspectDef,
    Assign,
    Binary,
    BoolLit,
    Call,
    ClassDef,
    ExprStmt,
    FieldDecl,
    FieldRef,
    If,
    IntLit,
    MethodDef,
    Name,
    Old,
    Param,
    Pointcut,
    Program,
    Return,
    ResultRef,
    SourceSpan,
    StrLit,
    Unary,
    VarDecl,
)

_SYNC = {"class", "aspect", *CATEGORIES}


@dataclass
class ParseError:
    message: str
    span: SourceSpan
    expected: tuple[str, ...] = ()
    code: str = "ParseError"

    def __str__(self):
        return f"{self.span}: {self.code}: {self.message}"


class ParseFailure(Exception):
    def __init__(self, errors: list[ParseError]):
        super().__init__("; ".join(str(e) for e in errors))
        self.errors = errors


class _Abort(Exception):
    pass


def _join(start: SourceSpan, end: SourceSpan) -> SourceSpan:
    if start.line == end.line and end.column >= start.column:
        length = end.column + end.length - start.column
    else:
        length = start.length
    return SourceSpan(start.file, start.line, start.column, length)


@dataclass
class _Parser:
    tokens: list[Token]
    file: str
    pos: int = 0
    errors: list[ParseError] = field(default_factory=list)

    # -- token helpers -------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    @property
    def prev(self) -> Token:
        return self.tokens[self.pos - 1]

    def at(self, kind, lexeme=None) -> bool:
        return self.tok.is_(kind, lexeme)

    def at_kw(self, *words) -> bool:
        return self.tok.kind == KEYWORD and self.tok.lexeme in words

    def advance(self) -> Token:
        token = self.tok
        if token.kind != EOI:
            self.pos += 1
        return token

    def accept(self, kind, lexeme=None):
        if self.at(kind, lexeme):
            return self.advance()
        return None

    def fail(self, expected: tuple[str, ...], code="ParseError"):
        found = self.tok.lexeme or "end of input"
        message = f"expected {' or '.join(expected)}, found {found!r}"
        self.errors.append(ParseError(message, self.tok.span, expected, code))
        raise _Abort

    def expect(self, kind, lexeme=None) -> Token:
        token = self.accept(kind, lexeme)
        if token is None:
            self.fail((repr(lexeme) if lexeme else kind,))
        return token

    def expect_ident(self) -> Token:
        return self.expect(IDENT)

    def synchronize(self):
        while not self.at(EOI) and not self.at_kw(*_SYNC):
            self.advance()

    # -- declarations --------------------------------------------------------

    def program(self) -> Program:
        classes: dict[str, ClassDef] = {}
        aspects: list[AspectDef] = []
        while not self.at(EOI):
            start = self.pos
            try:
                if self.at_kw("class"):
                    decl = self.class_decl()
                    if decl.name in classes or any(a.name == decl.name for a in aspects):
                        self.errors.append(ParseError(
                            f"duplicate declaration of {decl.name!r}", decl.span, code="DuplicateDeclaration"))
                    else:
                        classes[decl.name] = decl
                elif self.at_kw("aspect", *CATEGORIES):
                    decl = self.aspect_decl()
                    if decl.name in classes or any(a.name == decl.name for a in aspects):
                        self.errors.append(ParseError(
                            f"duplicate declaration of {decl.name!r}", decl.span, code="DuplicateDeclaration"))
                    else:
                        aspects.append(decl)
                else:
                    self.fail(("'class'", "aspect declaration"))
            except _Abort:
                if self.pos == start:
                    self.advance()
                self.synchronize()
        return Program(classes=classes, aspects=tuple(aspects), file=self.file)

    def kind(self) -> str:
        token = self.tok
        if token.kind == IDENT and token.lexeme in VALUE_KINDS:
            return self.advance().lexeme
        self.fail(tuple(VALUE_KINDS))

    def class_decl(self) -> ClassDef:
        start = self.expect(KEYWORD, "class")
        name = self.expect_ident()
        supertype = None
        if self.accept(KEYWORD, "extends"):
            supertype = self.expect_ident().lexeme
        self.expect(PUNCT, "{")
        fields: list[FieldDecl] = []
        methods: dict[str, MethodDef] = {}
        while not self.accept(PUNCT, "}"):
            if self.at_kw("var"):
                fields.append(self.field_decl())
            elif self.at_kw("method"):
                method = self.method_decl()
                if method.name in methods:
                    self.errors.append(ParseError(
                        f"duplicate method {name.lexeme}.{method.name}", method.span, code="DuplicateDeclaration"))
                else:
                    methods[method.name] = method
            else:
                self.fail(("'var'", "'method'", "'}'"))
        return ClassDef(name.lexeme, supertype, tuple(fields), methods, _join(start.span, name.span))

    def literal(self):
        negative = self.accept(OP, "-") is not None
        token = self.tok
        if token.kind == INT:
            self.advance()
            return -token.value if negative else token.value
        if negative:
            self.fail(("integer literal",))
        if token.kind == STRING:
            self.advance()
            return token.value
        if self.at_kw("true", "false"):
            self.advance()
            return token.lexeme == "true"
        self.fail(("literal",))

    def field_decl(self) -> FieldDecl:
        start = self.expect(KEYWORD, "var")
        name = self.expect_ident()
        self.expect(PUNCT, ":")
        kind = self.kind()
        init = None
        if self.accept(OP, "="):
            init = self.literal()
        self.expect(PUNCT, ";")
        return FieldDecl(name.lexeme, kind, init, _join(start.span, name.span))

    def params(self) -> tuple[Param, ...]:
        self.expect(PUNCT, "(")
        params = []
        if not self.accept(PUNCT, ")"):
            while True:
                name = self.expect_ident()
                self.expect(PUNCT, ":")
                params.append(Param(name.lexeme, self.kind(), name.span))
                if self.accept(PUNCT, ")"):
                    break
                self.expect(PUNCT, ",")
        return tuple(params)

    def contracts(self):
        requires, ensures = [], []
        while self.at_kw("requires", "ensures"):
            bucket = requires if self.advance().lexeme == "requires" else ensures
            bucket.append(self.expr())
        return tuple(requires), tuple(ensures)

    def method_decl(self) -> MethodDef:
        start = self.expect(KEYWORD, "method")
        name = self.expect_ident()
        params = self.params()
        returns = None
        if self.accept(KEYWORD, "returns"):
            returns = self.kind()
        requires, ensures = self.contracts()
        body = self.block()
        return MethodDef(name.lexeme, params, returns, requires, ensures, body, _join(start.span, name.span))

    def aspect_decl(self) -> AspectDef:
        start = self.tok
        category = None
        if self.at_kw(*CATEGORIES):
            category = self.advance().lexeme
        else:
            # Recorded, then parsing continues so later errors are still found.
            self.errors.append(ParseError(
                "aspect declaration needs a category keyword before 'aspect'",
                self.tok.span, tuple(CATEGORIES), code="MissingCategory"))
        self.expect(KEYWORD, "aspect")
        name = self.expect_ident()
        self.expect(PUNCT, "{")
        self.expect(KEYWORD, "pointcut")
        pc_start = self.tok
        if self.accept(OP, "*"):
            cls = "*"
        else:
            cls = self.expect_ident().lexeme
        self.expect(PUNCT, ".")
        method = self.expect_ident()
        pointcut = Pointcut(cls, method.lexeme, _join(pc_start.span, method.span))
        self.expect(PUNCT, ";")
        advice: dict[str, AdviceDef] = {}
        while not self.accept(PUNCT, "}"):
            if not self.at_kw("before", "after"):
                self.fail(("'before'", "'after'", "'}'"))
            pos_tok = self.advance()
            requires, ensures = self.contracts()
            body = self.block()
            if pos_tok.lexeme in advice:
                self.errors.append(ParseError(
                    f"duplicate {pos_tok.lexeme} advice in {name.lexeme}", pos_tok.span, code="DuplicateDeclaration"))
            advice[pos_tok.lexeme] = AdviceDef(pos_tok.lexeme, requires, ensures, body, pos_tok.span)
        return AspectDef(name.lexeme, category, pointcut, advice.get("before"), advice.get("after"),
                         _join(start.span, name.span))

    # -- statements ----------------------------------------------------------

    def block(self) -> tuple:
        self.expect(PUNCT, "{")
        stmts = []
        while not self.accept(PUNCT, "}"):
            if self.at(EOI):
                self.fail(("'}'",))
            stmts.append(self.stmt())
        return tuple(stmts)

    def stmt(self):
        start = self.tok
        if self.accept(KEYWORD, "var"):
            name = self.expect_ident()
            self.expect(PUNCT, ":")
            kind = self.kind()
            self.expect(OP, "=")
            init = self.expr()
            self.expect(PUNCT, ";")
            return VarDecl(name.lexeme, kind, init, _join(start.span, name.span))
        if self.accept(KEYWORD, "if"):
            self.expect(PUNCT, "(")
            cond = self.expr()
            self.expect(PUNCT, ")")
            then = self.block()
            orelse: tuple = ()
            if self.accept(KEYWORD, "else"):
                orelse = (self.stmt(),) if self.at_kw("if") else self.block()
            return If(cond, then, orelse, start.span)
        if self.accept(KEYWORD, "return"):
            value = None if self.at(PUNCT, ";") else self.expr()
            self.expect(PUNCT, ";")
            return Return(value, start.span)
        expr = self.expr()
        if self.accept(OP, "="):
            if not isinstance(expr, (Name, FieldRef, ResultRef)):
                self.errors.append(ParseError("invalid assignment target", expr.span, code="ParseError"))
                raise _Abort
            value = self.expr()
            self.expect(PUNCT, ";")
            return Assign(expr, value, expr.span)
        self.expect(PUNCT, ";")
        return ExprStmt(expr, expr.span)

    # -- expressions ---------------------------------------------------------

    def expr(self):
        return self.binary(0)

    # Precedence climbing; every operator is left-associative.
    _BINARY = {
        "||": 0, "&&": 1, "==": 2, "!=": 2, "<": 3, "<=": 3, ">": 3, ">=": 3,
        "+": 4, "-": 4, "*": 5, "/": 5, "%": 5,
    }

    def binary(self, min_prec: int):
        left = self.unary()
        while self.tok.kind == OP and self._BINARY.get(self.tok.lexeme, -1) >= min_prec:
            op = self.advance().lexeme
            right = self.binary(self._BINARY[op] + 1)
            left = Binary(op, left, right, _join(left.span, right.span))
        return left

    def unary(self):
        if self.tok.kind == OP and self.tok.lexeme in ("!", "-"):
            op = self.advance()
            operand = self.unary()
            return Unary(op.lexeme, operand, _join(op.span, operand.span))
        return self.postfix()

    def args(self) -> tuple:
        self.expect(PUNCT, "(")
        args = []
        if not self.accept(PUNCT, ")"):
            while True:
                args.append(self.expr())
                if self.accept(PUNCT, ")"):
                    break
                self.expect(PUNCT, ",")
        return tuple(args)

    def postfix(self):
        expr = self.primary()
        while self.accept(PUNCT, "."):
            name = self.expect_ident()
            if self.at(PUNCT, "("):
                args = self.args()
                expr = Call(expr, name.lexeme, args, _join(expr.span, self.prev.span))
            else:
                expr = FieldRef(expr, name.lexeme, _join(expr.span, name.span))
        return expr

    def primary(self):
        token = self.tok
        if token.kind == INT:
            self.advance()
            return IntLit(token.value, token.span)
        if token.kind == STRING:
            self.advance()
            return StrLit(token.value, token.span)
        if self.at_kw("true", "false"):
            self.advance()
            return BoolLit(token.lexeme == "true", token.span)
        if self.at_kw("result"):
            self.advance()
            return ResultRef(token.span)
        if self.at_kw("old"):
            self.advance()
            self.expect(PUNCT, "(")
            inner = self.expr()
            close = self.expect(PUNCT, ")")
            return Old(inner, _join(token.span, close.span))
        if token.kind == IDENT:
            self.advance()
            if self.at(PUNCT, "("):
                args = self.args()
                return Call(None, token.lexeme, args, _join(token.span, self.prev.span))
            return Name(token.lexeme, token.span)
        if self.accept(PUNCT, "("):
            inner = self.expr()
            self.expect(PUNCT, ")")
            return inner
        self.fail(("expression",))


def parse(tokens: list[Token], file: str | None = None) -> Program:
    """Parse a token list into a raw :class:`Program`.

    Raises :class:`ParseFailure` carrying every error found.
    """
    if file is None:
        file = tokens[0].span.file if tokens else "<input>"
    parser = _Parser(tokens, file)
    program = parser.program()
    if parser.errors:
        raise ParseFailure(parser.errors)
    return program


def parse_source(source: str, file: str = "<input>") -> Program:
    return parse(lex(source, file), file)


def parse_expression(source: str, file: str = "<expr>"):
    parser = _Parser(lex(source, file), file)
    try:
        expr = parser.expr()
        parser.expect(EOI)
    except _Abort:
        pass
    if parser.errors:
        raise ParseFailure(parser.errors)
    return expr

