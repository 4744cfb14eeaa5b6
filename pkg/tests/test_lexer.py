import pytest
from hypothesis import given, strategies as st

from conaweave.lexer import EOI, IDENT, INT, KEYWORD, KEYWORDS, OP, PUNCT, STRING, LexError, lex


def kinds(source):
    return [(t.kind, t.lexeme) for t in lex(source)]


def test_category_keywords():
    assert kinds("obedient aspect ShippingCost")[:3] == [
        (KEYWORD, "obedient"),
        (KEYWORD, "aspect"),
        (IDENT, "ShippingCost"),
    ]


def test_empty_input_is_just_eoi():
    tokens = lex("")
    assert len(tokens) == 1 and tokens[0].kind == EOI


def test_illegal_character_position():
    with pytest.raises(LexError) as err:
        lex("@@")
    assert (err.value.span.line, err.value.span.column) == (1, 1)


def test_keyword_set_is_exact():
    assert KEYWORDS == set(
        "class extends method requires ensures aspect agnostic obedient rebellious pointcut "
        "before after old result returns var if else return true false".split()
    )
    # value kinds and receivers are ordinary identifiers
    assert {t.kind for t in lex("int bool string this target")[:-1]} == {IDENT}


def test_longest_operator_wins():
    assert kinds("a<=b==c&&!d")[:-1] == [
        (IDENT, "a"), (OP, "<="), (IDENT, "b"), (OP, "=="), (IDENT, "c"), (OP, "&&"), (OP, "!"), (IDENT, "d"),
    ]


def test_literals_and_spans():
    tokens = lex('x = 42;\n  s = "a\\"b\\n";')
    assert tokens[2].kind == INT and tokens[2].value == 42
    string = tokens[6]
    assert string.kind == STRING and string.value == 'a"b\n'
    assert (string.span.line, string.span.column) == (2, 7)
    assert tokens[3].kind == PUNCT


def test_comments_are_skipped():
    assert kinds("a // b c\nd")[:-1] == [(IDENT, "a"), (IDENT, "d")]


@pytest.mark.parametrize("source", ['"abc', '"abc\n"', '"\\q"'])
def test_bad_strings(source):
    with pytest.raises(LexError):
        lex(source)


@given(st.text(alphabet="abcxyz019 _+-*/%<>=!&|(){};:.,\n\t", max_size=60))
def test_every_character_is_consumed_or_reported(source):
    try:
        tokens = lex(source)
    except LexError as exc:
        assert exc.span.line >= 1
        return
    assert tokens[-1].kind == EOI
    lines = source.split("\n")
    for tok in tokens[:-1]:
        line = lines[tok.span.line - 1]
        start = tok.span.column - 1
        assert line[start:start + tok.span.length] == tok.lexeme
