import random

import pytest
from hypothesis import given, settings, strategies as st

from conaweave.lexer import lex
from conaweave.parser import ParseFailure, parse, parse_expression, parse_source
from conaweave.printer import canonical_json, format_expr, format_program
from conaweave.syntax import Binary, Call, ClassDef, FieldRef, Name, Old, ResultRef, walk, walk_block

from generators import gen_bool, gen_program
from support import FIXTURES


def fixture_source(name):
    return (FIXTURES / name).read_text(encoding="utf-8")


def test_bookstore_shape():
    program = parse_source(fixture_source("bookstore.dbc"), "bookstore.dbc")
    assert list(program.classes) == ["OnlineBookstore", "USBranch", "GRBranch", "ILBranch"]
    (aspect,) = program.aspects
    assert (aspect.name, aspect.category, str(aspect.pointcut)) == ("ShippingCost", "obedient", "*.sale")
    assert aspect.before is None and aspect.after is not None
    assert not program.validated


def test_minimal_class():
    program = parse(lex("class A { }"))
    assert program.classes == {"A": ClassDef("A", None, (), {})}
    assert program.aspects == ()


def test_missing_category_is_a_parse_error_naming_the_categories():
    with pytest.raises(ParseFailure) as err:
        parse(lex("aspect X { before { } }"))
    (error,) = [e for e in err.value.errors if e.code == "MissingCategory"]
    assert set(error.expected) == {"agnostic", "obedient", "rebellious"}
    assert (error.span.line, error.span.column) == (1, 1)


def test_recovery_reports_several_errors():
    source = "class A { var x int; }\nclass B { method m( { } }\nclass C { }"
    with pytest.raises(ParseFailure) as err:
        parse_source(source)
    lines = sorted({e.span.line for e in err.value.errors})
    assert lines[:2] == [1, 2]


def test_duplicate_method_is_reported():
    with pytest.raises(ParseFailure) as err:
        parse_source("class A { method m() { } method m() { } }")
    assert err.value.errors[0].code == "DuplicateDeclaration"


def test_precedence_and_associativity():
    e = parse_expression("a - b - c * d < 3 || !p && q")
    assert isinstance(e, Binary) and e.op == "||"
    assert format_expr(e.left) == "a - b - c * d < 3"
    assert format_expr(e.left.left.left) == "a - b"
    assert format_expr(parse_expression("a - (b - c)")) == "a - (b - c)"


def test_postfix_forms():
    call = parse_expression("target.totalFor(isbn)")
    assert isinstance(call, Call) and call.receiver == Name("target") and call.method == "totalFor"
    assert isinstance(parse_expression("this.price"), FieldRef)
    old = parse_expression("old(target.shipping)")
    assert isinstance(old, Old) and isinstance(old.expr, FieldRef)
    assert parse_expression("result") == ResultRef()


def test_assignment_target_must_be_assignable():
    with pytest.raises(ParseFailure):
        parse_source("class A { method m() { 1 = 2; } }")


@pytest.mark.parametrize("name", sorted(p.name for p in FIXTURES.glob("*.dbc")))
def test_fixture_round_trip(name):
    first = parse_source(fixture_source(name), name)
    again = parse_source(format_program(first), name)
    assert again == first


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32))
def test_round_trip_generated_programs(seed):
    program = parse_source(gen_program(random.Random(seed)).woven)
    assert parse_source(format_program(program)) == program


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32))
def test_round_trip_generated_expressions(seed):
    expr = parse_expression(gen_bool(random.Random(seed), 4).dbc)
    assert parse_expression(format_expr(expr)) == expr


@pytest.mark.parametrize("name", ["bookstore.dbc", "tables.dbc"])
def test_parsing_is_deterministic(name):
    source = fixture_source(name)
    assert canonical_json(parse_source(source, name)) == canonical_json(parse_source(source, name))


@pytest.mark.parametrize("name", sorted(p.name for p in FIXTURES.glob("*.dbc")))
def test_spans_lie_within_the_file(name):
    source = fixture_source(name)
    lines = source.split("\n")
    program = parse_source(source, name)
    nodes = []
    for cls in program.classes.values():
        nodes.append(cls)
        for m in cls.methods.values():
            nodes.append(m)
            for e in (*m.requires, *m.ensures):
                nodes.extend(walk(e))
            nodes.extend(walk_block(m.body))
    for aspect in program.aspects:
        for advice in (aspect.before, aspect.after):
            if advice is not None:
                for e in (*advice.requires, *advice.ensures):
                    nodes.extend(walk(e))
                nodes.extend(walk_block(advice.body))
    assert nodes
    for node in nodes:
        span = node.span
        assert span.file == name
        assert 1 <= span.line <= len(lines)
        assert span.column - 1 + min(span.length, 1) <= len(lines[span.line - 1]) + 1
