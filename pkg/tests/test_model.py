import random
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from conaweave.model import (
    NoSuchMethod,
    ValidationError,
    bind_pointcut,
    initial_fields,
    matching_aspects,
    pure_methods,
    resolve_override_chain,
    validate_program,
)
from conaweave.parser import parse_source
from conaweave.syntax import AdviceDef, AspectDef, Assign, Pointcut, walk

from generators import gen_program
from support import FIXTURES, load


def errors_of(source):
    with pytest.raises(ValidationError) as err:
        validate_program(parse_source(source, "t.dbc"))
    return [e.code for e in err.value.errors]


def test_bookstore_is_valid_with_three_overrides():
    program = load("bookstore.dbc")
    assert program.validated and len(program.classes) == 4
    overriding = [c for c in program.classes.values() if "sale" in c.methods and c.supertype]
    assert len(overriding) == 3
    assert program.bindings["ShippingCost"] == tuple((c, "sale") for c in program.classes)


def test_empty_program_is_valid():
    program = validate_program(parse_source(""))
    assert program.classes == {} and program.aspects == ()


def test_missing_category_is_reported_by_validation():
    program = parse_source("class A { method sale() { } }")
    aspect = AspectDef("X", None, Pointcut("*", "sale"), None, AdviceDef("after", (), (), ()))
    with pytest.raises(ValidationError) as err:
        validate_program(replace(program, aspects=(aspect,)))
    assert [e.code for e in err.value.errors] == ["MissingCategory"]


def test_override_chain_examples():
    program = load("bookstore.dbc")
    assert [c for c, _ in resolve_override_chain(program, "GRBranch", "sale")] == ["GRBranch", "OnlineBookstore"]
    assert [c for c, _ in resolve_override_chain(program, "USBranch", "totalFor")] == ["OnlineBookstore"]
    with pytest.raises(NoSuchMethod):
        resolve_override_chain(program, "USBranch", "saleTypo")


def test_override_chain_suffix_property():
    source = """
    class A { method m() { } }
    class B extends A { method m() { } }
    class C extends B { }
    class D extends C { method m() { } }
    """
    program = validate_program(parse_source(source))
    for sub, sup in [("D", "C"), ("C", "B"), ("D", "B"), ("B", "A")]:
        longer = resolve_override_chain(program, sub, "m")
        shorter = resolve_override_chain(program, sup, "m")
        assert longer[len(longer) - len(shorter):] == shorter


@pytest.mark.parametrize(
    "source, code",
    [
        ("class A extends B { } class B extends A { }", "CycleInHierarchy"),
        ("class A extends Nope { }", "UnknownSupertype"),
        ("class A { method m() { } } agnostic aspect X { pointcut A.n; before { } }", "UnboundPointcut"),
        ("class A { var x: int; method bump() returns int { x = x + 1; return x; }"
         " method m() requires bump() > 0 { } }", "ImpureAssertion"),
        ("class A { method m(x: int) { } } class B extends A { method m(x: bool) { } }",
         "ArityMismatchOnOverride"),
        ("class A { method m() { } } agnostic aspect X { pointcut A.m; }", "EmptyAspect"),
        ("class A { method m() { } } agnostic aspect X { pointcut X.m; before { } }", "AspectOnAspect"),
        ("class A { var x: int; } class B extends A { var x: int; }", "DuplicateField"),
        ("class A { method m() returns int { } }", "MissingReturn"),
        ("class A { method m() requires y > 0 { } }", "UnknownName"),
        ("class A { method m() requires result > 0 { } }", "MisplacedResult"),
        ("class A { var x: int; method m() requires old(x) > 0 { } }", "MisplacedOld"),
        ("class A { method m(x: int) returns int { return x; } }"
         " agnostic aspect X { pointcut A.m; after { x = 1; } }", "InvalidAssignment"),
    ],
)
def test_static_errors(source, code):
    assert code in errors_of(source)


def test_every_error_is_reported_not_just_the_first():
    codes = errors_of("class A extends Nope { } class B { method m() returns int { } }")
    assert {"UnknownSupertype", "MissingReturn"} <= set(codes)


def test_pure_query_methods_are_callable_from_assertions():
    program = load("bookstore.dbc")
    pure = pure_methods(program)
    assert ("OnlineBookstore", "totalFor") in pure
    assert ("OnlineBookstore", "stock") not in pure
    assert ("ILBranch", "sale") not in pure


def test_pointcut_matching():
    program = load("nested.dbc")
    assert [a.name for a in matching_aspects(program, "Meter", "add")] == ["Trace", "Round"]
    bookstore = load("bookstore.dbc")
    assert matching_aspects(bookstore, "ILBranch", "stock") == ()
    assert bind_pointcut(bookstore, bookstore.aspects[0])[0] == ("OnlineBookstore", "sale")


def test_initial_fields_include_inherited_defaults():
    fields = initial_fields(load("bookstore.dbc"), "ILBranch")
    assert fields["pbIsbn"] == "PB" and fields["price"] == 0 and fields["hcInStock"] is False


@pytest.mark.parametrize("name", sorted(p.name for p in FIXTURES.glob("*.dbc")))
def test_validation_is_idempotent(name):
    program = load(name)
    assert validate_program(program) == program


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32))
def test_accepted_assertions_contain_no_assignments(seed):
    program = validate_program(parse_source(gen_program(random.Random(seed)).woven))
    clauses = [e for c in program.classes.values() for m in c.methods.values() for e in (*m.requires, *m.ensures)]
    for aspect in program.aspects:
        for advice in (aspect.before, aspect.after):
            if advice is not None:
                clauses += [*advice.requires, *advice.ensures]
    assert not any(isinstance(n, Assign) for e in clauses for n in walk(e))
