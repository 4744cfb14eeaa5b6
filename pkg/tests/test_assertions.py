import copy
import random

import pytest
from hypothesis import given, settings, strategies as st

from conaweave.assertions import (
    DivisionByZero,
    Env,
    KindMismatch,
    UnboundName,
    eval_assert,
    eval_implication,
    evaluate,
)
from conaweave.parser import parse_expression as P

from generators import gen_bool, gen_env, py_eval


def test_shipping_limit():
    assert eval_assert(P("shipping <= 2000"), Env(fields={"shipping": 1999})).passed


def test_constant_true():
    assert eval_assert(P("true"), Env()).passed


def test_pure_helper_with_old_and_result():
    def total_diff(method, args, env):
        assert method == "totalDiff"
        return args[1] - args[0]

    env = Env(fields={"price": 9000}, result=8000, old=Env(fields={"price": 8000}), call=total_diff)
    outcome = eval_assert(P("totalDiff(old(price), result) < 1000"), env)
    assert outcome.passed
    assert outcome.witness["totalDiff(old(price), result)"] == 0


@pytest.mark.parametrize(
    "ant, cons, expected",
    [("false", "false", True), ("true", "true", True), ("true", "false", False), ("false", "true", True)],
)
def test_implication_truth_table(ant, cons, expected):
    assert eval_implication(P(ant), P(cons), Env()).passed is expected


def test_failed_implication_points_at_consequent():
    outcome = eval_implication(P("x > 0"), P("x > 5 && x < 9"), Env({"x": 3}), assertion_id="m_pre -> bef_pre")
    assert not outcome.passed
    assert outcome.failing_text == "x > 5"
    assert outcome.assertion_id == "m_pre -> bef_pre"


def test_consequent_not_evaluated_when_antecedent_false():
    outcome = eval_implication(P("false"), P("1 / 0 == 0"), Env())
    assert outcome.passed


def test_failing_subterm_of_conjunction():
    outcome = eval_assert(P("a > 0 && b > 0 && c > 0"), Env({"a": 1, "b": 0, "c": 1}))
    assert outcome.failing_text == "b > 0"
    assert (outcome.failing_span.column, outcome.failing_span.length) == (10, 5)
    assert outcome.witness == {"a": 1, "b": 0}


@pytest.mark.parametrize(
    "text, env, error",
    [
        ("y > 0", {}, UnboundName),
        ("x == true", {"x": 1}, KindMismatch),
        ("x / 0 > 1", {"x": 1}, DivisionByZero),
        ("result > 0", {}, UnboundName),
        ("old(x) > 0", {"x": 1}, UnboundName),
    ],
)
def test_evaluation_errors(text, env, error):
    with pytest.raises(error):
        eval_assert(P(text), Env(env))


def test_short_circuit_guards_division():
    assert eval_assert(P("x != 0 && 10 / x > 2"), Env({"x": 0})).passed is False
    assert eval_assert(P("x == 0 || 10 / x > 2"), Env({"x": 0})).passed


def test_integer_division_truncates_toward_zero():
    assert evaluate(P("(0 - 7) / 2"), Env()) == -3
    assert evaluate(P("(0 - 7) % 2"), Env()) == -1
    assert evaluate(P("7 / (0 - 2)"), Env()) == -3


def test_string_equality_and_concatenation():
    assert evaluate(P('s + "!" == "hi!"'), Env({"s": "hi"})) is True


def test_bools_are_not_ints():
    with pytest.raises(KindMismatch):
        evaluate(P("b + 1"), Env({"b": True}))


def test_non_boolean_assertion_is_rejected():
    with pytest.raises(KindMismatch):
        eval_assert(P("1 + 1"), Env())


def test_passed_outcome_carries_no_span():
    from conaweave.assertions import CheckOutcome
    from conaweave.syntax import SourceSpan

    with pytest.raises(ValueError):
        CheckOutcome(True, failing_span=SourceSpan("f", 1, 1, 1))


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32))
def test_evaluation_matches_python_oracle(seed):
    rng = random.Random(seed)
    expr, env = gen_bool(rng, 4), gen_env(rng)
    assert eval_assert(P(expr.dbc), Env(env)).passed == py_eval(expr.py, env)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32))
def test_implication_oracle(seed):
    rng = random.Random(seed)
    a, c, env = gen_bool(rng, 3), gen_bool(rng, 3), gen_env(rng)
    expected = (not eval_assert(P(a.dbc), Env(env)).passed) or eval_assert(P(c.dbc), Env(env)).passed
    assert eval_implication(P(a.dbc), P(c.dbc), Env(env)).passed == expected
    assert expected == ((not py_eval(a.py, env)) or py_eval(c.py, env))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32))
def test_evaluation_is_pure_and_deterministic(seed):
    rng = random.Random(seed)
    expr, env = P(gen_bool(rng, 4).dbc), gen_env(rng)
    fields = {"f": rng.randint(0, 5)}
    e = Env(dict(env), fields, result=3, old=Env(dict(env), dict(fields)))
    before = copy.deepcopy(e.snapshot())
    first = eval_assert(expr, e, debug=True)
    assert e.snapshot() == before
    assert eval_assert(expr, e) == first
