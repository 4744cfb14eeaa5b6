import pytest

from conaweave.scenario import CallCommand, NewObject, ScenarioFormatError, check_scenario, parse_scenario

from support import load


def test_commands_and_literals():
    scn = parse_scenario('new s ILBranch  # a store\ncall s.stock(-3, 10, true, false, "a#b")\n\n# done\n')
    assert scn.commands == (
        NewObject("s", "ILBranch", 1),
        CallCommand("s", "stock", (-3, 10, True, False, "a#b"), 2),
    )
    assert len(scn.calls) == 1


def test_empty_argument_list_and_escapes():
    scn = parse_scenario('call o.m()\ncall o.n("q\\"x")')
    assert scn.calls[0].args == () and scn.calls[1].args == ('q"x',)


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("make s A", "cannot parse"),
        ("call s.m(1,)", "trailing"),
        ("call s.m(1 2)", "expected ','"),
        ("call s.m(- true)", "'-' must precede"),
        ("call s.m(x)", "expected a literal"),
        ('call s.m("open)', "unterminated string"),
    ],
)
def test_malformed_lines(text, fragment):
    with pytest.raises(ScenarioFormatError) as err:
        parse_scenario("\n" * 2 + text)
    assert fragment in str(err.value) and err.value.line == 3


@pytest.mark.parametrize(
    "text, fragment, index",
    [
        ("new c Nope", "unknown class", None),
        ("call c.ag(1)", "unknown object", 0),
        ("new c Counter\ncall c.ag(1, 2)", "takes 1 argument", 0),
        ('new c Counter\ncall c.ag("1")', "expects int, got string", 0),
    ],
)
def test_resolution_errors(text, fragment, index):
    with pytest.raises(ScenarioFormatError) as err:
        check_scenario(load("tables.dbc"), parse_scenario(text))
    assert fragment in str(err.value) and err.value.index == index


def test_inherited_methods_resolve():
    check_scenario(load("bookstore.dbc"), parse_scenario('new s ILBranch\ncall s.stock(1, 2, 3, 4, true, true)\ncall s.sale("PB")'))
