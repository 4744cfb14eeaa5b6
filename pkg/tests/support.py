from pathlib import Path

from conaweave import compile_file, execute_scenario, parse_scenario

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"

# (program, scenario) pairs shipped in fixtures/
FIXTURE_RUNS = [
    ("bookstore.dbc", "bookstore.scn"),
    ("bookstore.dbc", "israel_surcharge.scn"),
    ("bookstore.dbc", "israel_edge.scn"),
    ("bookstore.dbc", "us_surcharge.scn"),
    ("bookstore_markdown.dbc", "israel_surcharge.scn"),
    ("bookstore_oop.dbc", "israel_surcharge.scn"),
    ("bookstore_oop.dbc", "empty_isbn.scn"),
    ("bookstore_isbnfix.dbc", "empty_isbn.scn"),
    ("nonbehavioral.dbc", "nonbehavioral.scn"),
    ("tables.dbc", "tables.scn"),
    ("nested.dbc", "nested.scn"),
    ("reentrant.dbc", "reentrant.scn"),
]


def load(name: str):
    return compile_file(FIXTURES / name)


def scenario(name: str):
    path = FIXTURES / name
    return parse_scenario(path.read_text(encoding="utf-8"), str(path))


def run(program: str, scn: str, mode: str = "categorized", debug: bool = False):
    return execute_scenario(load(program), scenario(scn), mode, debug=debug)


def last_violation(report):
    return [c.outcome.violation for c in report.calls if c.outcome.violation][-1]


# "PASS/FAIL criterion N: ..." lines, filled by test_acceptance and echoed
# in the terminal summary by conftest.
ACCEPTANCE: dict[int, str] = {}
