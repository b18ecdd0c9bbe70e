import os
import sys

import pytest

from gramforge.bench import get_language, make_seeds, make_test_set
from gramforge.grammar import parse_grammar
from gramforge.oracle import OracleClient
from gramforge.tree import ParseForest, ParseNode

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")
sys.path.insert(0, FIXTURES)

IFELSE_SEED = "if(a+b) c=d+e+f; else c=d;"

# a toy language in the shape of the bubbling example: conditions are
# either ``true`` or an equality test between single letters
COND_GRAMMAR = """
start: stmt
stmt: "if " cond " then skip"
cond: "true" | id "==" id
id: "a" | "b" | "c"
"""


@pytest.fixture(scope="session")
def while_lang():
    return get_language("while")


@pytest.fixture(scope="session")
def ifelse_lang():
    return get_language("ifelse")


@pytest.fixture
def while_oracle(while_lang):
    return OracleClient.from_grammar(while_lang.grammar)


@pytest.fixture
def ifelse_oracle(ifelse_lang):
    return OracleClient.from_grammar(ifelse_lang.grammar)


@pytest.fixture
def cond_oracle():
    return OracleClient.from_grammar(parse_grammar(COND_GRAMMAR))


@pytest.fixture(scope="session")
def while_seeds(while_lang):
    return make_seeds(while_lang)


@pytest.fixture(scope="session")
def while_tests(while_lang):
    return make_test_set(while_lang)


def build(forest: ParseForest, spec) -> ParseNode:
    """Tree from nested ``(label, [children])`` tuples; strings are leaves."""
    if isinstance(spec, str):
        return forest.node(spec)
    label, kids = spec
    return forest.node(label, [build(forest, k) for k in kids])


def forest_of(*specs, start="stmt") -> ParseForest:
    forest = ParseForest([], start)
    for spec in specs:
        forest.trees.append(build(forest, spec))
    return forest


def flat(text: str) -> tuple:
    from gramforge.tokenizer import pretokenize
    return ("stmt", [t.text for t in pretokenize(text)])


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
