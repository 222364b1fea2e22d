from fractions import Fraction

import pytest

from helpers import MODELS
from tioa.errors import ModelError, ModelSyntaxError
from tioa.model import Polarity, Relation, validate_spec
from tioa.parser import parse_model, parse_number, parse_text, serialize_model

PAIR = """
automaton Clock
  clocks x, y
  inputs tick
  outputs tock
  location Start initial inv x < 7/2
  location Stop
  edge Start -> Stop on tock! when x - y <= 3 && x < 7/2 reset y
  edge Start -> Start on tick?
  edge Stop -> Stop on tick?
end
"""


def test_guard_with_difference_and_fraction():
    a = parse_text(PAIR).default()
    assert a.clocks == ("x", "y")
    edge = a.edges[0]
    first, second = edge.guard.atoms
    assert (first.left, first.right, first.relation, first.bound) == (1, 2, Relation.LE, Fraction(3))
    assert (second.left, second.right, second.relation, second.bound) == (1, 0, Relation.LT, Fraction(7, 2))
    assert edge.resets == frozenset({2})
    assert a.polarity("tock") is Polarity.OUTPUT


@pytest.mark.parametrize(
    "text, expected",
    [("3", Fraction(3)), ("7/2", Fraction(7, 2)), ("0.25", Fraction(1, 4)), ("-1", Fraction(-1))],
)
def test_parse_number(text, expected):
    assert parse_number(text) == expected


@pytest.mark.parametrize("text", ["1/0", "abc", "1.2.3"])
def test_parse_number_rejects(text):
    with pytest.raises(ValueError):
        parse_number(text)


@pytest.mark.parametrize(
    "text, line, column",
    [
        ("automaton A\n  clocks x\n  location L initial\n  bogus\nend\n", 4, 3),
        ("automaton A\n  clocks x\n  location L initial inv x >= 2\nend\n", 3, 26),
        ("automaton A\n  clocks x\n  inputs a\n  location L initial\n  edge L -> L on a? when z <= 2\nend\n", 5, 26),
        ("automaton A\n  clocks x\n  location L initial\n", 3, 1),
        ("edge A -> B on a?\n", 1, 1),
    ],
)
def test_syntax_errors_carry_positions(text, line, column):
    with pytest.raises(ModelSyntaxError) as info:
        parse_text(text, "bad.tioa")
    assert (info.value.line, info.value.column) == (line, column)
    assert str(info.value).startswith(f"bad.tioa:{line}:{column}: ")


def test_polarity_mark_must_match_declaration():
    text = "automaton A\n  clocks x\n  inputs a\n  location L initial\n  edge L -> L on a!\nend\n"
    with pytest.raises(ModelSyntaxError, match="declared as \\?"):
        parse_text(text)


def test_complete_directive_uses_default_target():
    text = "automaton A\n  clocks x\n  inputs a\n  location L initial\n  complete\nend\n"
    to_self = parse_text(text).default()
    assert [(e.source, e.target) for e in to_self.edges] == [("L", "L")]
    to_universal = parse_text(text, completion="universal").default()
    assert to_universal.universal_location is not None
    assert validate_spec(to_universal).input_enabled


def test_universal_location_gets_its_loops():
    text = "automaton A\n  clocks x\n  inputs a\n  outputs b\n  location L initial\n  location U universal\n  edge L -> U on a?\nend\n"
    a = parse_text(text).default()
    loops = [e for e in a.edges if e.source == e.target == "U"]
    assert {e.action for e in loops} == {"a", "b"}


def test_systems_compose_in_order(university):
    assert university.names() == ["M", "R", "A", "MA", "RA", "MR", "University"]
    whole = university.default()
    assert whole.name == "M||R||A"
    assert whole.initial == "Idle|Idle|Funded"
    with pytest.raises(ModelError):
        university.resolve("Nobody")


def test_unknown_system_component():
    with pytest.raises(ModelSyntaxError):
        parse_text("automaton A\n  location L initial\nend\nsystem S = A || B\n")


@pytest.mark.parametrize("filename", ["machine.tioa", "fixed_machine.tioa", "university.tioa"])
def test_bundled_models_survive_serialization(filename):
    document = parse_model(MODELS / filename)
    for name, a in document.automata.items():
        again = parse_text(serialize_model(a)).automata[name]
        assert again == a


def test_missing_file():
    with pytest.raises(ModelError, match="cannot read"):
        parse_model(MODELS / "does-not-exist.tioa")
