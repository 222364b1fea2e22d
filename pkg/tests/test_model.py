from dataclasses import replace
from fractions import Fraction

import pytest

from helpers import atom, guard, window_spec
from tioa.errors import CompositionError, ModelError
from tioa.model import (
    Action,
    Edge,
    Guard,
    Location,
    Polarity,
    Tioa,
    complete_inputs,
    compose_all,
    model_factor,
    parallel_compose,
    prune_unreachable,
    scale_constants,
    validate_spec,
    with_universal,
)


def test_window_is_valid():
    report = validate_spec(window_spec(1, 4))
    assert report.ok
    assert report.deterministic and report.input_enabled


def test_input_gap_is_reported_and_completed():
    spec = window_spec(1, 4, input_guard=guard(atom(1, "<=", 2)))
    report = validate_spec(spec)
    assert report.deterministic
    assert [(g.location, g.action) for g in report.gaps] == [("Idle", "go")]
    gap = report.gaps[0].gap
    assert gap.contains_point((Fraction(3),)) and not gap.contains_point((Fraction(2),))

    completed = complete_inputs(spec)
    assert validate_spec(completed).ok
    added = completed.edges[len(spec.edges):]
    assert all(e.source == e.target == "Idle" for e in added)


def test_completion_to_universal_location():
    spec = window_spec(1, 4, input_guard=guard(atom(1, "<=", 2)))
    completed = complete_inputs(spec, "universal")
    assert completed.universal_location is not None
    added = completed.edges[len(spec.edges) + len(spec.actions):]
    assert added and all(e.target == completed.universal_location.name for e in added)
    assert validate_spec(completed).input_enabled


def test_unknown_completion_target():
    with pytest.raises(ValueError):
        complete_inputs(window_spec(1, 4), "elsewhere")


def test_with_universal_is_idempotent():
    extended, name = with_universal(window_spec(1, 4))
    again, same = with_universal(extended)
    assert again is extended and same == name


def test_overlapping_outputs_are_not_deterministic():
    spec = window_spec(1, 4)
    overlap = Edge("Busy", "done", guard(atom(1, ">=", 3)), frozenset(), "Busy")
    report = validate_spec(Tioa(spec.name, spec.clocks, spec.actions, spec.locations, spec.initial, spec.edges + (overlap,)))
    assert not report.deterministic
    assert report.violations[0].location == "Busy" and report.violations[0].action == "done"


def test_structural_errors():
    with pytest.raises(ModelError):
        Tioa("Bad", ("x",), (), (Location("A"),), "B")
    with pytest.raises(ModelError):
        Tioa("Bad", ("x",), (), (Location("A", guard(atom(1, ">=", 1))),), "A")
    with pytest.raises(ModelError):
        Tioa("Bad", ("x",), (Action("a", Polarity.INPUT), Action("a", Polarity.OUTPUT)), (Location("A"),), "A")
    with pytest.raises(ModelError):
        Tioa("Bad", ("x",), (), (Location("A"),), "A", (Edge("A", "missing", Guard(), frozenset(), "A"),))


def test_scaling_keeps_semantics():
    spec = window_spec(Fraction(1, 2), Fraction(5, 3))
    factor = model_factor(spec)
    assert factor == 6
    scaled = scale_constants(spec, factor)
    assert scaled.automaton.max_constants() == (0, 10)
    assert scaled.unscale(Fraction(10)) == Fraction(5, 3)
    with pytest.raises(ValueError):
        scale_constants(spec, 0)


def test_composition_synchronises_shared_actions():
    producer = window_spec(1, 4, name="P")
    consumer = Tioa(
        "C",
        ("x",),
        (Action("done", Polarity.INPUT), Action("ack", Polarity.OUTPUT)),
        (Location("Wait"),),
        "Wait",
        (Edge("Wait", "done", Guard(), frozenset({1}), "Wait"),),
    )
    product = parallel_compose(producer, consumer)
    assert product.name == "P||C"
    assert product.clocks == ("P.x", "C.x")
    assert product.polarity("done") is Polarity.OUTPUT
    assert product.polarity("go") is Polarity.INPUT
    done = [e for e in product.edges if e.action == "done"]
    assert {e.source for e in done} == {"Busy|Wait"}
    assert done[0].resets == frozenset({2})
    assert len(done[0].guard.atoms) == 2


def test_composition_rejects_shared_outputs():
    with pytest.raises(CompositionError):
        parallel_compose(window_spec(1, 4, name="A"), window_spec(1, 4, name="B"))


def listener(guarded: bool = False) -> Tioa:
    """Accepts ``done`` at any time, or only with its clock below 3 when ``guarded``."""
    when = guard(atom(1, "<", 3)) if guarded else Guard()
    return Tioa(
        "C",
        ("x",),
        (Action("done", Polarity.INPUT),),
        (Location("Wait"),),
        "Wait",
        (Edge("Wait", "done", when, frozenset({1}), "Wait"),),
    )


def test_composition_needs_input_enabled_operands():
    spec = window_spec(1, 4, name="P")
    partial = replace(spec, edges=tuple(e for e in spec.edges if not (e.source == "Busy" and e.action == "go")))
    with pytest.raises(CompositionError, match="P is not input-enabled: go\\? is missing at Busy"):
        parallel_compose(partial, listener())
    with pytest.raises(CompositionError, match="C is not input-enabled"):
        parallel_compose(spec, listener(guarded=True))
    with pytest.raises(CompositionError):
        compose_all([listener(guarded=True)] * 2)
    product = parallel_compose(complete_inputs(partial), complete_inputs(listener(guarded=True)))
    assert product.name == "P||C"
    assert validate_spec(product).input_enabled


def test_prune_and_compose_all():
    spec = window_spec(1, 4)
    orphan = Tioa(spec.name, spec.clocks, spec.actions, spec.locations + (Location("Lost"),), spec.initial, spec.edges)
    assert [loc.name for loc in prune_unreachable(orphan).locations] == ["Idle", "Busy"]
    assert compose_all([spec]) is spec
    with pytest.raises(ModelError):
        compose_all([])


def test_parametric_instantiation():
    spec = window_spec(2, 3)
    widened = Tioa(
        spec.name,
        spec.clocks,
        spec.actions,
        spec.locations,
        spec.initial,
        tuple(e if e.action != "done" else Edge(e.source, e.action, e.guard.enlarge(None), e.resets, e.target) for e in spec.edges),
    )
    assert widened.is_parametric
    concrete = widened.instantiate(Fraction(1, 2))
    done = next(e for e in concrete.edges if e.action == "done")
    assert done.guard.holds((Fraction(3, 2),)) and done.guard.holds((Fraction(7, 2),))
    assert not done.guard.holds((Fraction(4),))
