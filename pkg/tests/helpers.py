import itertools
import random
from dataclasses import replace
from fractions import Fraction
from pathlib import Path
from typing import Optional

from tioa.model import REFERENCE, Action, Atom, Edge, Guard, Location, Polarity, Relation, Tioa
from tioa.zones import Dbm, Federation

MODELS = Path(__file__).resolve().parent.parent / "models"

RELATIONS = {"<": Relation.LT, "<=": Relation.LE, ">": Relation.GT, ">=": Relation.GE}


def atom(left: int, relation: str, value, right: int = REFERENCE, delta: int = 0) -> Atom:
    return Atom(left, right, RELATIONS[relation], Fraction(value), delta)


def guard(*atoms: Atom) -> Guard:
    return Guard(tuple(atoms))


def window_spec(low, high, name: str = "Window", input_guard: Guard = Guard()) -> Tioa:
    """An input starts a window ``[low, high]`` in which the output must happen."""
    return Tioa(
        name,
        ("x",),
        (Action("go", Polarity.INPUT), Action("done", Polarity.OUTPUT)),
        (Location("Idle"), Location("Busy", guard(atom(1, "<=", high)))),
        "Idle",
        (
            Edge("Idle", "go", input_guard, frozenset({1}), "Busy"),
            Edge("Busy", "done", guard(atom(1, ">=", low), atom(1, "<=", high)), frozenset(), "Idle"),
            Edge("Busy", "go", Guard(), frozenset(), "Busy"),
        ),
    )


def late_window() -> Tioa:
    """The output guard lies outside the invariant, so the output can never be produced."""
    spec = window_spec(1, 4, name="Late")
    edges = tuple(replace(e, guard=guard(atom(1, ">=", 5))) if e.action == "done" else e for e in spec.edges)
    return replace(spec, edges=edges)


def random_atoms(rng: random.Random, clocks: int, max_constant: int = 6) -> list[Atom]:
    """A few random difference constraints with integer constants."""
    atoms = []
    for _ in range(rng.randint(1, 2 * clocks + 1)):
        left, right = rng.sample(range(clocks + 1), 2)
        value = rng.randint(0, max_constant) if right == REFERENCE or left == REFERENCE else rng.randint(-max_constant, max_constant)
        if left == REFERENCE:
            atoms.append(Atom(right, REFERENCE, rng.choice([Relation.GT, Relation.GE]), Fraction(value)))
        else:
            atoms.append(Atom(left, right, rng.choice([Relation.LT, Relation.LE]), Fraction(value)))
    return atoms


def random_zone(rng: random.Random, clocks: int, max_constant: int = 6, factor: int = 1) -> Optional[Dbm]:
    """None when the random constraints are contradictory."""
    return Dbm.from_atoms(clocks + 1, random_atoms(rng, clocks, max_constant), factor)


def random_federation(rng: random.Random, clocks: int, pieces: int = 3, factor: int = 1) -> Federation:
    return Federation(clocks + 1, [random_zone(rng, clocks, factor=factor) for _ in range(rng.randint(0, pieces))])


def random_point(rng: random.Random, clocks: int, high: int = 8, denominator: int = 4) -> tuple[Fraction, ...]:
    """Points on a grid of step 1/denominator, so that zone borders are hit often."""
    return tuple(Fraction(rng.randint(0, high * denominator), denominator) for _ in range(clocks))


def grid(clocks: int, high: int, denominator: int):
    steps = [Fraction(k, denominator) for k in range(high * denominator + 1)]
    return itertools.product(steps, repeat=clocks)


def random_game_spec(
    rng: random.Random,
    clocks: int = 1,
    locations: int = 3,
    max_constant: int = 3,
    invariants: bool = True,
) -> Tioa:
    """
    A small random automaton with at most one edge per action and location.

    Every reset resets all clocks, so the clocks always carry the same value.
    """
    names = [f"L{i}" for i in range(locations)]
    inputs, outputs = ("a", "b"), ("o", "p")
    actions = tuple(Action(n, Polarity.INPUT) for n in inputs) + tuple(Action(n, Polarity.OUTPUT) for n in outputs)
    every_clock = frozenset(range(1, clocks + 1))
    locs = []
    for name in names:
        invariant = Guard()
        if invariants and rng.random() < 0.5:
            invariant = guard(atom(rng.randint(1, clocks), "<=", rng.randint(1, max_constant)))
        locs.append(Location(name, invariant))
    edges = []
    for name in names:
        for action in inputs + outputs:
            if rng.random() < 0.4:
                continue
            atoms = [
                atom(rng.randint(1, clocks), rng.choice(list(RELATIONS)), rng.randint(0, max_constant))
                for _ in range(rng.randint(0, 2))
            ]
            resets = every_clock if rng.random() < 0.5 else frozenset()
            edges.append(Edge(name, action, guard(*atoms), resets, rng.choice(names)))
    return Tioa("Random", tuple(f"x{i}" for i in range(1, clocks + 1)), actions, tuple(locs), names[0], tuple(edges))
