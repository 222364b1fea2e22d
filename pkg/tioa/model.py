"""
Timed I/O automata: syntax, validation, input completion, constant scaling
and parallel composition.

Clocks are referred to by index. Index 0 is the reference clock (always 0),
so the clock declared at position ``p`` of ``Tioa.clocks`` has index ``p + 1``.
"""

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from functools import cached_property
from math import lcm
from typing import Optional, Union

from tioa.errors import CompositionError, ModelError
from tioa.zones import Dbm, Federation, bound_value, is_strict

log = logging.getLogger("rich")

REFERENCE = 0
UNIVERSAL_NAME = "@univ"


class Polarity(Enum):
    INPUT = "input"
    OUTPUT = "output"

    @property
    def opposite(self) -> "Polarity":
        return Polarity.OUTPUT if self is Polarity.INPUT else Polarity.INPUT

    @property
    def mark(self) -> str:
        return "?" if self is Polarity.INPUT else "!"


class Relation(Enum):
    LT = "<"
    LE = "<="
    GT = ">"
    GE = ">="

    @property
    def is_upper(self) -> bool:
        return self in (Relation.LT, Relation.LE)

    @property
    def strict(self) -> bool:
        return self in (Relation.LT, Relation.GT)

    def compare(self, lhs: Fraction, rhs: Fraction) -> bool:
        if self is Relation.LT:
            return lhs < rhs
        if self is Relation.LE:
            return lhs <= rhs
        if self is Relation.GT:
            return lhs > rhs
        return lhs >= rhs


@dataclass(frozen=True)
class Atom:
    """``x_left - x_right (relation) bound + delta * D`` where D is the perturbation parameter."""

    left: int
    right: int
    relation: Relation
    bound: Fraction
    delta: int = 0

    def __post_init__(self):
        if self.left == self.right:
            raise ModelError(f"atom compares clock {self.left} with itself")
        if self.left < 0 or self.right < 0:
            raise ModelError("negative clock index")
        object.__setattr__(self, "bound", Fraction(self.bound))

    def limit(self, delta_value: Fraction = Fraction(0)) -> Fraction:
        return self.bound + self.delta * Fraction(delta_value)

    def holds(self, valuation: Sequence[Fraction], delta_value: Fraction = Fraction(0)) -> bool:
        values = (Fraction(0), *valuation)
        return self.relation.compare(values[self.left] - values[self.right], self.limit(delta_value))

    def shifted(self, amount: Optional[Fraction], sign: int) -> "Atom":
        """
        Loosens (``sign=+1``) or tightens (``sign=-1``) the atom by ``amount``.

        Upper bounds move up when loosened and lower bounds move down. ``amount=None``
        shifts by the symbolic parameter instead of a constant.
        """
        direction = sign if self.relation.is_upper else -sign
        if amount is None:
            return replace(self, delta=self.delta + direction)
        return replace(self, bound=self.bound + direction * Fraction(amount))

    def instantiate(self, delta_value: Fraction) -> "Atom":
        if not self.delta:
            return self
        return replace(self, bound=self.limit(delta_value), delta=0)

    def scaled(self, factor: Fraction) -> "Atom":
        return replace(self, bound=self.bound * factor)

    def render(self, clock_names: Sequence[str]) -> str:
        names = ("0", *clock_names)
        term = names[self.left] if self.right == REFERENCE else f"{names[self.left]} - {names[self.right]}"
        if self.left == REFERENCE:
            term = f"-{names[self.right]}"
        rhs = str(self.bound)
        if self.delta:
            coeff = "" if abs(self.delta) == 1 else f"{abs(self.delta)}*"
            sign = "+" if self.delta > 0 else "-"
            rhs = f"{rhs} {sign} {coeff}D"
        return f"{term} {self.relation.value} {rhs}"


@dataclass(frozen=True)
class Guard:
    atoms: tuple[Atom, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))

    @property
    def is_true(self) -> bool:
        return not self.atoms

    @property
    def is_parametric(self) -> bool:
        return any(atom.delta for atom in self.atoms)

    def holds(self, valuation: Sequence[Fraction], delta_value: Fraction = Fraction(0)) -> bool:
        return all(atom.holds(valuation, delta_value) for atom in self.atoms)

    def conj(self, other: "Guard") -> "Guard":
        return Guard(self.atoms + other.atoms)

    def enlarge(self, amount: Optional[Fraction]) -> "Guard":
        return Guard(tuple(atom.shifted(amount, +1) for atom in self.atoms))

    def restrict(self, amount: Optional[Fraction]) -> "Guard":
        return Guard(tuple(atom.shifted(amount, -1) for atom in self.atoms))

    def instantiate(self, delta_value: Fraction) -> "Guard":
        return Guard(tuple(atom.instantiate(delta_value) for atom in self.atoms))

    def scaled(self, factor: Fraction) -> "Guard":
        return Guard(tuple(atom.scaled(factor) for atom in self.atoms))

    def zone(self, dim: int, factor: int = 1) -> Optional[Dbm]:
        return Dbm.from_atoms(dim, self.atoms, factor)

    def federation(self, dim: int, factor: int = 1) -> Federation:
        return Federation.from_atoms(dim, self.atoms, factor)

    def render(self, clock_names: Sequence[str]) -> str:
        if not self.atoms:
            return "true"
        return " && ".join(atom.render(clock_names) for atom in self.atoms)


TRUE = Guard()


def guard_from_zone(zone: Dbm, factor: int = 1) -> Guard:
    """Converts a DBM back into a guard over its minimal constraints."""
    atoms = []
    for i, j, raw in zone.minimal_constraints():
        strict = is_strict(raw)
        value = Fraction(bound_value(raw), factor)
        if i == REFERENCE:
            atoms.append(Atom(j, REFERENCE, Relation.GT if strict else Relation.GE, -value))
        else:
            atoms.append(Atom(i, j, Relation.LT if strict else Relation.LE, value))
    return Guard(tuple(atoms))


@dataclass(frozen=True)
class Action:
    name: str
    polarity: Polarity

    def __str__(self) -> str:
        return f"{self.name}{self.polarity.mark}"


class LocationRole(Enum):
    ORIGINAL = "original"
    PROPOSED = "proposed"
    DELAYED = "delayed"


@dataclass(frozen=True)
class Location:
    name: str
    invariant: Guard = TRUE
    universal: bool = False
    bad: bool = False
    und: bool = False
    role: LocationRole = LocationRole.ORIGINAL


@dataclass(frozen=True)
class Edge:
    source: str
    action: str
    guard: Guard
    resets: frozenset[int]
    target: str

    def __post_init__(self):
        object.__setattr__(self, "resets", frozenset(self.resets))


@dataclass(frozen=True)
class Tioa:
    name: str
    clocks: tuple[str, ...]
    actions: tuple[Action, ...]
    locations: tuple[Location, ...]
    initial: str
    edges: tuple[Edge, ...] = field(default=())

    def __post_init__(self):
        for attr in ("clocks", "actions", "locations", "edges"):
            object.__setattr__(self, attr, tuple(getattr(self, attr)))
        self._check_structure()

    def _check_structure(self):
        if len(set(self.clocks)) != len(self.clocks):
            raise ModelError(f"{self.name}: duplicate clock names")
        names = [loc.name for loc in self.locations]
        if len(set(names)) != len(names):
            raise ModelError(f"{self.name}: duplicate location names")
        if self.initial not in names:
            raise ModelError(f"{self.name}: initial location {self.initial!r} is not declared")
        if sum(1 for loc in self.locations if loc.universal) > 1:
            raise ModelError(f"{self.name}: more than one universal location")
        action_names = [a.name for a in self.actions]
        if len(set(action_names)) != len(action_names):
            raise ModelError(f"{self.name}: an action is declared both as input and output")
        dim = self.dim
        for loc in self.locations:
            for atom in loc.invariant.atoms:
                if atom.right != REFERENCE or not atom.relation.is_upper or atom.left == REFERENCE:
                    raise ModelError(f"{self.name}: invariant of {loc.name} must bound single clocks from above")
                self._check_atom(atom, dim)
        declared = set(names)
        for edge in self.edges:
            if edge.source not in declared or edge.target not in declared:
                raise ModelError(f"{self.name}: edge {edge.source} -> {edge.target} uses an undeclared location")
            if edge.action not in action_names:
                raise ModelError(f"{self.name}: edge {edge.source} -> {edge.target} uses undeclared action {edge.action!r}")
            for clock in edge.resets:
                if not 0 < clock < dim:
                    raise ModelError(f"{self.name}: reset of invalid clock index {clock}")
            for atom in edge.guard.atoms:
                self._check_atom(atom, dim)

    def _check_atom(self, atom: Atom, dim: int):
        if atom.left >= dim or atom.right >= dim:
            raise ModelError(f"{self.name}: constraint refers to an undeclared clock")

    @property
    def dim(self) -> int:
        return len(self.clocks) + 1

    @cached_property
    def _locations(self) -> dict[str, Location]:
        return {loc.name: loc for loc in self.locations}

    @cached_property
    def _polarities(self) -> dict[str, Polarity]:
        return {a.name: a.polarity for a in self.actions}

    @cached_property
    def _outgoing(self) -> dict[str, tuple[int, ...]]:
        out: dict[str, list[int]] = {loc.name: [] for loc in self.locations}
        for index, edge in enumerate(self.edges):
            out[edge.source].append(index)
        return {name: tuple(indices) for name, indices in out.items()}

    def location(self, name: str) -> Location:
        return self._locations[name]

    def polarity(self, action: str) -> Polarity:
        return self._polarities[action]

    def outgoing(self, name: str) -> tuple[int, ...]:
        """Indices into ``edges`` of the edges leaving ``name``, in declaration order."""
        return self._outgoing[name]

    @property
    def inputs(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.actions if a.polarity is Polarity.INPUT)

    @property
    def outputs(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.actions if a.polarity is Polarity.OUTPUT)

    @property
    def universal_location(self) -> Optional[Location]:
        return next((loc for loc in self.locations if loc.universal), None)

    @property
    def is_parametric(self) -> bool:
        return any(loc.invariant.is_parametric for loc in self.locations) or any(
            edge.guard.is_parametric for edge in self.edges
        )

    def clock_index(self, name: str) -> int:
        try:
            return self.clocks.index(name) + 1
        except ValueError:
            raise ModelError(f"{self.name}: unknown clock {name!r}") from None

    def constants(self) -> list[Fraction]:
        guards = [loc.invariant for loc in self.locations] + [edge.guard for edge in self.edges]
        return [atom.bound for guard in guards for atom in guard.atoms]

    def max_constants(self, factor: int = 1, delta_value: Fraction = Fraction(0)) -> tuple[int, ...]:
        """Largest constant compared against each clock (index 0 is the reference), for extrapolation."""
        best = [0] * self.dim
        guards = [loc.invariant for loc in self.locations] + [edge.guard for edge in self.edges]
        for guard in guards:
            for atom in guard.atoms:
                value = abs(atom.limit(delta_value) * factor)
                ceiling = -(-value.numerator // value.denominator)
                for clock in (atom.left, atom.right):
                    if clock != REFERENCE and ceiling > best[clock]:
                        best[clock] = ceiling
        return tuple(best)

    def instantiate(self, delta_value: Fraction) -> "Tioa":
        if not self.is_parametric:
            return self
        return replace(
            self,
            locations=tuple(replace(loc, invariant=loc.invariant.instantiate(delta_value)) for loc in self.locations),
            edges=tuple(replace(edge, guard=edge.guard.instantiate(delta_value)) for edge in self.edges),
        )

    def invariant_zone(self, name: str, factor: int = 1) -> Optional[Dbm]:
        return self.location(name).invariant.zone(self.dim, factor)


# Validation and completion


@dataclass(frozen=True)
class DeterminismViolation:
    location: str
    action: str
    first: int
    second: int


@dataclass(frozen=True)
class InputGap:
    location: str
    action: str
    gap: Federation
    factor: int = 1


@dataclass
class ValidationReport:
    automaton: str
    violations: list[DeterminismViolation] = field(default_factory=list)
    gaps: list[InputGap] = field(default_factory=list)

    @property
    def deterministic(self) -> bool:
        return not self.violations

    @property
    def input_enabled(self) -> bool:
        return not self.gaps

    @property
    def ok(self) -> bool:
        return self.deterministic and self.input_enabled


def scaling_factor(*values: Union[Fraction, int]) -> int:
    """Least common multiple of the denominators of ``values``."""
    return lcm(1, *(Fraction(v).denominator for v in values))


def model_factor(a: Tioa, *extra: Union[Fraction, int]) -> int:
    return scaling_factor(*a.constants(), *extra)


def validate_spec(a: Tioa) -> ValidationReport:
    """
    Reports determinism violations and input-enabledness gaps per location.

    Guards are compared as zones intersected with the source invariant, so two
    guards that only share a point outside the invariant do not conflict.
    """
    if a.is_parametric:
        raise ModelError(f"{a.name}: cannot validate a parametric automaton")
    factor = model_factor(a)
    dim = a.dim
    report = ValidationReport(a.name)
    for loc in a.locations:
        invariant = loc.invariant.federation(dim, factor)
        if invariant.is_empty():
            continue
        by_action: dict[str, list[int]] = {}
        for index in a.outgoing(loc.name):
            by_action.setdefault(a.edges[index].action, []).append(index)
        for action, indices in by_action.items():
            zones = [a.edges[i].guard.federation(dim, factor).intersect(invariant) for i in indices]
            for x in range(len(indices)):
                for y in range(x + 1, len(indices)):
                    if not zones[x].intersect(zones[y]).is_empty():
                        report.violations.append(DeterminismViolation(loc.name, action, indices[x], indices[y]))
        for action in a.inputs:
            covered = Federation.empty(dim)
            for index in by_action.get(action, []):
                covered = covered.union(a.edges[index].guard.federation(dim, factor))
            gap = invariant.subtract(covered)
            if not gap.is_empty():
                report.gaps.append(InputGap(loc.name, action, gap, factor))
    log.debug(
        f"[{a.name}] validation: {len(report.violations)} determinism violation(s), {len(report.gaps)} input gap(s)"
    )
    return report


def universal_location() -> Location:
    return Location(UNIVERSAL_NAME, universal=True)


def universal_loops(a: Tioa, name: str) -> list[Edge]:
    return [Edge(name, action.name, TRUE, frozenset(), name) for action in a.actions]


def with_universal(a: Tioa) -> tuple[Tioa, str]:
    """Returns ``a`` with a universal location (adding one with its self-loops if absent)."""
    existing = a.universal_location
    if existing is not None:
        return a, existing.name
    if UNIVERSAL_NAME in a._locations:
        raise ModelError(f"{a.name}: location name {UNIVERSAL_NAME!r} is reserved")
    loc = universal_location()
    extended = replace(a, locations=a.locations + (loc,), edges=a.edges + tuple(universal_loops(a, loc.name)))
    return extended, loc.name


def complete_inputs(a: Tioa, target: str = "self") -> Tioa:
    """
    Makes ``a`` input-enabled by covering every input gap with new edges.

    :param target: ``"self"`` adds self-loops, ``"universal"`` redirects the gaps to the universal location.
    """
    if target not in ("self", "universal"):
        raise ValueError(f"unknown completion target {target!r}")
    report = validate_spec(a)
    if report.input_enabled:
        return a
    base = a
    universal_name = None
    if target == "universal":
        base, universal_name = with_universal(a)
    new_edges = []
    for gap in report.gaps:
        destination = universal_name or gap.location
        for zone in gap.gap:
            new_edges.append(Edge(gap.location, gap.action, guard_from_zone(zone, gap.factor), frozenset(), destination))
    log.debug(f"[{a.name}] input completion added {len(new_edges)} edge(s) ({target})")
    return replace(base, edges=base.edges + tuple(new_edges))


@dataclass(frozen=True)
class ScaledModel:
    automaton: Tioa
    factor: int

    def unscale(self, value: Fraction) -> Fraction:
        return Fraction(value) / self.factor


def scale_constants(a: Tioa, factor: int) -> ScaledModel:
    """Multiplies every constant of ``a`` by ``factor``; reported values are divided back by ``factor``."""
    if factor < 1:
        raise ValueError("scaling factor must be a positive integer")
    if factor == 1:
        return ScaledModel(a, 1)
    scaled = replace(
        a,
        locations=tuple(replace(loc, invariant=loc.invariant.scaled(Fraction(factor))) for loc in a.locations),
        edges=tuple(replace(edge, guard=edge.guard.scaled(Fraction(factor))) for edge in a.edges),
    )
    return ScaledModel(scaled, factor)


# Composition


def _shift_guard(guard: Guard, offset: int) -> Guard:
    return Guard(
        tuple(
            replace(
                atom,
                left=atom.left + offset if atom.left else 0,
                right=atom.right + offset if atom.right else 0,
            )
            for atom in guard.atoms
        )
    )


def _composed_actions(s: Tioa, t: Tioa) -> tuple[Action, ...]:
    actions: dict[str, Polarity] = {}
    for action in s.actions:
        actions[action.name] = action.polarity
    for action in t.actions:
        mine = actions.get(action.name)
        if mine is None:
            actions[action.name] = action.polarity
        elif mine is Polarity.OUTPUT and action.polarity is Polarity.OUTPUT:
            raise CompositionError(f"{s.name} and {t.name} both output {action.name!r}")
        elif Polarity.OUTPUT in (mine, action.polarity):
            actions[action.name] = Polarity.OUTPUT
    return tuple(Action(name, polarity) for name, polarity in actions.items())


def parallel_compose(s: Tioa, t: Tioa, prune: bool = False) -> Tioa:
    """
    Product of two automata.

    Shared actions synchronise (output with input gives an output, input with
    input stays an input); other actions interleave. Clock names that clash
    are prefixed with the component name. Both operands must be input-enabled.
    """
    actions = _composed_actions(s, t)
    for operand in (s, t):
        report = validate_spec(operand)
        if not report.input_enabled:
            gap = report.gaps[0]
            raise CompositionError(
                f"{operand.name} is not input-enabled: {gap.action}? is missing at {gap.location}"
                + (f" ({len(report.gaps)} gaps)" if len(report.gaps) > 1 else "")
            )
    shared = {a.name for a in s.actions} & {a.name for a in t.actions}
    clash = set(s.clocks) & set(t.clocks)
    clocks = tuple(f"{s.name}.{c}" if c in clash else c for c in s.clocks) + tuple(
        f"{t.name}.{c}" if c in clash else c for c in t.clocks
    )
    offset = len(s.clocks)

    def pair(p: str, q: str) -> str:
        return f"{p}|{q}"

    locations = []
    for p in s.locations:
        for q in t.locations:
            locations.append(
                Location(
                    pair(p.name, q.name),
                    p.invariant.conj(_shift_guard(q.invariant, offset)),
                    universal=p.universal and q.universal,
                    bad=p.bad or q.bad,
                    und=p.und or q.und,
                )
            )

    edges = []
    for p in s.locations:
        for q in t.locations:
            for i in s.outgoing(p.name):
                e = s.edges[i]
                if e.action in shared:
                    for j in t.outgoing(q.name):
                        f = t.edges[j]
                        if f.action != e.action:
                            continue
                        edges.append(
                            Edge(
                                pair(p.name, q.name),
                                e.action,
                                e.guard.conj(_shift_guard(f.guard, offset)),
                                e.resets | {r + offset for r in f.resets},
                                pair(e.target, f.target),
                            )
                        )
                else:
                    edges.append(Edge(pair(p.name, q.name), e.action, e.guard, e.resets, pair(e.target, q.name)))
            for j in t.outgoing(q.name):
                f = t.edges[j]
                if f.action in shared:
                    continue
                edges.append(
                    Edge(
                        pair(p.name, q.name),
                        f.action,
                        _shift_guard(f.guard, offset),
                        frozenset(r + offset for r in f.resets),
                        pair(p.name, f.target),
                    )
                )

    product = Tioa(
        f"{s.name}||{t.name}",
        clocks,
        actions,
        tuple(locations),
        pair(s.initial, t.initial),
        tuple(edges),
    )
    if prune:
        product = prune_unreachable(product)
    log.debug(f"[{product.name}] composed: {len(product.locations)} locations, {len(product.edges)} edges")
    return product


def prune_unreachable(a: Tioa) -> Tioa:
    """Drops locations that are not reachable in the discrete graph (guards ignored)."""
    reached = {a.initial}
    frontier = [a.initial]
    while frontier:
        name = frontier.pop()
        for index in a.outgoing(name):
            target = a.edges[index].target
            if target not in reached:
                reached.add(target)
                frontier.append(target)
    return replace(
        a,
        locations=tuple(loc for loc in a.locations if loc.name in reached),
        edges=tuple(edge for edge in a.edges if edge.source in reached),
    )


def compose_all(automata: Iterable[Tioa], prune: bool = False) -> Tioa:
    automata = list(automata)
    if not automata:
        raise ModelError("nothing to compose")
    product = automata[0]
    for other in automata[1:]:
        product = parallel_compose(product, other, prune=prune)
    return product
