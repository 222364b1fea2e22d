"""
Refinement between specifications and (robust) satisfaction by implementations.

``s`` refines ``t`` when every input ``t`` accepts is accepted by ``s``, and
every output and delay of ``s`` is allowed by ``t``. Both sides are run in a
product automaton whose failure location is entered exactly when one of these
matches is missing; refinement holds iff that location is unreachable.
"""

import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional

import networkx as nx

from tioa.errors import ImplementationError, RefinementError
from tioa.game import DEFAULT_LIMIT_STATES, build_zone_graph
from tioa.model import (
    Action,
    Edge,
    Guard,
    Location,
    Polarity,
    Relation,
    Tioa,
    guard_from_zone,
    scale_constants,
    scaling_factor,
    validate_spec,
)
from tioa.transforms import error_states, perturb_implementation
from tioa.zones import Federation

log = logging.getLogger("rich")

FAIL_LOCATION = "@fail"
FAIL_ACTION = "@fail"


@dataclass(frozen=True)
class Step:
    source: str
    action: str
    target: str

    def __str__(self) -> str:
        return f"{self.source} --{self.action}--> {self.target}"


@dataclass
class RefinementResult:
    holds: bool
    counterexample: Optional[list[Step]] = None
    states: int = 0

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "counterexample": None if self.counterexample is None else [str(step) for step in self.counterexample],
            "states_explored": self.states,
        }


def _shift(guard: Guard, offset: int) -> Guard:
    return Guard(
        tuple(
            replace(atom, left=atom.left + offset if atom.left else 0, right=atom.right + offset if atom.right else 0)
            for atom in guard.atoms
        )
    )


@dataclass
class _Product:
    automaton: Tioa
    failures: dict[int, str] = field(default_factory=dict)


def _check_alphabets(s: Tioa, t: Tioa):
    if set(s.inputs) != set(t.inputs) or set(s.outputs) != set(t.outputs):
        raise RefinementError(
            f"{s.name} and {t.name} have different alphabets: "
            f"inputs {sorted(s.inputs)} vs {sorted(t.inputs)}, outputs {sorted(s.outputs)} vs {sorted(t.outputs)}"
        )
    t_report = validate_spec(t)
    if not t_report.deterministic:
        raise RefinementError(f"{t.name} is not deterministic")
    s_report = validate_spec(s)
    if any(s.polarity(v.action) is Polarity.INPUT for v in s_report.violations):
        raise RefinementError(f"{s.name} is not deterministic on inputs")


def _build_product(s: Tioa, t: Tioa) -> _Product:
    offset = len(s.clocks)
    dim = 1 + len(s.clocks) + len(t.clocks)
    factor = scaling_factor(*s.constants(), *t.constants())
    clocks = tuple(f"s.{c}" for c in s.clocks) + tuple(f"t.{c}" for c in t.clocks)
    actions = s.actions + (Action(FAIL_ACTION, Polarity.OUTPUT),)

    def pair(p: str, q: str) -> str:
        return f"{p}|{q}"

    locations = [
        Location(pair(p.name, q.name), p.invariant, universal=p.universal and q.universal)
        for p in s.locations
        for q in t.locations
    ]
    locations.append(Location(FAIL_LOCATION, bad=True))
    edges: list[Edge] = []
    failures: dict[int, str] = {}

    def fail(source: str, guard_zones: Federation, reason: str):
        for zone in guard_zones:
            failures[len(edges)] = reason
            edges.append(Edge(source, FAIL_ACTION, guard_from_zone(zone, factor), frozenset(), FAIL_LOCATION))

    for p in s.locations:
        for q in t.locations:
            here = pair(p.name, q.name)
            mine = [s.edges[i] for i in s.outgoing(p.name)]
            theirs = [t.edges[j] for j in t.outgoing(q.name)]
            for e in mine:
                for f in theirs:
                    if e.action == f.action:
                        edges.append(
                            Edge(
                                here,
                                e.action,
                                e.guard.conj(_shift(f.guard, offset)),
                                e.resets | {r + offset for r in f.resets},
                                pair(e.target, f.target),
                            )
                        )
            for action in s.actions:
                if action.polarity is Polarity.INPUT:
                    offered, accepted = theirs, mine
                    shift_offered, shift_accepted = offset, 0
                    reason = f"{action.name}? accepted by the abstraction only"
                else:
                    offered, accepted = mine, theirs
                    shift_offered, shift_accepted = 0, offset
                    reason = f"{action.name}! not allowed by the abstraction"
                offered_zone = Federation.empty(dim)
                for e in offered:
                    if e.action == action.name:
                        offered_zone = offered_zone.union(_shift(e.guard, shift_offered).federation(dim, factor))
                if offered_zone.is_empty():
                    continue
                accepted_zone = Federation.empty(dim)
                for e in accepted:
                    if e.action == action.name:
                        accepted_zone = accepted_zone.union(_shift(e.guard, shift_accepted).federation(dim, factor))
                fail(here, offered_zone.subtract(accepted_zone), reason)
            if not q.invariant.is_true:
                outside = _shift(q.invariant, offset).federation(dim, factor).complement()
                fail(here, outside, "delay not allowed by the abstraction")

    product = Tioa(
        f"{s.name}<={t.name}",
        clocks,
        actions,
        tuple(locations),
        pair(s.initial, t.initial),
        tuple(edges),
    )
    log.debug(f"[{product.name}] product: {len(product.locations)} locations, {len(product.edges)} edges")
    return _Product(product, failures)


def check_refinement(s: Tioa, t: Tioa, limit_states: int = DEFAULT_LIMIT_STATES) -> RefinementResult:
    """
    Decides whether ``s`` refines ``t``.

    ``t`` must be deterministic and ``s`` deterministic on inputs; ``s`` may
    choose between several outputs, and every choice is checked.
    """
    _check_alphabets(s, t)
    product = _build_product(s, t)
    a = product.automaton
    factor = scaling_factor(*a.constants())
    graph = build_zone_graph(scale_constants(a, factor).automaton, limit_states)
    failing = [i for i, state in enumerate(graph.states) if state.location == FAIL_LOCATION]
    if not failing:
        return RefinementResult(True, None, len(graph))
    paths = [nx.shortest_path(graph.graph, graph.initial, target) for target in failing]
    path = min(paths, key=lambda p: (len(p), p))
    steps = []
    for u, v in zip(path, path[1:]):
        index = min(graph.graph[u][v])
        edge = a.edges[index]
        action = product.failures.get(index, f"{edge.action}{a.polarity(edge.action).mark}")
        steps.append(Step(edge.source, action, edge.target))
    log.debug(f"[{a.name}] refinement fails after {len(steps)} step(s)")
    return RefinementResult(False, steps, len(graph))


@dataclass
class ImplementationReport:
    automaton: str
    progress: list[str] = field(default_factory=list)
    urgency: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.progress and not self.urgency


def _delay_blocked(loc: Location, dim: int, factor: int) -> Federation:
    """Points of the invariant where no positive delay stays inside it."""
    invariant = loc.invariant.federation(dim, factor)
    blocked = Federation.empty(dim)
    for atom in loc.invariant.atoms:
        if atom.relation.strict:
            continue
        edge_of = Guard((replace(atom, relation=Relation.GE),))
        blocked = blocked.union(invariant.intersect(edge_of.federation(dim, factor)))
    return blocked


def check_implementation(i: Tioa, strict: bool = False) -> ImplementationReport:
    """
    Checks independent progress and output urgency of an implementation.

    Violations are logged as warnings; with ``strict`` they raise ``ImplementationError``.
    """
    factor = scaling_factor(*i.constants())
    dim = i.dim
    report = ImplementationReport(i.name)
    for loc in i.locations:
        if loc.universal or loc.bad:
            continue
        if not error_states(i, loc.name, factor).is_empty():
            report.progress.append(loc.name)
        invariant = loc.invariant.federation(dim, factor)
        blocked = _delay_blocked(loc, dim, factor)
        for index in i.outgoing(loc.name):
            edge = i.edges[index]
            if i.polarity(edge.action) is not Polarity.OUTPUT:
                continue
            enabled = edge.guard.federation(dim, factor).intersect(invariant)
            if not blocked.includes(enabled):
                report.urgency.append(f"{loc.name}:{edge.action}")
    for name in report.progress:
        log.warning(f"[{i.name}] location {name} cannot always make progress")
    for name in report.urgency:
        log.warning(f"[{i.name}] output {name} is enabled while time can still pass")
    if strict and not report.ok:
        raise ImplementationError(f"{i.name} is not an implementation")
    return report


def check_robust_satisfaction(
    i: Tioa,
    s: Tioa,
    d: Fraction,
    strict: bool = False,
    limit_states: int = DEFAULT_LIMIT_STATES,
) -> RefinementResult:
    """Whether ``i`` perturbed by ``d`` still refines ``s``."""
    check_implementation(i, strict)
    return check_refinement(perturb_implementation(i, d), s, limit_states)
