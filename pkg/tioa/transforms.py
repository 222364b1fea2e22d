"""
Model transformations: guard enlargement and restriction, perturbation of
implementations, and the game automata used for consistency, usefulness and
robustness checks.

A perturbation ``Delta`` is either a non-negative rational or ``SYMBOLIC``,
in which case the shifted bounds carry a coefficient of the parameter and
must be instantiated before any zone is built.
"""

import logging
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional, Union

from tioa.errors import ModelError
from tioa.model import (
    REFERENCE,
    Action,
    Atom,
    Edge,
    Guard,
    Location,
    LocationRole,
    Polarity,
    Relation,
    Tioa,
    guard_from_zone,
    model_factor,
    scale_constants,
    scaling_factor,
    with_universal,
)
from tioa.zones import Federation, pred_t

log = logging.getLogger("rich")

Delta = Optional[Fraction]
SYMBOLIC: Delta = None

ERR_LOCATION = "@err"
ERR_ACTION = "@err"
BAD_LOCATION = "@bad"
ROB_ACTION = "@rob"
ROB_CLOCK = "@y"


def enlarge_guard(g: Guard, d: Union[Delta, int]) -> Guard:
    return g.enlarge(None if d is None else Fraction(d))


def restrict_guard(g: Guard, d: Union[Delta, int]) -> Guard:
    return g.restrict(None if d is None else Fraction(d))


@dataclass(frozen=True)
class GameAutomaton:
    """An automaton together with the locations the verifier must avoid."""

    automaton: Tioa
    bad: frozenset[str]
    verifier: Polarity

    @property
    def spoiler(self) -> Polarity:
        return self.verifier.opposite

    def instantiate(self, delta_value: Fraction) -> "GameAutomaton":
        return replace(self, automaton=self.automaton.instantiate(delta_value))

    def scaled(self, factor: int) -> "GameAutomaton":
        return replace(self, automaton=scale_constants(self.automaton, factor).automaton)

    @property
    def size(self) -> tuple[int, int]:
        return len(self.automaton.locations), len(self.automaton.edges)


def _components(federation: Federation, factor: int) -> list[Guard]:
    return [guard_from_zone(zone, factor) for zone in federation]


def perturb_implementation(i: Tioa, d: Union[Fraction, int]) -> Tioa:
    """
    Perturbation of an implementation by ``d``.

    Output guards and invariants are enlarged, input guards restricted. Inputs
    that the restriction no longer accepts are redirected to the universal
    location, which is created when the first redirect needs it.
    """
    d = Fraction(d)
    if d < 0:
        raise ValueError("perturbation must be non-negative")
    factor = scaling_factor(*i.constants(), d)
    dim = i.dim
    locations = tuple(loc if loc.universal else replace(loc, invariant=loc.invariant.enlarge(d)) for loc in i.locations)
    perturbed = replace(i, locations=locations)
    edges: list[Edge] = []
    for edge in i.edges:
        if perturbed.location(edge.source).universal:
            edges.append(edge)
        elif i.polarity(edge.action) is Polarity.OUTPUT:
            edges.append(replace(edge, guard=edge.guard.enlarge(d)))
        else:
            guard = edge.guard.restrict(d)
            if guard.zone(dim, factor) is not None:
                edges.append(replace(edge, guard=guard))

    redirects: list[tuple[str, str, Guard]] = []
    for loc in locations:
        if loc.universal:
            continue
        invariant = loc.invariant.federation(dim, factor)
        for action in i.inputs:
            covered = Federation.empty(dim)
            for edge in edges:
                if edge.source == loc.name and edge.action == action:
                    covered = covered.union(edge.guard.federation(dim, factor))
            for guard in _components(invariant.subtract(covered), factor):
                redirects.append((loc.name, action, guard))

    perturbed = replace(perturbed, edges=tuple(edges))
    if redirects:
        perturbed, universal = with_universal(perturbed)
        perturbed = replace(
            perturbed,
            edges=perturbed.edges + tuple(Edge(source, action, guard, frozenset(), universal) for source, action, guard in redirects),
        )
    log.debug(f"[{i.name}] perturbed by {d}: {len(redirects)} redirect(s) to the universal location")
    return perturbed


def enlarge_spec_outputs(s: Tioa, d: Union[Delta, int]) -> Tioa:
    amount = None if d is None else Fraction(d)
    return replace(
        s,
        locations=tuple(replace(loc, invariant=loc.invariant.enlarge(amount)) for loc in s.locations),
        edges=tuple(
            replace(edge, guard=edge.guard.enlarge(amount)) if s.polarity(edge.action) is Polarity.OUTPUT else edge
            for edge in s.edges
        ),
    )


def error_states(s: Tioa, location: str, factor: int = 1) -> Federation:
    """
    Valuations of ``location`` that violate independent progress.

    These are the points of the invariant from which no delay inside the
    invariant reaches an output that can be taken. A location whose invariant
    does not bound time has none.
    """
    dim = s.dim
    loc = s.location(location)
    if loc.invariant.is_true:
        return Federation.empty(dim)
    invariant = loc.invariant.federation(dim, factor)
    enabled = Federation.empty(dim)
    for index in s.outgoing(location):
        edge = s.edges[index]
        if s.polarity(edge.action) is not Polarity.OUTPUT:
            continue
        landing = s.location(edge.target).invariant.federation(dim, factor)
        if edge.resets:
            landing = landing.and_atoms([Atom(x, REFERENCE, Relation.LE, Fraction(0)) for x in sorted(edge.resets)])
            landing = landing.free(edge.resets)
        enabled = enabled.union(landing.and_atoms(edge.guard.atoms, factor).intersect(invariant))
    return invariant.subtract(pred_t(enabled, invariant.complement()))


def _reserve(a: Tioa, locations: tuple[str, ...] = (), actions: tuple[str, ...] = (), clocks: tuple[str, ...] = ()):
    taken = {loc.name for loc in a.locations}
    for name in locations:
        if name in taken:
            raise ModelError(f"{a.name}: location name {name!r} is reserved")
    for name in actions:
        if name in {act.name for act in a.actions}:
            raise ModelError(f"{a.name}: action name {name!r} is reserved")
    for name in clocks:
        if name in a.clocks:
            raise ModelError(f"{a.name}: clock name {name!r} is reserved")


def build_consistency_game(s: Tioa) -> GameAutomaton:
    """Adds a bad location reached by an input exactly from the states violating independent progress."""
    if s.is_parametric:
        raise ModelError(f"{s.name}: the consistency game needs concrete constants")
    _reserve(s, locations=(ERR_LOCATION,), actions=(ERR_ACTION,))
    factor = model_factor(s)
    err_edges = []
    for loc in s.locations:
        if loc.bad:
            continue
        for guard in _components(error_states(s, loc.name, factor), factor):
            err_edges.append(Edge(loc.name, ERR_ACTION, guard, frozenset(), ERR_LOCATION))
    game = replace(
        s,
        name=f"{s.name}.consistency",
        actions=s.actions + (Action(ERR_ACTION, Polarity.INPUT),),
        locations=s.locations + (Location(ERR_LOCATION, bad=True),),
        edges=s.edges + tuple(err_edges),
    )
    log.debug(f"[{s.name}] consistency game: {len(err_edges)} error edge(s)")
    return GameAutomaton(game, frozenset(loc.name for loc in game.locations if loc.bad), Polarity.OUTPUT)


def build_usefulness_game(s: Tioa) -> GameAutomaton:
    bad = frozenset(loc.name for loc in s.locations if loc.und)
    if not bad:
        log.debug(f"[{s.name}] usefulness game has no undesirable location")
    return GameAutomaton(s, bad, Polarity.INPUT)


def robust_location_names(a: Tioa, index: int) -> tuple[str, str]:
    source = a.edges[index].source
    return f"{source}@a{index}", f"{source}@b{index}"


def build_robust_game_automaton(
    a: Tioa,
    bad: frozenset[str],
    d: Delta,
    verifier: Polarity,
) -> GameAutomaton:
    """
    Robust game automaton where every verifier move can be shifted by up to ``d``.

    A verifier edge ``(q, o, g, r, q')`` becomes a proposal ``q -> q@a`` that
    resets ``@y``, an optional confirmation ``q@a -> q@b`` at ``@y == d``, and
    adversary moves ``@rob`` from both new locations: to ``q'`` under ``g``
    and to the bad location under each convex part of ``not g``. Adversary
    edges of ``q`` stay available from ``q@a`` and ``q@b``; self-loops
    without resets stay on the location they are copied to.
    """
    if a.is_parametric:
        raise ModelError(f"{a.name}: the robust game needs a non-parametric automaton")
    _reserve(a, locations=(BAD_LOCATION,), actions=(ROB_ACTION,), clocks=(ROB_CLOCK,))
    factor = model_factor(a)
    dim = a.dim
    y = dim
    within = Guard((Atom(y, REFERENCE, Relation.LE, Fraction(0), delta=1),))
    at_limit = Guard((Atom(y, REFERENCE, Relation.GE, Fraction(0), delta=1),) + within.atoms)
    spoiler = verifier.opposite

    locations = list(a.locations)
    edges: list[Edge] = []
    copies: dict[str, list[str]] = {loc.name: [] for loc in a.locations}
    for index, edge in enumerate(a.edges):
        if a.polarity(edge.action) is verifier:
            proposed, delayed = robust_location_names(a, index)
            _reserve(a, locations=(proposed, delayed))
            locations.append(Location(proposed, within, role=LocationRole.PROPOSED))
            locations.append(Location(delayed, within, role=LocationRole.DELAYED))
            copies[edge.source] += [proposed, delayed]

    for index, edge in enumerate(a.edges):
        if a.polarity(edge.action) is not verifier:
            edges.append(edge)
            loops = edge.source == edge.target and not edge.resets
            for copy in copies[edge.source]:
                edges.append(replace(edge, source=copy, target=copy if loops else edge.target))
            continue
        proposed, delayed = robust_location_names(a, index)
        violations = _components(edge.guard.federation(dim, factor).complement(), factor)
        edges.append(Edge(edge.source, edge.action, edge.guard, frozenset({y}), proposed))
        edges.append(Edge(proposed, edge.action, at_limit, frozenset({y}), delayed))
        for source in (proposed, delayed):
            edges.append(Edge(source, ROB_ACTION, edge.guard, edge.resets, edge.target))
            for guard in violations:
                edges.append(Edge(source, ROB_ACTION, guard, frozenset(), BAD_LOCATION))

    locations.append(Location(BAD_LOCATION, bad=True))
    robust = Tioa(
        f"{a.name}.robust",
        a.clocks + (ROB_CLOCK,),
        a.actions + (Action(ROB_ACTION, spoiler),),
        tuple(locations),
        a.initial,
        tuple(edges),
    )
    if d is not None:
        robust = robust.instantiate(Fraction(d))
    log.debug(
        f"[{a.name}] robust game automaton: {len(robust.locations)} locations, {len(robust.edges)} edges"
        + ("" if d is None else f" at {d}")
    )
    return GameAutomaton(robust, frozenset(bad) | {BAD_LOCATION}, verifier)


def robust_game_size(a: Tioa, verifier: Polarity) -> tuple[int, int]:
    """Location and edge counts of the robust game automaton of ``a``, computed from ``a`` alone."""
    factor = model_factor(a)
    dim = a.dim
    verifier_edges = [e for e in a.edges if a.polarity(e.action) is verifier]
    per_location: dict[str, int] = {}
    for edge in verifier_edges:
        per_location[edge.source] = per_location.get(edge.source, 0) + 1
    locations = len(a.locations) + 2 * len(verifier_edges) + 1
    edges = 0
    for edge in a.edges:
        if a.polarity(edge.action) is verifier:
            edges += 4 + 2 * len(edge.guard.federation(dim, factor).complement())
        else:
            edges += 1 + 2 * per_location.get(edge.source, 0)
    return locations, edges