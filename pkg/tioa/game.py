"""
Timed safety games on the zone graph.

The zone graph is explored forward with maximal-constant extrapolation and
inclusion subsumption. The game is then solved backwards: for every symbolic
state the set of valuations from which the spoiler can force a bad location
grows round by round until it stabilises. The round in which a valuation
became losing is its rank, which orders the spoiling strategy.
"""

import logging
from collections import deque
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import networkx as nx

from tioa.errors import ModelError, ResourceLimitError, StrategyError
from tioa.model import REFERENCE, Atom, Edge, LocationRole, Polarity, Relation, Tioa
from tioa.zones import Dbm, Federation, pred_t

log = logging.getLogger("rich")

DEFAULT_LIMIT_STATES = 200_000


@dataclass(frozen=True)
class SymbolicState:
    location: str
    zone: Dbm


@dataclass
class ZoneGraph:
    """Reachable symbolic states of an automaton; graph edges are keyed by edge index."""

    automaton: Tioa
    states: list[SymbolicState]
    graph: nx.MultiDiGraph
    initial: int = 0

    def __len__(self) -> int:
        return len(self.states)

    @property
    def transitions(self) -> list[tuple[int, int, int]]:
        return sorted((u, key, v) for u, v, key in self.graph.edges(keys=True))

    def successors(self, state: int) -> list[tuple[int, int]]:
        """``(edge index, target state)`` pairs leaving ``state``, by edge index."""
        return sorted((key, v) for _, v, key in self.graph.out_edges(state, keys=True))

    def predecessors(self, state: int) -> list[tuple[int, int]]:
        return sorted((u, key) for u, _, key in self.graph.in_edges(state, keys=True))


def build_zone_graph(a: Tioa, limit_states: int = DEFAULT_LIMIT_STATES) -> ZoneGraph:
    """
    Explores the reachable symbolic states of ``a`` breadth-first.

    ``a`` must have integer, non-parametric constants. A successor whose zone
    is included in a known state at the same location is merged into it.
    """
    if a.is_parametric:
        raise ModelError(f"{a.name}: instantiate the perturbation before building the zone graph")
    dim = a.dim
    max_constants = a.max_constants()
    invariants = {loc.name: loc.invariant.zone(dim) for loc in a.locations}

    start = invariants[a.initial]
    start = start.intersect(Dbm.zero(dim).up()) if start is not None else None
    if start is None:
        raise ModelError(f"{a.name}: the initial state violates the invariant of {a.initial}")

    graph = nx.MultiDiGraph()
    states = [SymbolicState(a.initial, start.extrapolate(max_constants))]
    by_location: dict[str, list[int]] = {a.initial: [0]}
    graph.add_node(0, location=a.initial)
    queue = deque([0])
    while queue:
        source = queue.popleft()
        state = states[source]
        for index in a.outgoing(state.location):
            edge = a.edges[index]
            zone = state.zone.and_atoms(edge.guard.atoms)
            if zone is None:
                continue
            target_inv = invariants[edge.target]
            if target_inv is None:
                continue
            zone = zone.reset(edge.resets).up().intersect(target_inv)
            if zone is None:
                continue
            zone = zone.extrapolate(max_constants)
            target = next(
                (i for i in by_location.get(edge.target, ()) if states[i].zone.includes(zone)),
                None,
            )
            if target is None:
                if len(states) >= limit_states:
                    raise ResourceLimitError(
                        f"{a.name}: zone graph exceeds {limit_states} symbolic states", len(states)
                    )
                target = len(states)
                states.append(SymbolicState(edge.target, zone))
                by_location.setdefault(edge.target, []).append(target)
                graph.add_node(target, location=edge.target)
                queue.append(target)
            graph.add_edge(source, target, key=index)
    log.debug(f"[{a.name}] zone graph: {len(states)} states, {graph.number_of_edges()} transitions")
    return ZoneGraph(a, states, graph)


def edge_predecessor(a: Tioa, edge: Edge, target: Federation) -> Federation:
    """Valuations before ``edge`` whose successor lies in ``target``."""
    w = target
    if edge.resets:
        w = w.and_atoms([Atom(x, REFERENCE, Relation.LE, Fraction(0)) for x in sorted(edge.resets)])
        w = w.free(edge.resets)
    return w.and_atoms(edge.guard.atoms).and_atoms(a.location(edge.source).invariant.atoms)


@dataclass(frozen=True)
class StrategyEntry:
    location: str
    zone: Federation
    move: Optional[str]
    rank: int = 0
    state: int = 0

    @property
    def is_delay(self) -> bool:
        return self.move is None

    def describe(self) -> str:
        return "delay" if self.move is None else self.move


@dataclass
class Strategy:
    owner: Polarity
    entries: list[StrategyEntry] = field(default_factory=list)

    def at(self, location: str) -> list[StrategyEntry]:
        return [entry for entry in self.entries if entry.location == location]

    def move_at(self, location: str, valuation: Sequence[Fraction]) -> Optional[StrategyEntry]:
        return next((e for e in self.at(location) if e.zone.contains_point(valuation)), None)


@dataclass
class GameResult:
    won: bool
    verifier: Polarity
    bad: frozenset[str]
    graph: ZoneGraph
    lose: list[Federation]
    history: list[list[Federation]]
    strategy: Strategy

    @property
    def rounds(self) -> int:
        return len(self.history) - 1

    @property
    def winning_region(self) -> dict[str, Federation]:
        dim = self.graph.automaton.dim
        region: dict[str, Federation] = {}
        for index, state in enumerate(self.graph.states):
            win = Federation(dim, [state.zone]).subtract(self.lose[index])
            region[state.location] = region.get(state.location, Federation.empty(dim)).union(win)
        return region

    def losing_at(self, state: int) -> Federation:
        return self.lose[state]


def has_progress_obligation(a: Tioa, location: str, verifier: Polarity) -> bool:
    """
    Whether the verifier loses by letting time run out of the invariant.

    Outputs are responsible for leaving a location before its invariant
    expires, except in the delayed-move locations of the robust game where
    the pending move belongs to the adversary.
    """
    return verifier is Polarity.OUTPUT and a.location(location).role is not LocationRole.DELAYED


class _Solver:
    def __init__(self, graph: ZoneGraph, verifier: Polarity, bad: frozenset[str]):
        self.graph = graph
        self.verifier = verifier
        self.bad = bad
        a = graph.automaton
        self.a = a
        dim = a.dim
        self.dim = dim
        self.zones = [Federation(dim, [s.zone]) for s in graph.states]
        self.is_bad = [s.location in bad for s in graph.states]
        self.outside: dict[str, Federation] = {}
        for loc in a.locations:
            if has_progress_obligation(a, loc.name, verifier) and not loc.invariant.is_true:
                self.outside[loc.name] = loc.invariant.federation(dim).complement()
        self.spoiler_moves: list[list[tuple[int, int]]] = []
        self.verifier_moves: list[list[tuple[int, int]]] = []
        for x in range(len(graph.states)):
            mine, theirs = [], []
            for index, y in graph.successors(x):
                if a.polarity(a.edges[index].action) is verifier:
                    mine.append((index, y))
                else:
                    theirs.append((index, y))
            self.verifier_moves.append(mine)
            self.spoiler_moves.append(theirs)

    def pred(self, x: int, index: int, target: Federation) -> Federation:
        if target.is_empty():
            return target
        return edge_predecessor(self.a, self.a.edges[index], target).intersect(self.zones[x])

    def attack(self, x: int, lose: list[Federation]) -> Federation:
        location = self.graph.states[x].location
        out = self.outside.get(location, Federation.empty(self.dim))
        for index, y in self.spoiler_moves[x]:
            out = out.union(self.pred(x, index, lose[y]))
        return out

    def escape(self, x: int, lose: list[Federation]) -> Federation:
        out = Federation.empty(self.dim)
        for index, y in self.verifier_moves[x]:
            out = out.union(self.pred(x, index, self.zones[y].subtract(lose[y])))
        return out

    def solve(self) -> GameResult:
        lose = [self.zones[x] if self.is_bad[x] else Federation.empty(self.dim) for x in range(len(self.zones))]
        history = [lose]
        while True:
            updated = []
            changed = False
            for x, current in enumerate(lose):
                if self.is_bad[x]:
                    updated.append(current)
                    continue
                attack = self.attack(x, lose)
                step = pred_t(attack, self.escape(x, lose).subtract(attack)).intersect(self.zones[x])
                if current.includes(step):
                    updated.append(current)
                else:
                    updated.append(current.union(step))
                    changed = True
            if not changed:
                break
            lose = updated
            history.append(lose)
        origin = (Fraction(0),) * (self.dim - 1)
        won = not lose[self.graph.initial].contains_point(origin)
        strategy = self.verifier_strategy(lose) if won else self.spoiler_strategy(history)
        log.debug(
            f"[{self.a.name}] game {'won' if won else 'lost'} by {self.verifier.value} "
            f"after {len(history) - 1} round(s) on {len(self.zones)} states"
        )
        return GameResult(won, self.verifier, self.bad, self.graph, lose, history, strategy)

    def spoiler_strategy(self, history: list[list[Federation]]) -> Strategy:
        strategy = Strategy(self.verifier.opposite)
        assigned: dict[str, Federation] = {}
        for rank in range(1, len(history)):
            previous = history[rank - 1]
            for x, zone in enumerate(history[rank]):
                location = self.graph.states[x].location
                remaining = zone.subtract(previous[x]).subtract(assigned.get(location, Federation.empty(self.dim)))
                if remaining.is_empty():
                    continue
                assigned[location] = assigned.get(location, Federation.empty(self.dim)).union(remaining)
                for index, y in self.spoiler_moves[x]:
                    piece = remaining.intersect(self.pred(x, index, previous[y]))
                    if piece.is_empty():
                        continue
                    strategy.entries.append(StrategyEntry(location, piece, self.a.edges[index].action, rank, x))
                    remaining = remaining.subtract(piece)
                if not remaining.is_empty():
                    strategy.entries.append(StrategyEntry(location, remaining, None, rank, x))
        return strategy

    def verifier_strategy(self, lose: list[Federation]) -> Strategy:
        strategy = Strategy(self.verifier)
        assigned: dict[str, Federation] = {}
        for x, zone in enumerate(self.zones):
            location = self.graph.states[x].location
            win = zone.subtract(lose[x]).subtract(assigned.get(location, Federation.empty(self.dim)))
            if win.is_empty():
                continue
            assigned[location] = assigned.get(location, Federation.empty(self.dim)).union(win)
            danger = lose[x].union(self.outside.get(location, Federation.empty(self.dim)))
            urgent = win.intersect(danger.down())
            for index, y in self.verifier_moves[x]:
                if urgent.is_empty():
                    break
                piece = urgent.intersect(self.pred(x, index, self.zones[y].subtract(lose[y])))
                if piece.is_empty():
                    continue
                strategy.entries.append(StrategyEntry(location, piece, self.a.edges[index].action, 0, x))
                urgent = urgent.subtract(piece)
                win = win.subtract(piece)
            if not win.is_empty():
                strategy.entries.append(StrategyEntry(location, win, None, 0, x))
        return strategy


def bad_locations(a: Tioa) -> frozenset[str]:
    return frozenset(loc.name for loc in a.locations if loc.bad)


def solve_safety_game(
    a: Tioa,
    verifier: Polarity,
    bad: Optional[Iterable[str]] = None,
    limit_states: int = DEFAULT_LIMIT_STATES,
    graph: Optional[ZoneGraph] = None,
) -> GameResult:
    """
    Solves the safety game where ``verifier`` avoids ``bad`` (default: the bad-flagged locations).

    The result carries the verifier's strategy when the game is won and a
    rank-ordered spoiling strategy otherwise.
    """
    bad_set = bad_locations(a) if bad is None else frozenset(bad)
    if graph is None:
        graph = build_zone_graph(a, limit_states)
    return _Solver(graph, verifier, bad_set).solve()


def extract_spoiling_strategy(result: GameResult) -> Strategy:
    if result.won:
        raise StrategyError(f"{result.graph.automaton.name}: the game is won, there is no spoiling strategy")
    return result.strategy


def outcome_runs(result: GameResult, strategy: Optional[Strategy] = None) -> nx.MultiDiGraph:
    """
    Sub-graph of the zone graph that the spoiling strategy lets happen.

    A spoiler edge is kept where the strategy plays its action, a verifier edge
    where the strategy delays. Only states reachable from the initial one remain.
    """
    strategy = strategy or extract_spoiling_strategy(result)
    graph = result.graph
    a = graph.automaton
    dim = a.dim
    spoiler = strategy.owner
    by_location: dict[str, list[StrategyEntry]] = {}
    for entry in strategy.entries:
        by_location.setdefault(entry.location, []).append(entry)

    outcome = nx.MultiDiGraph()
    outcome.add_node(graph.initial, location=graph.states[graph.initial].location)
    queue = deque([graph.initial])
    while queue:
        x = queue.popleft()
        state = graph.states[x]
        if state.location in result.bad:
            continue
        zone = Federation(dim, [state.zone])
        entries = [(e, e.zone.intersect(zone)) for e in by_location.get(state.location, ())]
        for index, y in graph.successors(x):
            edge = a.edges[index]
            before = edge_predecessor(a, edge, Federation(dim, [graph.states[y].zone])).intersect(zone)
            if a.polarity(edge.action) is spoiler:
                wanted = [part for entry, part in entries if entry.move == edge.action]
            else:
                wanted = [part for entry, part in entries if entry.is_delay]
            if not any(not part.intersect(before).is_empty() for part in wanted):
                continue
            if y not in outcome:
                outcome.add_node(y, location=graph.states[y].location)
                queue.append(y)
            outcome.add_edge(x, y, key=index)
    return outcome
