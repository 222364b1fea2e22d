"""
Parametric symbolic states: convex polyhedra over the clocks and the
perturbation parameter, with exact Fourier-Motzkin elimination.

Variables are numbered ``0 .. n-1`` for the clocks (clock index ``i`` of the
automaton is variable ``i - 1``) and ``n`` for the parameter. Every polyhedron
implicitly satisfies ``x >= 0`` for all clocks and ``0 <= D <= D_max``.
"""

import logging
from collections import deque
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import gcd, lcm
from typing import Optional, Union

from tioa.errors import ReplayError
from tioa.game import GameResult, Strategy, has_progress_obligation, outcome_runs
from tioa.model import Edge, Guard, Tioa
from tioa.transforms import GameAutomaton
from tioa.zones import Dbm, bound

log = logging.getLogger("rich")

DEFAULT_MAX_VISITS = 50


@dataclass(frozen=True, order=True)
class ParamAtom:
    """``sum(coeffs[v] * v) < constant`` (or ``<=``), with integer coefficients of gcd 1."""

    coeffs: tuple[int, ...]
    constant: Fraction
    strict: bool

    def negate(self) -> "ParamAtom":
        return ParamAtom(tuple(-c for c in self.coeffs), -self.constant, not self.strict)

    def holds(self, point: Sequence[Fraction]) -> bool:
        total = sum((c * p for c, p in zip(self.coeffs, point)), Fraction(0))
        return total < self.constant if self.strict else total <= self.constant

    def render(self, names: Sequence[str]) -> str:
        terms = []
        for c, name in zip(self.coeffs, names):
            if c == 0:
                continue
            sign = "-" if c < 0 else "+"
            magnitude = "" if abs(c) == 1 else f"{abs(c)}*"
            terms.append(f"{sign} {magnitude}{name}")
        lhs = " ".join(terms).lstrip("+ ")
        return f"{lhs} {'<' if self.strict else '<='} {self.constant}"


def make_atom(coeffs: Sequence[Union[int, Fraction]], constant: Union[int, Fraction], strict: bool) -> Union[ParamAtom, bool]:
    """
    Normalised atom, or a boolean when no variable is left.

    Coefficients are scaled to coprime integers; the constant stays rational.
    """
    coeffs = [Fraction(c) for c in coeffs]
    constant = Fraction(constant)
    if not any(coeffs):
        return constant > 0 if strict else constant >= 0
    denominator = lcm(*(c.denominator for c in coeffs))
    ints = [int(c * denominator) for c in coeffs]
    divisor = gcd(*ints)
    scale = Fraction(denominator, divisor)
    return ParamAtom(tuple(i // divisor for i in ints), constant * scale, strict)


def _tighter(a: ParamAtom, b: ParamAtom) -> bool:
    return a.constant < b.constant or (a.constant == b.constant and a.strict and not b.strict)


def _merge(atoms: Iterable[Union[ParamAtom, bool]]) -> Optional[tuple[ParamAtom, ...]]:
    """Keeps the tightest atom per direction; ``None`` when some atom is trivially false."""
    best: dict[tuple[int, ...], ParamAtom] = {}
    for atom in atoms:
        if atom is True:
            continue
        if atom is False:
            return None
        kept = best.get(atom.coeffs)
        if kept is None or _tighter(atom, kept):
            best[atom.coeffs] = atom
    for coeffs, atom in best.items():
        opposite = best.get(tuple(-c for c in coeffs))
        if opposite is not None:
            total = atom.constant + opposite.constant
            if total < 0 or (total == 0 and (atom.strict or opposite.strict)):
                return None
    return tuple(sorted(best.values()))


def fourier_motzkin(atoms: Sequence[ParamAtom], var: int) -> Optional[tuple[ParamAtom, ...]]:
    """Projects variable ``var`` out of the conjunction ``atoms``; ``None`` when it is infeasible."""
    upper, lower, rest = [], [], []
    for atom in atoms:
        c = atom.coeffs[var]
        (upper if c > 0 else lower if c < 0 else rest).append(atom)
    combined: list[Union[ParamAtom, bool]] = list(rest)
    for u in upper:
        for l in lower:
            cu, cl = u.coeffs[var], -l.coeffs[var]
            coeffs = [cl * a + cu * b for a, b in zip(u.coeffs, l.coeffs)]
            coeffs[var] = 0
            combined.append(make_atom(coeffs, cl * u.constant + cu * l.constant, u.strict or l.strict))
    return _merge(combined)


class ParamSpace:
    """Dimensions of a parametric state space and its implicit constraints."""

    def __init__(self, clocks: int, delta_max: Optional[Fraction] = None):
        self.clocks = clocks
        self.size = clocks + 1
        self.delta = clocks
        self.delta_max = None if delta_max is None else Fraction(delta_max)

    def unit(self, var: int, sign: int = 1) -> list[int]:
        coeffs = [0] * self.size
        coeffs[var] = sign
        return coeffs

    @cached_property
    def base(self) -> tuple[ParamAtom, ...]:
        atoms = [make_atom(self.unit(v, -1), 0, False) for v in range(self.size)]
        if self.delta_max is not None:
            atoms.append(make_atom(self.unit(self.delta), self.delta_max, False))
        return tuple(atoms)

    def poly(self, atoms: Iterable[Union[ParamAtom, bool]] = ()) -> "ParamPoly":
        return ParamPoly(self, _merge([*self.base, *atoms]))

    def universe(self) -> "ParamPoly":
        return self.poly()

    def origin(self) -> "ParamPoly":
        return self.poly(make_atom(self.unit(v), 0, False) for v in range(self.clocks))

    def guard_atoms(self, guard: Guard) -> list[Union[ParamAtom, bool]]:
        out = []
        for atom in guard.atoms:
            coeffs = [Fraction(0)] * self.size
            if atom.left:
                coeffs[atom.left - 1] += 1
            if atom.right:
                coeffs[atom.right - 1] -= 1
            coeffs[self.delta] -= atom.delta
            if atom.relation.is_upper:
                out.append(make_atom(coeffs, atom.bound, atom.relation.strict))
            else:
                out.append(make_atom([-c for c in coeffs], -atom.bound, atom.relation.strict))
        return out

    def from_guard(self, guard: Guard) -> "ParamPoly":
        return self.poly(self.guard_atoms(guard))

    def names(self, clock_names: Sequence[str]) -> list[str]:
        return [*clock_names, "D"]


class ParamPoly:
    """Convex polyhedron; ``atoms is None`` encodes the empty set."""

    __slots__ = ("space", "atoms", "_empty")

    def __init__(self, space: ParamSpace, atoms: Optional[tuple[ParamAtom, ...]]):
        self.space = space
        self.atoms = atoms
        self._empty: Optional[bool] = None if atoms is not None else True

    def is_empty(self) -> bool:
        if self._empty is None:
            atoms: Optional[tuple[ParamAtom, ...]] = self.atoms
            remaining = set(range(self.space.size))
            while atoms and remaining:
                var = min(
                    remaining,
                    key=lambda v: sum(1 for a in atoms if a.coeffs[v] > 0) * sum(1 for a in atoms if a.coeffs[v] < 0),
                )
                remaining.discard(var)
                atoms = fourier_motzkin(atoms, var)
            self._empty = atoms is None
        return self._empty

    def contains(self, valuation: Sequence[Fraction], delta: Fraction) -> bool:
        if self.atoms is None:
            return False
        point = [Fraction(v) for v in valuation] + [Fraction(delta)]
        return all(atom.holds(point) for atom in self.atoms)

    def and_atoms(self, atoms: Iterable[Union[ParamAtom, bool]]) -> "ParamPoly":
        if self.atoms is None:
            return self
        return ParamPoly(self.space, _merge([*self.atoms, *atoms]))

    def intersect(self, other: "ParamPoly") -> "ParamPoly":
        if other.atoms is None:
            return other
        return self.and_atoms(other.atoms)

    def eliminate(self, variables: Iterable[int]) -> "ParamPoly":
        """Existential projection of ``variables``, which become free again (apart from the implicit bounds)."""
        atoms = self.atoms
        for var in variables:
            if atoms is None:
                break
            atoms = fourier_motzkin(atoms, var)
        if atoms is None:
            return ParamPoly(self.space, None)
        return self.space.poly(atoms)

    def _shift_time(self, direction: int) -> "ParamPoly":
        if self.atoms is None:
            return self
        clocks = self.space.clocks
        extended = []
        for atom in self.atoms:
            drift = -direction * sum(atom.coeffs[:clocks])
            extended.append(make_atom([*atom.coeffs, drift], atom.constant, atom.strict))
        extended.append(make_atom([0] * self.space.size + [-1], 0, False))
        atoms = _merge(extended)
        if atoms is None:
            return ParamPoly(self.space, None)
        atoms = fourier_motzkin(atoms, self.space.size)
        if atoms is None:
            return ParamPoly(self.space, None)
        return self.space.poly(ParamAtom(a.coeffs[:-1], a.constant, a.strict) for a in atoms)

    def elapse(self) -> "ParamPoly":
        """Time successors; the parameter does not evolve."""
        return self._shift_time(+1)

    def elapse_past(self) -> "ParamPoly":
        return self._shift_time(-1)

    def reset(self, clocks: Iterable[int]) -> "ParamPoly":
        clocks = sorted(clocks)
        projected = self.eliminate(x - 1 for x in clocks)
        return projected.and_atoms(make_atom(self.space.unit(x - 1), 0, False) for x in clocks)

    def free(self, clocks: Iterable[int]) -> "ParamPoly":
        return self.eliminate(x - 1 for x in sorted(clocks))

    def implies(self, atom: ParamAtom) -> bool:
        """Whether every point of the polyhedron satisfies ``atom``."""
        if self.atoms is None:
            return True
        for mine in self.atoms:
            if mine.coeffs == atom.coeffs and (mine == atom or _tighter(mine, atom)):
                return True
        return self.and_atoms([atom.negate()]).is_empty()

    def includes(self, other: "ParamPoly") -> bool:
        if other.is_empty():
            return True
        if self.atoms is None:
            return False
        return all(other.implies(atom) for atom in self.atoms)

    def reduce(self) -> "ParamPoly":
        """Drops the atoms implied by the others; the implicit bounds are kept."""
        if self.is_empty():
            return ParamPoly(self.space, None)
        kept = list(self.atoms)
        for atom in self.atoms:
            if atom in self.space.base:
                continue
            others = ParamPoly(self.space, tuple(a for a in kept if a != atom))
            if others.implies(atom):
                kept.remove(atom)
        reduced = ParamPoly(self.space, tuple(kept))
        reduced._empty = False
        return reduced

    def subtract(self, other: "ParamPoly") -> list["ParamPoly"]:
        if self.is_empty():
            return []
        if other.atoms is None or self.intersect(other).is_empty():
            return [self]
        # rest always contains the (non-empty) intersection
        pieces = []
        rest: ParamPoly = self
        for atom in other.atoms:
            piece = rest.and_atoms([atom.negate()])
            if piece.is_empty():
                continue
            pieces.append(piece.reduce())
            rest = rest.and_atoms([atom])
        return pieces

    def slice(self, delta: Fraction, factor: int = 1) -> Optional[Dbm]:
        """
        The clock zone obtained by fixing the parameter to ``delta``.

        Only polyhedra whose clock parts are difference constraints have a
        zone; others raise ``ValueError``.
        """
        if self.atoms is None:
            return None
        dim = self.space.clocks + 1
        constraints = []
        for atom in self.atoms:
            limit = (atom.constant - atom.coeffs[self.space.delta] * Fraction(delta)) * factor
            clock_part = atom.coeffs[: self.space.clocks]
            nonzero = [(v, c) for v, c in enumerate(clock_part) if c]
            if not nonzero:
                if limit < 0 or (limit == 0 and atom.strict):
                    return None
                continue
            positive = [v + 1 for v, c in nonzero if c > 0]
            negative = [v + 1 for v, c in nonzero if c < 0]
            magnitudes = {abs(c) for _, c in nonzero}
            if len(positive) > 1 or len(negative) > 1 or len(magnitudes) != 1:
                raise ValueError(f"not a difference constraint: {atom}")
            value = limit / magnitudes.pop()
            if value.denominator != 1:
                raise ValueError(f"slice at {delta} has a non-integral bound {value}")
            i = positive[0] if positive else 0
            j = negative[0] if negative else 0
            constraints.append((i, j, bound(int(value), atom.strict)))
        return Dbm.from_constraints(dim, constraints)

    def render(self, clock_names: Sequence[str]) -> str:
        if self.atoms is None:
            return "false"
        names = self.space.names(clock_names)
        return " && ".join(atom.render(names) for atom in self.atoms if atom not in self.space.base) or "true"

    def __repr__(self) -> str:
        return f"ParamPoly({self.render([f'x{i}' for i in range(1, self.space.clocks + 1)])})"


def _convex_union(p: ParamPoly, q: ParamPoly) -> Optional[ParamPoly]:
    """
    ``p | q`` as one polyhedron when it is convex in the simple case, else ``None``.

    Handles ``C && a`` with ``C && b`` where ``C && !a && !b`` is empty, which
    covers the two halves of a split along one hyperplane.
    """
    mine, theirs = set(p.atoms or ()), set(q.atoms or ())
    only_p, only_q = mine - theirs, theirs - mine
    if len(only_p) != 1 or len(only_q) != 1:
        return None
    (a,), (b,) = only_p, only_q
    common = p.space.poly(mine & theirs)
    if not common.and_atoms([a.negate(), b.negate()]).is_empty():
        return None
    return common.reduce()


def _drop_covered(polys: Iterable[ParamPoly]) -> list[ParamPoly]:
    """Non-empty polyhedra, without those included in another one; keeps the input order."""
    kept: list[ParamPoly] = []
    seen: set[tuple[ParamAtom, ...]] = set()
    for poly in polys:
        if poly.atoms in seen or poly.is_empty():
            continue
        if any(other.includes(poly) for other in kept):
            continue
        kept = [other for other in kept if not poly.includes(other)]
        kept.append(poly)
        seen.add(poly.atoms)
    return kept


class ParamRegion:
    """
    Finite union of parametric polyhedra in one space.

    The pieces are kept non-empty and none is included in another.
    """

    __slots__ = ("space", "polys")

    def __init__(self, space: ParamSpace, polys: Iterable[ParamPoly] = ()):
        self.space = space
        self.polys = tuple(_drop_covered(polys))

    @classmethod
    def of(cls, poly: ParamPoly) -> "ParamRegion":
        return cls(poly.space, [poly])

    def __iter__(self):
        return iter(self.polys)

    def __len__(self) -> int:
        return len(self.polys)

    def is_empty(self) -> bool:
        return not self.polys

    def union(self, other: "ParamRegion") -> "ParamRegion":
        return ParamRegion(self.space, self.polys + other.polys)

    def intersect(self, other: "ParamRegion") -> "ParamRegion":
        return ParamRegion(self.space, [a.intersect(b) for a in self.polys for b in other.polys])

    def intersect_poly(self, poly: ParamPoly) -> "ParamRegion":
        return ParamRegion(self.space, [a.intersect(poly) for a in self.polys])

    def _difference(self, other: "ParamRegion") -> list[ParamPoly]:
        pieces = list(self.polys)
        for b in other.polys:
            if not pieces:
                break
            pieces = [piece for a in pieces for piece in a.subtract(b)]
        return pieces

    def subtract(self, other: "ParamRegion") -> "ParamRegion":
        return ParamRegion(self.space, self._difference(other)).coalesce()

    def coalesce(self) -> "ParamRegion":
        """Merges pairs of pieces whose union is a single polyhedron, until none is left."""
        polys = list(self.polys)
        merged = True
        while merged:
            merged = False
            for i, j in ((i, j) for i in range(len(polys)) for j in range(i + 1, len(polys))):
                union = _convex_union(polys[i], polys[j])
                if union is not None:
                    polys = [union] + [p for k, p in enumerate(polys) if k not in (i, j)]
                    polys = _drop_covered(polys)
                    merged = True
                    break
        return ParamRegion(self.space, polys)

    def includes(self, other: "ParamRegion") -> bool:
        rest = ParamRegion(self.space, [p for p in other.polys if not any(q.includes(p) for q in self.polys)])
        return not rest._difference(self)

    def elapse(self) -> "ParamRegion":
        return ParamRegion(self.space, [p.elapse() for p in self.polys])

    def elapse_past(self) -> "ParamRegion":
        return ParamRegion(self.space, [p.elapse_past() for p in self.polys])

    def contains(self, valuation: Sequence[Fraction], delta: Fraction) -> bool:
        return any(p.contains(valuation, delta) for p in self.polys)

    def render(self, clock_names: Sequence[str]) -> str:
        if not self.polys:
            return "false"
        return " || ".join(f"({p.render(clock_names)})" for p in self.polys)


def ppost(p: ParamPoly, edge: Edge, target_invariant: ParamPoly) -> ParamPoly:
    """Discrete successor along ``edge``; the guard may mention the parameter."""
    return p.and_atoms(p.space.guard_atoms(edge.guard)).reset(edge.resets).intersect(target_invariant)


def ppred(p: ParamPoly, edge: Edge, source_invariant: ParamPoly) -> ParamPoly:
    space = p.space
    before = p
    if edge.resets:
        before = p.and_atoms(make_atom(space.unit(x - 1), 0, False) for x in edge.resets).free(edge.resets)
    return before.and_atoms(space.guard_atoms(edge.guard)).intersect(source_invariant)


def ppred_region(region: ParamRegion, edge: Edge, source_invariant: ParamPoly) -> ParamRegion:
    return ParamRegion(region.space, [ppred(p, edge, source_invariant) for p in region])


def _ppred_t_convex(goal: ParamPoly, avoid: ParamPoly) -> ParamRegion:
    space = goal.space
    avoid_past = avoid.elapse_past()
    result = list(goal.elapse_past().subtract(avoid_past))
    touching = goal.intersect(avoid_past)
    if not touching.is_empty():
        result.extend(piece.elapse_past() for piece in touching.subtract(avoid))
    return ParamRegion(space, result)


def ppred_t(goal: ParamRegion, avoid: ParamRegion) -> ParamRegion:
    """Safe timed predecessors with the parameter held constant along the delay."""
    result = ParamRegion(goal.space)
    for g in goal:
        if avoid.is_empty():
            result = result.union(ParamRegion.of(g.elapse_past()))
            continue
        part: Optional[ParamRegion] = None
        for b in avoid:
            piece = _ppred_t_convex(g, b)
            part = piece if part is None else part.intersect(piece).coalesce()
            if part.is_empty():
                break
        if part is not None:
            result = result.union(part)
    return result.coalesce()


@dataclass(frozen=True)
class DeltaInterval:
    low: Fraction
    low_strict: bool
    high: Optional[Fraction]
    high_strict: bool

    def __str__(self) -> str:
        left = "(" if self.low_strict else "["
        right = "inf)" if self.high is None else f"{self.high}{')' if self.high_strict else ']'}"
        return f"{left}{self.low}, {right}"


def project_delta(region: ParamRegion) -> list[DeltaInterval]:
    """Values of the parameter for which the region meets the all-zero clock valuation."""
    space = region.space
    origin = space.origin()
    intervals = []
    for poly in region:
        at_origin = poly.intersect(origin)
        if at_origin.is_empty():
            continue
        projected = at_origin.eliminate(range(space.clocks))
        low, low_strict = Fraction(0), False
        high: Optional[Fraction] = None
        high_strict = False
        for atom in projected.atoms or ():
            c = atom.coeffs[space.delta]
            if c > 0:
                value = atom.constant / c
                if high is None or value < high or (value == high and atom.strict):
                    high, high_strict = value, atom.strict
            elif c < 0:
                value = atom.constant / c
                if value > low or (value == low and atom.strict):
                    low, low_strict = value, atom.strict
        intervals.append(DeltaInterval(low, low_strict, high, high_strict))
    return sorted(intervals, key=lambda i: (i.low, i.low_strict))


def minimize(intervals: Sequence[DeltaInterval]) -> tuple[Fraction, bool]:
    """Infimum of the union of ``intervals`` and whether it is attained."""
    if not intervals:
        raise ReplayError("no value of the parameter lies in the region")
    low = min(i.low for i in intervals)
    attained = any(i.low == low and not i.low_strict for i in intervals)
    return low, attained


@dataclass(frozen=True)
class ReplayResult:
    delta_min: Fraction
    attained: bool
    intervals: tuple[DeltaInterval, ...]
    explored: int


def replay_spoiling_strategy(
    game: GameAutomaton,
    result: GameResult,
    delta_bad: Fraction,
    strategy: Optional[Strategy] = None,
    max_visits: int = DEFAULT_MAX_VISITS,
) -> ReplayResult:
    """
    Computes the smallest perturbation for which the spoiling strategy still wins.

    ``game`` is the symbolic robust game automaton whose instantiation at
    ``delta_bad`` produced ``result``; both are in the same time scale. States
    of the strategy's outcome are revisited backwards from the bad locations
    until the parametric losing sets stabilise.
    """
    a: Tioa = game.automaton
    graph = result.graph
    outcome = outcome_runs(result, strategy)
    space = ParamSpace(len(a.clocks), delta_bad)
    invariants = {loc.name: space.from_guard(loc.invariant) for loc in a.locations}
    outside = {
        loc.name: ParamRegion.of(space.universe()).subtract(ParamRegion.of(invariants[loc.name]))
        for loc in a.locations
        if has_progress_obligation(a, loc.name, game.verifier) and not loc.invariant.is_true
    }
    empty = ParamRegion(space)
    win: dict[int, ParamRegion] = {}
    waiting: deque[int] = deque()
    for node in sorted(outcome.nodes):
        location = graph.states[node].location
        if location in game.bad:
            win[node] = ParamRegion.of(invariants[location])
    for node in sorted(win):
        for source, _ in graph.predecessors(node):
            if source in outcome and source not in win and source not in waiting:
                waiting.append(source)

    visits: dict[int, int] = {}
    while waiting:
        x = waiting.popleft()
        if visits.get(x, 0) >= max_visits:
            raise ReplayError(f"[{a.name}] replay of state {x} does not stabilise within {max_visits} visits")
        visits[x] = visits.get(x, 0) + 1
        location = graph.states[x].location
        invariant = invariants[location]
        attack = outside.get(location, empty)
        escape = empty
        for index, y in graph.successors(x):
            edge = a.edges[index]
            if a.polarity(edge.action) is game.verifier:
                target = graph.states[y].location
                safe = ParamRegion.of(invariants[target]).subtract(win.get(y, empty))
                escape = escape.union(ppred_region(safe, edge, invariant))
            elif outcome.has_edge(x, y, key=index):
                attack = attack.union(ppred_region(win.get(y, empty), edge, invariant))
        updated = ppred_t(attack, escape.subtract(attack)).intersect_poly(invariant)
        current = win.get(x, empty)
        if current.includes(updated):
            continue
        win[x] = current.union(updated).coalesce()
        for source, _ in graph.predecessors(x):
            if source in outcome and source not in waiting:
                waiting.append(source)

    intervals = project_delta(win.get(graph.initial, empty))
    if not intervals:
        raise ReplayError(f"[{a.name}] the spoiling strategy does not win for any perturbation up to {delta_bad}")
    delta_min, attained = minimize(intervals)
    if delta_min > delta_bad:
        raise ReplayError(f"[{a.name}] replay bound {delta_min} exceeds the lost probe {delta_bad}")
    log.debug(
        f"[{a.name}] replay: {'min' if attained else 'inf'} {delta_min} over {len(win)} state(s), "
        f"{sum(visits.values())} visit(s)"
    )
    return ReplayResult(delta_min, attained, tuple(intervals), len(win))
