"""
Exact zone algebra: difference bound matrices and federations.

A bound ``x_i - x_j < v`` or ``x_i - x_j <= v`` is stored as a single integer
``2 * v + (0 if strict else 1)``, so that the natural integer order is the
order on bounds and the sum of two bounds is a couple of shifts. ``INF`` is a
sentinel larger than every finite bound. Index 0 of every matrix is the
reference clock, whose value is always zero.

All values are immutable. Operations that may produce an empty zone return
``None`` for DBMs and an empty ``Federation`` for federations.
"""

from collections.abc import Iterable, Iterator, Sequence
from fractions import Fraction
from typing import TYPE_CHECKING, NamedTuple, Optional

if TYPE_CHECKING:
    from tioa.model import Atom

INF = 1 << 60
LE_ZERO = 1
LT_ZERO = 0


def bound(value: int, strict: bool) -> int:
    return (value << 1) | (0 if strict else 1)


def bound_value(raw: int) -> int:
    return raw >> 1


def is_strict(raw: int) -> bool:
    return not raw & 1


def bound_add(a: int, b: int) -> int:
    if a >= INF or b >= INF:
        return INF
    return (((a >> 1) + (b >> 1)) << 1) | (a & b & 1)


def bound_negate(raw: int) -> int:
    """Bound of the complement: not (x - y <= v) is (y - x < -v)."""
    return 1 - raw


class Bound(NamedTuple):
    value: Optional[int]
    strict: bool

    @classmethod
    def decode(cls, raw: int) -> "Bound":
        if raw >= INF:
            return cls(None, True)
        return cls(bound_value(raw), is_strict(raw))


def _satisfies(diff: Fraction, raw: int) -> bool:
    if raw >= INF:
        return True
    limit = bound_value(raw)
    return diff < limit if is_strict(raw) else diff <= limit


def atom_constraint(atom: "Atom", factor: int = 1) -> tuple[int, int, int]:
    """
    Translates a clock atom into a DBM constraint ``(i, j, raw)``.

    :param atom: A non-parametric atom.
    :param factor: Multiplier applied to the constant before encoding.
    """
    if atom.delta:
        raise ValueError("parametric atom must be instantiated before building a zone")
    scaled = atom.bound * factor
    if scaled.denominator != 1:
        raise ValueError(f"constant {atom.bound} is not integral at scale {factor}")
    value = int(scaled)
    strict = atom.relation.strict
    if atom.relation.is_upper:
        return atom.left, atom.right, bound(value, strict)
    return atom.right, atom.left, bound(-value, strict)


class Dbm:
    """Canonical, non-empty difference bound matrix."""

    __slots__ = ("dim", "m", "_hash")

    def __init__(self, dim: int, m: Sequence[int]):
        self.dim = dim
        self.m = tuple(m)
        self._hash: Optional[int] = None

    # Construction

    @classmethod
    def universe(cls, dim: int) -> "Dbm":
        m = [INF] * (dim * dim)
        for j in range(dim):
            m[j] = LE_ZERO
        for i in range(dim):
            m[i * dim + i] = LE_ZERO
        return cls(dim, m)

    @classmethod
    def zero(cls, dim: int) -> "Dbm":
        return cls(dim, [LE_ZERO] * (dim * dim))

    @classmethod
    def from_constraints(cls, dim: int, constraints: Iterable[tuple[int, int, int]]) -> Optional["Dbm"]:
        zone: Optional[Dbm] = cls.universe(dim)
        for i, j, raw in constraints:
            if zone is None:
                return None
            zone = zone.constrain(i, j, raw)
        return zone

    @classmethod
    def from_atoms(cls, dim: int, atoms: Iterable["Atom"], factor: int = 1) -> Optional["Dbm"]:
        return cls.from_constraints(dim, (atom_constraint(atom, factor) for atom in atoms))

    # Inspection

    def entry(self, i: int, j: int) -> int:
        return self.m[i * self.dim + j]

    def bound(self, i: int, j: int) -> Bound:
        return Bound.decode(self.m[i * self.dim + j])

    def contains_point(self, valuation: Sequence[Fraction]) -> bool:
        values = (Fraction(0), *valuation)
        dim = self.dim
        for i in range(dim):
            for j in range(dim):
                if i != j and not _satisfies(values[i] - values[j], self.m[i * dim + j]):
                    return False
        return True

    def includes(self, other: "Dbm") -> bool:
        return all(a >= b for a, b in zip(self.m, other.m))

    def constraints(self) -> list[tuple[int, int, int]]:
        """Finite off-diagonal entries, without the implicit non-negativity bounds."""
        dim = self.dim
        out = []
        for i in range(dim):
            for j in range(dim):
                raw = self.m[i * dim + j]
                if i == j or raw >= INF or (i == 0 and raw == LE_ZERO):
                    continue
                out.append((i, j, raw))
        return out

    def minimal_constraints(self) -> list[tuple[int, int, int]]:
        kept = self.constraints()
        for candidate in list(kept):
            others = [c for c in kept if c != candidate]
            rebuilt = Dbm.from_constraints(self.dim, others)
            i, j, raw = candidate
            if rebuilt is not None and rebuilt.entry(i, j) <= raw:
                kept = others
        return kept

    # Operations

    def constrain(self, i: int, j: int, raw: int) -> Optional["Dbm"]:
        dim = self.dim
        m = self.m
        if raw >= m[i * dim + j]:
            return self
        if bound_add(raw, m[j * dim + i]) < LE_ZERO:
            return None
        out = list(m)
        out[i * dim + j] = raw
        for k in range(dim):
            mki = out[k * dim + i]
            if mki >= INF:
                continue
            through = bound_add(mki, raw)
            row = k * dim
            for col in range(dim):
                mjl = out[j * dim + col]
                if mjl >= INF:
                    continue
                candidate = bound_add(through, mjl)
                if candidate < out[row + col]:
                    out[row + col] = candidate
        return Dbm(dim, out)

    def intersect(self, other: "Dbm") -> Optional["Dbm"]:
        zone: Optional[Dbm] = self
        dim = self.dim
        for index, raw in enumerate(other.m):
            if zone is None:
                return None
            if raw < zone.m[index]:
                zone = zone.constrain(index // dim, index % dim, raw)
        return zone

    def and_atoms(self, atoms: Iterable["Atom"], factor: int = 1) -> Optional["Dbm"]:
        zone: Optional[Dbm] = self
        for atom in atoms:
            if zone is None:
                return None
            zone = zone.constrain(*atom_constraint(atom, factor))
        return zone

    def up(self) -> "Dbm":
        out = list(self.m)
        for i in range(1, self.dim):
            out[i * self.dim] = INF
        return Dbm(self.dim, out)

    def down(self) -> "Dbm":
        dim = self.dim
        out = list(self.m)
        for j in range(1, dim):
            best = LE_ZERO
            for i in range(1, dim):
                if out[i * dim + j] < best:
                    best = out[i * dim + j]
            out[j] = best
        return Dbm(dim, out)

    def reset(self, clocks: Iterable[int]) -> "Dbm":
        dim = self.dim
        out = list(self.m)
        for x in clocks:
            for j in range(dim):
                out[x * dim + j] = out[j]
                out[j * dim + x] = out[j * dim]
            out[x * dim + x] = LE_ZERO
        return Dbm(dim, out)

    def free(self, clocks: Iterable[int]) -> "Dbm":
        dim = self.dim
        out = list(self.m)
        for x in clocks:
            for i in range(dim):
                if i != x:
                    out[x * dim + i] = INF
                    out[i * dim + x] = out[i * dim]
        return Dbm(dim, out)

    def extrapolate(self, max_constants: Sequence[int]) -> "Dbm":
        """Classical maximal-constant extrapolation; ``max_constants[0]`` must be 0."""
        dim = self.dim
        out = list(self.m)
        changed = False
        for i in range(dim):
            upper = bound(max_constants[i], False)
            for j in range(dim):
                if i == j:
                    continue
                raw = out[i * dim + j]
                if raw >= INF:
                    continue
                if raw > upper and i > 0:
                    out[i * dim + j] = INF
                    changed = True
                elif j > 0 and raw < bound(-max_constants[j], True):
                    out[i * dim + j] = bound(-max_constants[j], True)
                    changed = True
        if not changed:
            return self
        closed = canonicalize(dim, out)
        return closed if closed is not None else self

    def subtract(self, other: "Dbm") -> list["Dbm"]:
        if self.intersect(other) is None:
            return [self]
        pieces: list[Dbm] = []
        rest: Optional[Dbm] = self
        for i, j, raw in other.constraints():
            if rest is None:
                break
            if rest.entry(i, j) <= raw:
                continue
            piece = rest.constrain(j, i, bound_negate(raw))
            if piece is not None:
                pieces.append(piece)
            rest = rest.constrain(i, j, raw)
        return pieces

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Dbm) and self.m == other.m

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self.m)
        return self._hash

    def render(self, clock_names: Sequence[str], factor: int = 1) -> str:
        names = ("0", *clock_names)
        parts = []
        for i, j, raw in self.minimal_constraints():
            op = "<" if is_strict(raw) else "<="
            value = Fraction(bound_value(raw), factor)
            if j == 0:
                parts.append(f"{names[i]} {op} {value}")
            elif i == 0:
                parts.append(f"{names[j]} {op.replace('<', '>')} {-value}")
            else:
                parts.append(f"{names[i]} - {names[j]} {op} {value}")
        return " && ".join(parts) if parts else "true"

    def __repr__(self) -> str:
        return f"Dbm({self.render([f'x{i}' for i in range(1, self.dim)])})"


def canonicalize(dim: int, matrix: Sequence[int]) -> Optional[Dbm]:
    """
    Closes a matrix under the triangle inequality (Floyd-Warshall).

    Returns the tightest equivalent DBM, or ``None`` when the zone is empty.
    """
    m = list(matrix)
    for k in range(dim):
        row_k = k * dim
        for i in range(dim):
            mik = m[i * dim + k]
            if mik >= INF:
                continue
            row_i = i * dim
            for j in range(dim):
                mkj = m[row_k + j]
                if mkj >= INF:
                    continue
                candidate = bound_add(mik, mkj)
                if candidate < m[row_i + j]:
                    m[row_i + j] = candidate
            if m[row_i + i] < LE_ZERO:
                return None
    for i in range(dim):
        if m[i * dim + i] < LE_ZERO:
            return None
        m[i * dim + i] = LE_ZERO
    return Dbm(dim, m)


class Federation:
    """Finite union of canonical DBMs over the same clocks."""

    __slots__ = ("dim", "zones")

    def __init__(self, dim: int, zones: Iterable[Optional[Dbm]] = ()):
        self.dim = dim
        self.zones: tuple[Dbm, ...] = tuple(z for z in zones if z is not None)

    @classmethod
    def empty(cls, dim: int) -> "Federation":
        return cls(dim)

    @classmethod
    def universe(cls, dim: int) -> "Federation":
        return cls(dim, [Dbm.universe(dim)])

    @classmethod
    def from_atoms(cls, dim: int, atoms: Iterable["Atom"], factor: int = 1) -> "Federation":
        return cls(dim, [Dbm.from_atoms(dim, atoms, factor)])

    def __iter__(self) -> Iterator[Dbm]:
        return iter(self.zones)

    def __len__(self) -> int:
        return len(self.zones)

    def is_empty(self) -> bool:
        return not self.zones

    def contains_point(self, valuation: Sequence[Fraction]) -> bool:
        return any(z.contains_point(valuation) for z in self.zones)

    def union(self, other: "Federation") -> "Federation":
        if not other.zones:
            return self
        if not self.zones:
            return other
        return Federation(self.dim, self.zones + other.zones).reduce()

    def add(self, zone: Optional[Dbm]) -> "Federation":
        if zone is None or any(z.includes(zone) for z in self.zones):
            return self
        return Federation(self.dim, [z for z in self.zones if not zone.includes(z)] + [zone])

    def intersect(self, other: "Federation") -> "Federation":
        out = Federation.empty(self.dim)
        for a in self.zones:
            for b in other.zones:
                out = out.add(a.intersect(b))
        return out

    def intersect_zone(self, zone: Dbm) -> "Federation":
        return Federation(self.dim, [z.intersect(zone) for z in self.zones])

    def subtract(self, other: "Federation") -> "Federation":
        pieces = list(self.zones)
        for b in other.zones:
            if not pieces:
                break
            pieces = [p for a in pieces for p in a.subtract(b)]
        return Federation(self.dim, pieces).reduce()

    def complement(self) -> "Federation":
        return Federation.universe(self.dim).subtract(self)

    def includes(self, other: "Federation") -> bool:
        if all(any(s.includes(o) for s in self.zones) for o in other.zones):
            return True
        return other.subtract(self).is_empty()

    def same_set(self, other: "Federation") -> bool:
        return self.includes(other) and other.includes(self)

    def reduce(self) -> "Federation":
        kept: list[Dbm] = []
        for zone in sorted(set(self.zones), key=lambda z: z.m, reverse=True):
            if not any(k.includes(zone) for k in kept):
                kept.append(zone)
        return Federation(self.dim, kept)

    def up(self) -> "Federation":
        return Federation(self.dim, [z.up() for z in self.zones])

    def down(self) -> "Federation":
        return Federation(self.dim, [z.down() for z in self.zones]).reduce()

    def reset(self, clocks: Iterable[int]) -> "Federation":
        clocks = tuple(clocks)
        return Federation(self.dim, [z.reset(clocks) for z in self.zones]).reduce()

    def free(self, clocks: Iterable[int]) -> "Federation":
        clocks = tuple(clocks)
        return Federation(self.dim, [z.free(clocks) for z in self.zones]).reduce()

    def and_atoms(self, atoms: Sequence["Atom"], factor: int = 1) -> "Federation":
        return Federation(self.dim, [z.and_atoms(atoms, factor) for z in self.zones])

    def extrapolate(self, max_constants: Sequence[int]) -> "Federation":
        return Federation(self.dim, [z.extrapolate(max_constants) for z in self.zones]).reduce()

    def render(self, clock_names: Sequence[str], factor: int = 1) -> str:
        if not self.zones:
            return "false"
        return " || ".join(f"({z.render(clock_names, factor)})" for z in self.zones)

    def __repr__(self) -> str:
        return f"Federation[{len(self.zones)}]({self.render([f'x{i}' for i in range(1, self.dim)])})"


def _pred_t_convex(goal: Dbm, avoid: Dbm) -> Federation:
    dim = goal.dim
    avoid_down = avoid.down()
    result = Federation(dim, goal.down().subtract(avoid_down))
    touching = goal.intersect(avoid_down)
    if touching is not None:
        for piece in touching.subtract(avoid):
            result = result.add(piece.down())
    return result


def pred_t(goal: Federation, avoid: Federation) -> Federation:
    """
    Safe timed predecessors.

    A valuation ``u`` is returned iff some delay ``d >= 0`` leads to ``goal``
    while no intermediate valuation ``u + d'`` with ``d' <= d`` lies in ``avoid``.
    """
    result = Federation.empty(goal.dim)
    for g in goal.zones:
        if avoid.is_empty():
            result = result.add(g.down())
            continue
        part: Optional[Federation] = None
        for b in avoid.zones:
            piece = _pred_t_convex(g, b)
            part = piece if part is None else part.intersect(piece)
            if part.is_empty():
                break
        if part is not None:
            for zone in part.zones:
                result = result.add(zone)
    return result
