"""
Reader and writer for the line-oriented ``.tioa`` model format.

    # comment
    automaton Machine
      clocks y
      inputs coin
      outputs cof
      location Idle initial
      location Serving inv y <= 6
      edge Idle -> Serving on coin? reset y
      edge Serving -> Idle on cof! when y >= 4 && y <= 6
      complete self
    end

    system Pair = Machine || Researcher

Guards are conjunctions (``&&``) of ``x op k`` and ``x - y op k`` with
``op`` one of ``< <= > >= ==`` and ``k`` an integer, a fraction ``a/b`` or a
decimal. ``true`` is the empty guard.
"""

import logging
import re
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from pathlib import Path
from typing import Optional, Union

from tioa.errors import ModelError, ModelSyntaxError
from tioa.model import (
    REFERENCE,
    TRUE,
    Action,
    Atom,
    Edge,
    Guard,
    Location,
    Polarity,
    Relation,
    Tioa,
    complete_inputs,
    compose_all,
)

log = logging.getLogger("rich")

IDENT = r"[A-Za-z_][\w.]*"
_ATOM = re.compile(
    rf"^\s*(?P<left>{IDENT})\s*(?:-\s*(?P<right>{IDENT})\s*)?(?P<op><=|>=|==|<|>)\s*(?P<value>-?[\d./]+)\s*$"
)
_LOCATION = re.compile(rf"^location\s+(?P<name>{IDENT})(?P<rest>.*)$")
_EDGE = re.compile(
    rf"^edge\s+(?P<source>{IDENT})\s*->\s*(?P<target>{IDENT})\s+on\s+(?P<action>{IDENT})(?P<mark>[?!])?"
    r"(?:\s+when\s+(?P<guard>.*?))?(?:\s+reset\s+(?P<resets>.*?))?\s*$"
)
_SYSTEM = re.compile(rf"^system\s+(?P<name>{IDENT})\s*=\s*(?P<parts>.+)$")

_RELATIONS = {"<": Relation.LT, "<=": Relation.LE, ">": Relation.GT, ">=": Relation.GE}


@dataclass
class ModelDocument:
    """Automata and named systems declared in one model file, in file order."""

    path: str
    automata: dict[str, Tioa] = field(default_factory=dict)
    systems: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def names(self) -> list[str]:
        return list(self.automata) + list(self.systems)

    def resolve(self, name: str) -> Tioa:
        if name in self.automata:
            return self.automata[name]
        if name in self.systems:
            return compose_all(self.automata[part] for part in self.systems[name])
        raise ModelError(f"{self.path}: no automaton or system named {name!r}")

    def default(self) -> Tioa:
        """The last declared system, or the last automaton if there is none."""
        if self.systems:
            return self.resolve(list(self.systems)[-1])
        if not self.automata:
            raise ModelError(f"{self.path}: the file declares no automaton")
        return list(self.automata.values())[-1]


def parse_number(text: str) -> Fraction:
    try:
        if "/" in text:
            return Fraction(text)
        return Fraction(Decimal(text))
    except (ValueError, ZeroDivisionError, InvalidOperation):
        raise ValueError(f"invalid constant {text!r}") from None


class _Builder:
    def __init__(self, name: str):
        self.name = name
        self.clocks: list[str] = []
        self.actions: dict[str, Polarity] = {}
        self.locations: list[Location] = []
        self.initial: Optional[str] = None
        self.edges: list[Edge] = []
        self.completion: Optional[str] = None

    def clock_index(self, name: str) -> Optional[int]:
        if name in self.clocks:
            return self.clocks.index(name) + 1
        return None


class _Parser:
    def __init__(self, text: str, path: str, completion: str = "self"):
        self.lines = text.splitlines()
        self.path = path
        self.completion = completion
        self.document = ModelDocument(path)
        self.current: Optional[_Builder] = None
        self.lineno = 0

    def error(self, message: str, column: int = 1) -> ModelSyntaxError:
        return ModelSyntaxError(message, self.path, self.lineno, column)

    def parse(self) -> ModelDocument:
        for self.lineno, raw in enumerate(self.lines, start=1):
            text = raw.split("#", 1)[0]
            stripped = text.strip()
            if not stripped:
                continue
            indent = len(text) - len(text.lstrip())
            keyword = stripped.split()[0]
            if self.current is None:
                self._top_level(keyword, stripped, indent)
            else:
                self._body(keyword, stripped, indent)
        if self.current is not None:
            raise ModelSyntaxError(f"automaton {self.current.name!r} is missing 'end'", self.path, len(self.lines), 1)
        return self.document

    def _top_level(self, keyword: str, stripped: str, indent: int):
        if keyword == "automaton":
            words = stripped.split()
            if len(words) != 2 or not re.fullmatch(IDENT, words[1]):
                raise self.error("expected 'automaton <name>'", indent + 1)
            if words[1] in self.document.automata or words[1] in self.document.systems:
                raise self.error(f"duplicate automaton {words[1]!r}", indent + 11)
            self.current = _Builder(words[1])
        elif keyword == "system":
            match = _SYSTEM.match(stripped)
            if not match:
                raise self.error("expected 'system <name> = A || B'", indent + 1)
            parts = tuple(p.strip() for p in match["parts"].split("||"))
            if not all(re.fullmatch(IDENT, p) for p in parts):
                raise self.error("system components must be automaton names", indent + match.start("parts") + 1)
            for part in parts:
                if part not in self.document.automata:
                    raise self.error(f"unknown automaton {part!r}", indent + match.start("parts") + 1)
            self.document.systems[match["name"]] = parts
        else:
            raise self.error(f"unexpected {keyword!r} outside an automaton", indent + 1)

    def _body(self, keyword: str, stripped: str, indent: int):
        builder = self.current
        assert builder is not None
        rest = stripped[len(keyword):]
        if keyword == "end":
            if rest.strip():
                raise self.error("unexpected text after 'end'", indent + 4)
            self._finish(builder)
            self.current = None
        elif keyword == "clocks":
            for name, column in self._names(rest, indent + len(keyword)):
                if name in builder.clocks:
                    raise self.error(f"duplicate clock {name!r}", column)
                builder.clocks.append(name)
        elif keyword in ("inputs", "outputs"):
            polarity = Polarity.INPUT if keyword == "inputs" else Polarity.OUTPUT
            for name, column in self._names(rest, indent + len(keyword)):
                if name in builder.actions:
                    raise self.error(f"action {name!r} declared twice", column)
                builder.actions[name] = polarity
        elif keyword == "location":
            self._location(builder, stripped, indent)
        elif keyword == "edge":
            self._edge(builder, stripped, indent)
        elif keyword == "complete":
            target = rest.strip() or self.completion
            if target not in ("self", "universal"):
                raise self.error("expected 'complete self' or 'complete universal'", indent + 10)
            builder.completion = target
        else:
            raise self.error(f"unknown declaration {keyword!r}", indent + 1)

    def _names(self, text: str, offset: int) -> list[tuple[str, int]]:
        out = []
        position = 0
        for chunk in text.split(","):
            name = chunk.strip()
            column = offset + position + (len(chunk) - len(chunk.lstrip())) + 1
            position += len(chunk) + 1
            if not re.fullmatch(IDENT, name):
                raise self.error(f"invalid identifier {name!r}", column)
            out.append((name, column))
        return out

    def _location(self, builder: _Builder, stripped: str, indent: int):
        match = _LOCATION.match(stripped)
        if not match:
            raise self.error("expected 'location <name> [flags] [inv <guard>]'", indent + 1)
        name = match["name"]
        if any(loc.name == name for loc in builder.locations):
            raise self.error(f"duplicate location {name!r}", indent + match.start("name") + 1)
        rest = match["rest"]
        invariant = TRUE
        inv_at = re.search(r"\binv\b", rest)
        flags_text = rest
        if inv_at:
            flags_text = rest[: inv_at.start()]
            offset = indent + match.start("rest") + inv_at.end()
            text = rest[inv_at.end():]
            invariant = self._guard(builder, text, offset)
            for atom in invariant.atoms:
                if not atom.relation.is_upper or atom.right != REFERENCE:
                    raise self.error("invariants may only bound single clocks from above", offset + len(text) - len(text.lstrip()) + 1)
        flags = set(flags_text.split())
        unknown = flags - {"initial", "universal", "bad", "und"}
        if unknown:
            raise self.error(f"unknown location flag {sorted(unknown)[0]!r}", indent + match.start("rest") + 1)
        if "initial" in flags:
            if builder.initial is not None:
                raise self.error(f"second initial location {name!r}", indent + 1)
            builder.initial = name
        builder.locations.append(
            Location(name, invariant, universal="universal" in flags, bad="bad" in flags, und="und" in flags)
        )

    def _edge(self, builder: _Builder, stripped: str, indent: int):
        match = _EDGE.match(stripped)
        if not match:
            raise self.error("expected 'edge <from> -> <to> on <action>[?|!] [when <guard>] [reset <clocks>]'", indent + 1)
        action = match["action"]
        if action not in builder.actions:
            raise self.error(f"undeclared action {action!r}", indent + match.start("action") + 1)
        if match["mark"]:
            expected = builder.actions[action].mark
            if match["mark"] != expected:
                raise self.error(f"action {action!r} is used as {match['mark']} but declared as {expected}", indent + match.start("mark") + 1)
        guard = TRUE
        if match["guard"] is not None:
            guard = self._guard(builder, match["guard"], indent + match.start("guard"))
        resets: set[int] = set()
        if match["resets"] is not None:
            for name, column in self._names(match["resets"], indent + match.start("resets") - 1):
                index = builder.clock_index(name)
                if index is None:
                    raise self.error(f"undeclared clock {name!r}", column)
                resets.add(index)
        builder.edges.append(Edge(match["source"], action, guard, frozenset(resets), match["target"]))

    def _guard(self, builder: _Builder, text: str, offset: int) -> Guard:
        if text.strip() == "true":
            return TRUE
        atoms: list[Atom] = []
        position = 0
        for chunk in text.split("&&"):
            column = offset + position + (len(chunk) - len(chunk.lstrip())) + 1
            position += len(chunk) + 2
            match = _ATOM.match(chunk)
            if not match:
                raise self.error(f"malformed constraint {chunk.strip()!r}", column)
            left = builder.clock_index(match["left"])
            if left is None:
                raise self.error(f"undeclared clock {match['left']!r}", column)
            right = REFERENCE
            if match["right"]:
                right = builder.clock_index(match["right"])
                if right is None:
                    raise self.error(f"undeclared clock {match['right']!r}", column)
            try:
                value = parse_number(match["value"])
            except ValueError as e:
                raise self.error(str(e), column) from None
            if right == REFERENCE and value < 0:
                raise self.error("clock constants must be non-negative", column)
            if match["op"] == "==":
                atoms.append(Atom(left, right, Relation.GE, value))
                atoms.append(Atom(left, right, Relation.LE, value))
            else:
                atoms.append(Atom(left, right, _RELATIONS[match["op"]], value))
        return Guard(tuple(atoms))

    def _finish(self, builder: _Builder):
        if builder.initial is None:
            raise self.error(f"automaton {builder.name!r} has no initial location")
        declared = {loc.name for loc in builder.locations}
        for edge in builder.edges:
            for name in (edge.source, edge.target):
                if name not in declared:
                    raise self.error(f"automaton {builder.name!r}: edge refers to undeclared location {name!r}")
        edges = list(builder.edges)
        for loc in builder.locations:
            if not loc.universal:
                continue
            for action in builder.actions:
                loop = Edge(loc.name, action, TRUE, frozenset(), loc.name)
                if loop not in edges:
                    edges.append(loop)
        try:
            automaton = Tioa(
                builder.name,
                tuple(builder.clocks),
                tuple(Action(name, polarity) for name, polarity in builder.actions.items()),
                tuple(builder.locations),
                builder.initial,
                tuple(edges),
            )
            if builder.completion:
                automaton = complete_inputs(automaton, builder.completion)
        except ModelError as e:
            raise self.error(str(e)) from e
        self.document.automata[builder.name] = automaton
        log.debug(f"[{self.path}] parsed {builder.name}: {len(automaton.locations)} locations, {len(automaton.edges)} edges")


def parse_text(text: str, path: str = "<string>", completion: str = "self") -> ModelDocument:
    return _Parser(text, path, completion).parse()


def parse_model(path: Union[str, Path], completion: str = "self") -> ModelDocument:
    """
    Parses a model file.

    Args:
        path (str | Path): Location of the ``.tioa`` file.
        completion (str): Target of a bare ``complete`` directive, ``self`` or ``universal``.

    Returns:
        ModelDocument: The automata and systems it declares.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ModelError(f"cannot read model file {path}: {e.strerror or e}") from e
    return parse_text(text, str(path), completion)


def serialize_model(a: Tioa) -> str:
    """Writes ``a`` in the model format; parsing the result gives back an equal automaton."""
    if a.is_parametric:
        raise ModelError(f"{a.name}: parametric automata have no file representation")
    names = a.clocks
    lines = [f"automaton {a.name}"]
    if a.clocks:
        lines.append(f"  clocks {', '.join(a.clocks)}")
    if a.inputs:
        lines.append(f"  inputs {', '.join(a.inputs)}")
    if a.outputs:
        lines.append(f"  outputs {', '.join(a.outputs)}")
    for loc in a.locations:
        flags = [flag for flag, on in (("initial", loc.name == a.initial), ("universal", loc.universal), ("bad", loc.bad), ("und", loc.und)) if on]
        line = f"  location {loc.name}"
        if flags:
            line += " " + " ".join(flags)
        if not loc.invariant.is_true:
            line += f" inv {loc.invariant.render(names)}"
        lines.append(line)
    for edge in a.edges:
        line = f"  edge {edge.source} -> {edge.target} on {edge.action}{a.polarity(edge.action).mark}"
        if not edge.guard.is_true:
            line += f" when {edge.guard.render(names)}"
        if edge.resets:
            line += f" reset {', '.join(names[i - 1] for i in sorted(edge.resets))}"
        lines.append(line)
    lines.append("end")
    return "\n".join(lines) + "\n"
