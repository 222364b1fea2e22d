"""
Analysis pipelines: resolve models, build the matching game and solve it.

Every command of the front end goes through one of ``run_check``,
``run_robust`` or ``run_param``; the benchmark harness calls ``run_param``
once per (model, method) cell.
"""

import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence, Union

from tioa.errors import ModelError, NotRobustAtZero, RefinementError, SearchOutcome
from tioa.game import DEFAULT_LIMIT_STATES, GameResult
from tioa.milner import milner_ring
from tioa.model import Polarity, Tioa, compose_all
from tioa.parametric import DEFAULT_MAX_VISITS
from tioa.parser import ModelDocument, parse_model
from tioa.refinement import RefinementResult, check_refinement, check_robust_satisfaction
from tioa.search import Method, RobustGame, SearchConfig, SearchResult, evaluate_max_delta
from tioa.transforms import GameAutomaton, build_consistency_game, build_usefulness_game, robust_game_size

log = logging.getLogger("rich")

_MILNER = re.compile(r"^milner:(?P<nodes>\d+)$")


class Check(Enum):
    CONSISTENCY = "consistency"
    USEFULNESS = "usefulness"
    COMPATIBILITY = "compatibility"
    REFINEMENT = "refinement"

    @property
    def verifier(self) -> Polarity:
        return Polarity.OUTPUT if self is Check.CONSISTENCY else Polarity.INPUT


class ModelResolver:
    """
    Resolves model references of the form ``path``, ``path#Name`` or ``milner:N``.

    A bare path selects the file's default system; files are parsed once.
    ``completion`` is the target of bare ``complete`` directives.
    """

    def __init__(self, completion: str = "self"):
        self.completion = completion
        self._documents: dict[Path, ModelDocument] = {}

    def document(self, path: Union[str, Path]) -> ModelDocument:
        key = Path(path).resolve()
        if key not in self._documents:
            self._documents[key] = parse_model(path, self.completion)
        return self._documents[key]

    def resolve(self, reference: str) -> Tioa:
        match = _MILNER.match(reference)
        if match:
            return milner_ring(int(match["nodes"]))
        path, _, name = reference.partition("#")
        document = self.document(path)
        return document.resolve(name) if name else document.default()


def game_for(check: Check, models: Sequence[Tioa]) -> GameAutomaton:
    """Game automaton of a consistency, usefulness or compatibility check; several models are composed first."""
    if check is Check.REFINEMENT:
        raise ValueError("refinement is not decided by a safety game")
    if check is Check.COMPATIBILITY and len(models) < 2:
        raise ModelError("compatibility needs at least two models")
    if not models:
        raise ModelError("no model given")
    system = compose_all(models)
    if check is Check.CONSISTENCY:
        return build_consistency_game(system)
    return build_usefulness_game(system)


@dataclass
class CheckOutcome:
    check: Check
    model: str
    holds: bool
    states: int
    game: Optional[GameResult] = None
    refinement: Optional[RefinementResult] = None
    delta: Optional[Fraction] = None

    def to_dict(self) -> dict:
        data = {
            "holds": self.holds,
            "states_explored": self.states,
            "delta": None if self.delta is None else str(self.delta),
        }
        if self.game is not None:
            data["rounds"] = self.game.rounds
        if self.refinement is not None:
            data["counterexample"] = self.refinement.to_dict()["counterexample"]
        return data


def _refinement_pair(models: Sequence[Tioa]) -> tuple[Tioa, Tioa]:
    if len(models) != 2:
        raise RefinementError("refinement needs exactly two models: the refining one, then the refined one")
    return models[0], models[1]


def system_name(models: Sequence[Tioa]) -> str:
    return "||".join(m.name for m in models)


def run_check(check: Check, models: Sequence[Tioa], limit_states: int = DEFAULT_LIMIT_STATES) -> CheckOutcome:
    """Solves the plain game of ``check``, or decides refinement of the first model by the second."""
    if check is Check.REFINEMENT:
        s, t = _refinement_pair(models)
        refinement = check_refinement(s, t, limit_states)
        return CheckOutcome(check, f"{s.name}<={t.name}", refinement.holds, refinement.states, refinement=refinement)
    game = RobustGame(game_for(check, models), limit_states)
    probe = game.solve(Fraction(0))
    log.info(f"{check.value} of {system_name(models)}: {'won' if probe.won else 'lost'} ({probe.states} states)")
    return CheckOutcome(check, system_name(models), probe.won, probe.states, game=probe.result, delta=Fraction(0))


def run_robust(
    check: Check,
    models: Sequence[Tioa],
    delta: Fraction,
    limit_states: int = DEFAULT_LIMIT_STATES,
    strict: bool = False,
) -> CheckOutcome:
    """Solves the robust game at a fixed perturbation, or decides robust satisfaction for refinement."""
    delta = Fraction(delta)
    if delta < 0:
        raise ValueError("the perturbation must be non-negative")
    if check is Check.REFINEMENT:
        i, s = _refinement_pair(models)
        refinement = check_robust_satisfaction(i, s, delta, strict, limit_states)
        return CheckOutcome(check, f"{i.name}<={s.name}", refinement.holds, refinement.states, refinement=refinement, delta=delta)
    game = RobustGame(game_for(check, models), limit_states)
    probe = game.solve(delta)
    log.info(f"robust {check.value} of {system_name(models)} at {delta}: {'won' if probe.won else 'lost'}")
    return CheckOutcome(check, system_name(models), probe.won, probe.states, game=probe.result, delta=delta)


@dataclass
class MethodRun:
    """One search; ``outcome`` names the termination raised by the driver, if any."""

    method: Method
    result: SearchResult
    outcome: Optional[str] = None
    exit_code: int = 0
    message: str = ""

    def to_dict(self) -> dict:
        data = self.result.to_dict()
        data["outcome"] = self.outcome or "interval"
        data["wall_time"] = round(self.result.seconds, 6)
        return data


@dataclass
class ParamOutcome:
    check: Check
    model: str
    game_size: tuple[int, int]
    runs: list[MethodRun] = field(default_factory=list)

    @property
    def agreement(self) -> Optional[Fraction]:
        """Distance between the results of the methods, when more than one ran."""
        if len(self.runs) < 2:
            return None
        goods = [run.result.delta_good for run in self.runs]
        return max(goods) - min(goods)

    @property
    def exit_code(self) -> int:
        return next((run.exit_code for run in self.runs if run.exit_code), 0)

    def to_dict(self) -> dict:
        agreement = self.agreement
        return {
            "game_size": {"locations": self.game_size[0], "edges": self.game_size[1]},
            "methods": {run.method.value: run.to_dict() for run in self.runs},
            "agreement": None if agreement is None else str(agreement),
        }


def methods_for(choice: str) -> list[Method]:
    if choice == "both":
        return [Method.COUNTER_STRATEGY, Method.BINARY_SEARCH]
    return [Method(choice)]


def search_once(game: RobustGame, cfg: SearchConfig) -> MethodRun:
    try:
        return MethodRun(cfg.method, evaluate_max_delta(game, cfg))
    except SearchOutcome as e:
        name = "not-robust-at-zero" if isinstance(e, NotRobustAtZero) else "max-value-won"
        log.warning(f"[{game.name}] {cfg.method.value}: {e}")
        return MethodRun(cfg.method, e.result, name, e.exit_code, str(e))


def run_param(
    check: Check,
    models: Sequence[Tioa],
    delta_max: Fraction,
    epsilon: Fraction,
    method: str = "both",
    limit_states: int = DEFAULT_LIMIT_STATES,
    max_visits: int = DEFAULT_MAX_VISITS,
) -> ParamOutcome:
    """Greatest admissible perturbation of the game of ``check`` with one or both search methods."""
    if check is Check.REFINEMENT:
        raise ValueError("the parametric search applies to consistency, usefulness and compatibility")
    base = game_for(check, models)
    game = RobustGame(base, limit_states, max_visits)
    outcome = ParamOutcome(check, system_name(models), robust_game_size(base.automaton, base.verifier))
    for chosen in methods_for(method):
        cfg = SearchConfig(delta_max, epsilon, chosen, limit_states, max_visits)
        run = search_once(game, cfg)
        log.info(
            f"{check.value} of {outcome.model} [{chosen.value}]: delta in [{run.result.delta_good}, {run.result.delta_bad}] "
            f"after {run.result.games_solved} game(s)"
        )
        outcome.runs.append(run)
    if outcome.agreement is not None and outcome.agreement > epsilon:
        log.warning(f"{outcome.model}: methods disagree by {outcome.agreement}")
    return outcome
