"""
Greatest admissible perturbation of a game.

Both methods keep an interval ``[delta_good, delta_bad]`` where the game is
known to be won at ``delta_good`` and lost at ``delta_bad``. Binary search
halves it. Counter-strategy refinement only plays at the losing end, and
lowers it with the smallest perturbation for which the adversary's
strategy still wins, until a game is won.
"""

import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional, Protocol, Union

from tioa.errors import MaxValueWon, NotRobustAtZero, ReplayError
from tioa.game import DEFAULT_LIMIT_STATES, GameResult, solve_safety_game
from tioa.model import scaling_factor
from tioa.parametric import DEFAULT_MAX_VISITS, ReplayResult, replay_spoiling_strategy
from tioa.transforms import SYMBOLIC, GameAutomaton, build_robust_game_automaton

log = logging.getLogger("rich")


class Method(Enum):
    BINARY_SEARCH = "bs"
    COUNTER_STRATEGY = "cr"


@dataclass(frozen=True)
class SearchConfig:
    delta_max: Fraction
    epsilon: Fraction
    method: Method = Method.COUNTER_STRATEGY
    limit_states: int = DEFAULT_LIMIT_STATES
    max_visits: int = DEFAULT_MAX_VISITS
    max_iterations: int = 200

    def __post_init__(self):
        object.__setattr__(self, "delta_max", Fraction(self.delta_max))
        object.__setattr__(self, "epsilon", Fraction(self.epsilon))
        if self.delta_max <= 0 or self.epsilon <= 0:
            raise ValueError("delta-max and epsilon must be positive")
        if self.epsilon >= self.delta_max:
            raise ValueError("epsilon must be smaller than delta-max")


@dataclass(frozen=True)
class Iteration:
    index: int
    method: Method
    delta: Fraction
    won: bool
    delta_good: Fraction
    delta_bad: Fraction
    states: int
    seconds: float
    delta_min: Optional[Fraction] = None
    attained: Optional[bool] = None

    def to_dict(self) -> dict:
        return {
            "iteration": self.index,
            "method": self.method.value,
            "delta": str(self.delta),
            "outcome": "won" if self.won else "lost",
            "delta_good": str(self.delta_good),
            "delta_bad": str(self.delta_bad),
            "delta_min": None if self.delta_min is None else str(self.delta_min),
            "attained": self.attained,
            "states_explored": self.states,
            "wall_time": round(self.seconds, 6),
        }


@dataclass
class SearchResult:
    method: Method
    delta_good: Fraction = Fraction(0)
    delta_bad: Fraction = Fraction(0)
    iterations: list[Iteration] = field(default_factory=list)
    checks: list[Iteration] = field(default_factory=list)

    @property
    def games_solved(self) -> int:
        return len(self.iterations)

    @property
    def won_games(self) -> int:
        return sum(1 for it in self.iterations if it.won)

    @property
    def seconds(self) -> float:
        return sum(it.seconds for it in self.checks + self.iterations)

    def to_dict(self) -> dict:
        return {
            "method": self.method.value,
            "delta_good": str(self.delta_good),
            "delta_bad": str(self.delta_bad),
            "games_solved": self.games_solved,
            "won_games": self.won_games,
            "checks": [it.to_dict() for it in self.checks],
            "iterations": [it.to_dict() for it in self.iterations],
        }


@dataclass
class Probe:
    """Outcome of one fixed game; ``result`` and ``game`` are in the probe's time scale."""

    delta: Fraction
    won: bool
    states: int
    result: Optional[GameResult] = None
    game: Optional[GameAutomaton] = None
    factor: int = 1


class Game(Protocol):
    def solve(self, delta: Fraction) -> Probe: ...

    def replay(self, probe: Probe) -> ReplayResult: ...


class RobustGame:
    """
    A game automaton that can be played at any fixed perturbation.

    At 0 the plain game is solved. Otherwise constants and perturbation are
    scaled to integers and the robust game automaton is instantiated.
    """

    def __init__(self, base: GameAutomaton, limit_states: int = DEFAULT_LIMIT_STATES, max_visits: int = DEFAULT_MAX_VISITS):
        self.base = base
        self.limit_states = limit_states
        self.max_visits = max_visits
        self._symbolic: dict[int, GameAutomaton] = {}

    @property
    def name(self) -> str:
        return self.base.automaton.name

    def symbolic(self, factor: int) -> GameAutomaton:
        if factor not in self._symbolic:
            scaled = self.base.scaled(factor)
            self._symbolic[factor] = build_robust_game_automaton(scaled.automaton, scaled.bad, SYMBOLIC, scaled.verifier)
        return self._symbolic[factor]

    def size(self) -> tuple[int, int]:
        return self.symbolic(1).size

    def solve(self, delta: Union[Fraction, int]) -> Probe:
        delta = Fraction(delta)
        factor = scaling_factor(*self.base.automaton.constants(), delta)
        if delta == 0:
            game = self.base.scaled(factor)
            concrete = game
        else:
            game = self.symbolic(factor)
            concrete = game.instantiate(delta * factor)
        result = solve_safety_game(concrete.automaton, concrete.verifier, concrete.bad, self.limit_states)
        return Probe(delta, result.won, len(result.graph), result, game, factor)

    def replay(self, probe: Probe) -> ReplayResult:
        if probe.result is None or probe.game is None:
            raise ReplayError("the probe carries no game to replay")
        scaled = replay_spoiling_strategy(
            probe.game, probe.result, probe.delta * probe.factor, max_visits=self.max_visits
        )
        return ReplayResult(
            scaled.delta_min / probe.factor, scaled.attained, scaled.intervals, scaled.explored
        )


def _timed(game: Game, delta: Fraction) -> tuple[Probe, float]:
    started = time.perf_counter()
    probe = game.solve(delta)
    return probe, time.perf_counter() - started


def _prechecks(game: Game, cfg: SearchConfig, result: SearchResult, with_max: bool):
    probe, seconds = _timed(game, Fraction(0))
    result.checks.append(Iteration(0, cfg.method, Fraction(0), probe.won, Fraction(0), cfg.delta_max, probe.states, seconds))
    if not probe.won:
        raise NotRobustAtZero("the game is lost without perturbation", result)
    if with_max:
        probe, seconds = _timed(game, cfg.delta_max)
        result.checks.append(
            Iteration(0, cfg.method, cfg.delta_max, probe.won, Fraction(0), cfg.delta_max, probe.states, seconds)
        )
        if probe.won:
            result.delta_good = result.delta_bad = cfg.delta_max
            raise MaxValueWon(f"the game is still won at {cfg.delta_max}", result)


def refine_binary_search(game: Game, cfg: SearchConfig, result: SearchResult):
    mid = (result.delta_good + result.delta_bad) / 2
    probe, seconds = _timed(game, mid)
    if probe.won:
        result.delta_good = mid
    else:
        result.delta_bad = mid
    result.iterations.append(
        Iteration(len(result.iterations) + 1, cfg.method, mid, probe.won, result.delta_good, result.delta_bad, probe.states, seconds)
    )
    log.debug(f"[bs] {mid} {'won' if probe.won else 'lost'} -> [{result.delta_good}, {result.delta_bad}]")


def refine_counter_strategy(game: Game, cfg: SearchConfig, result: SearchResult, probe_at: Fraction) -> Optional[Fraction]:
    """
    Plays at ``probe_at``; returns the next value to play, or ``None`` once a game is won.
    """
    probe, seconds = _timed(game, probe_at)
    index = len(result.iterations) + 1
    if probe.won:
        result.delta_good = probe_at
        result.iterations.append(
            Iteration(index, cfg.method, probe_at, True, result.delta_good, result.delta_bad, probe.states, seconds)
        )
        log.debug(f"[cr] {probe_at} won")
        return None

    replay = game.replay(probe)
    if not replay.attained and probe_at - replay.delta_min > cfg.epsilon:
        following = replay.delta_min
    else:
        following = replay.delta_min - cfg.epsilon
    if following >= probe_at:
        following = probe_at - cfg.epsilon
    following = max(following, result.delta_good, Fraction(0))
    result.delta_bad = replay.delta_min if replay.delta_min < probe_at else probe_at
    result.iterations.append(
        Iteration(
            index,
            cfg.method,
            probe_at,
            False,
            result.delta_good,
            result.delta_bad,
            probe.states,
            seconds,
            replay.delta_min,
            replay.attained,
        )
    )
    log.debug(
        f"[cr] {probe_at} lost, strategy wins from {'' if replay.attained else 'above '}{replay.delta_min}; next {following}"
    )
    return following


def evaluate_max_delta(game: Game, cfg: SearchConfig) -> SearchResult:
    """
    Greatest perturbation (up to ``cfg.epsilon``) for which the game is won.

    Raises ``NotRobustAtZero`` when no positive perturbation is admissible and
    ``MaxValueWon`` when the game is still won at ``cfg.delta_max``; both carry
    the partial result.
    """
    result = SearchResult(cfg.method, Fraction(0), cfg.delta_max)
    if cfg.method is Method.BINARY_SEARCH:
        _prechecks(game, cfg, result, with_max=True)
        while result.delta_bad - result.delta_good > cfg.epsilon:
            refine_binary_search(game, cfg, result)
    else:
        _prechecks(game, cfg, result, with_max=False)
        probe_at: Optional[Fraction] = cfg.delta_max
        while probe_at is not None:
            if len(result.iterations) >= cfg.max_iterations:
                log.warning(f"counter-strategy refinement stopped after {cfg.max_iterations} games")
                break
            if result.iterations and probe_at <= result.delta_good:
                confirm, seconds = _timed(game, result.delta_good)
                result.iterations.append(
                    Iteration(
                        len(result.iterations) + 1,
                        cfg.method,
                        result.delta_good,
                        confirm.won,
                        result.delta_good,
                        result.delta_bad,
                        confirm.states,
                        seconds,
                    )
                )
                break
            probe_at = refine_counter_strategy(game, cfg, result, probe_at)
            if probe_at is None and len(result.iterations) == 1:
                result.delta_good = result.delta_bad = cfg.delta_max
                raise MaxValueWon(f"the game is still won at {cfg.delta_max}", result)
    log.debug(
        f"[{cfg.method.value}] delta in [{result.delta_good}, {result.delta_bad}] after {result.games_solved} game(s), "
        f"{result.won_games} won"
    )
    if result.delta_good == 0:
        raise NotRobustAtZero("no positive perturbation is admissible", result)
    return result


def verify_interval(game: Game, result: SearchResult) -> bool:
    """Re-solves the games at both ends: won at ``delta_good``, lost at ``delta_bad`` unless they coincide."""
    if not game.solve(result.delta_good).won:
        return False
    if result.delta_bad == result.delta_good:
        return True
    return not game.solve(result.delta_bad).won
