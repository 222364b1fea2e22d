import random
from fractions import Fraction

import pytest

from tioa.analysis import Check, game_for, run_param
from tioa.errors import MaxValueWon, NotRobustAtZero, ReplayError
from tioa.milner import milner_ring
from tioa.parametric import ReplayResult
from tioa.search import Method, Probe, RobustGame, SearchConfig, evaluate_max_delta, verify_interval
from tioa.transforms import build_consistency_game


class ThresholdGame:
    """Won exactly up to ``threshold``; the adversary's strategy wins everywhere above it."""

    def __init__(self, threshold: Fraction, attained: bool = True):
        self.threshold = Fraction(threshold)
        self.attained = attained
        self.solved: list[Fraction] = []

    def won(self, delta: Fraction) -> bool:
        return delta <= self.threshold if self.attained else delta < self.threshold

    def solve(self, delta) -> Probe:
        delta = Fraction(delta)
        self.solved.append(delta)
        return Probe(delta, self.won(delta), 1)

    def replay(self, probe: Probe) -> ReplayResult:
        if self.won(probe.delta):
            raise ReplayError("won probes have no spoiling strategy")
        return ReplayResult(self.threshold, not self.attained, (), 1)


def games_needed(delta_max: Fraction, epsilon: Fraction) -> int:
    """Smallest k with delta_max / 2**k <= epsilon."""
    ratio = delta_max / epsilon
    return (-(-ratio.numerator // ratio.denominator) - 1).bit_length()


def test_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(Fraction(0), Fraction(1, 10))
    with pytest.raises(ValueError):
        SearchConfig(Fraction(1), Fraction(1))
    assert SearchConfig(8, Fraction(1, 10)).delta_max == Fraction(8)


def test_binary_search_game_count_for_the_reference_setting():
    game = ThresholdGame(Fraction(15, 2))
    result = evaluate_max_delta(game, SearchConfig(Fraction(30), Fraction(1, 10), Method.BINARY_SEARCH))
    assert result.games_solved == 9
    assert len(result.checks) == 2
    assert result.delta_good <= Fraction(15, 2) < result.delta_bad
    assert result.delta_bad - result.delta_good <= Fraction(1, 10)


def test_binary_search_game_count_law():
    rng = random.Random(9)
    for _ in range(20):
        delta_max = Fraction(rng.randint(1, 400), rng.randint(1, 8))
        epsilon = delta_max / rng.randint(2, 5000)
        threshold = delta_max * Fraction(rng.randint(1, 99), 100)
        result = evaluate_max_delta(ThresholdGame(threshold), SearchConfig(delta_max, epsilon, Method.BINARY_SEARCH))
        assert result.games_solved == games_needed(delta_max, epsilon)
        assert result.delta_good <= threshold < result.delta_bad


def test_counter_strategy_jumps_to_the_threshold():
    game = ThresholdGame(Fraction(15, 2), attained=True)
    result = evaluate_max_delta(game, SearchConfig(Fraction(30), Fraction(1, 10)))
    assert [it.won for it in result.iterations] == [False, True]
    assert result.delta_good == Fraction(15, 2)
    assert result.iterations[0].delta_min == Fraction(15, 2)


def test_counter_strategy_steps_below_an_attained_bound():
    game = ThresholdGame(Fraction(3), attained=False)
    result = evaluate_max_delta(game, SearchConfig(Fraction(8), Fraction(1, 10)))
    assert result.won_games == 1 and result.iterations[-1].won
    assert result.delta_good == Fraction(29, 10)
    assert result.delta_bad == Fraction(3)


def test_lost_at_zero():
    game = ThresholdGame(Fraction(-1))
    with pytest.raises(NotRobustAtZero) as info:
        evaluate_max_delta(game, SearchConfig(Fraction(8), Fraction(1, 10)))
    assert info.value.exit_code == 1
    assert info.value.result.checks[0].won is False


@pytest.mark.parametrize("method", list(Method))
def test_still_won_at_the_largest_value(method):
    game = ThresholdGame(Fraction(100))
    with pytest.raises(MaxValueWon) as info:
        evaluate_max_delta(game, SearchConfig(Fraction(8), Fraction(1, 10), method))
    assert info.value.exit_code == 4
    assert info.value.result.delta_good == Fraction(8)


def test_verify_interval():
    game = ThresholdGame(Fraction(2))
    result = evaluate_max_delta(game, SearchConfig(Fraction(8), Fraction(1, 4), Method.BINARY_SEARCH))
    assert verify_interval(game, result)
    result.delta_bad = result.delta_good
    assert verify_interval(game, result)
    result.delta_good = Fraction(3)
    assert not verify_interval(game, result)


def test_single_milner_node_counter_strategy():
    game = RobustGame(build_consistency_game(milner_ring(1)))
    result = evaluate_max_delta(game, SearchConfig(Fraction(30), Fraction(1, 10)))
    assert result.delta_good == Fraction(15, 2)
    assert result.won_games == 1
    assert result.iterations[-1].won
    assert verify_interval(game, result)


@pytest.mark.slow
def test_single_milner_node_both_methods():
    outcome = run_param(Check.CONSISTENCY, [milner_ring(1)], Fraction(30), Fraction(1, 10))
    runs = {run.method: run for run in outcome.runs}
    assert runs[Method.BINARY_SEARCH].result.games_solved == 9
    assert abs(runs[Method.BINARY_SEARCH].result.delta_good - Fraction(15, 2)) <= Fraction(1, 10)
    assert runs[Method.COUNTER_STRATEGY].result.delta_good == Fraction(15, 2)
    assert outcome.agreement <= Fraction(1, 10)
    assert outcome.exit_code == 0


def test_machine_is_not_robust(machine):
    game = RobustGame(game_for(Check.CONSISTENCY, [machine]))
    assert game.solve(0).won
    assert not game.solve(Fraction(1, 100)).won
    assert not game.solve(Fraction(1, 1000)).won
    outcome = run_param(Check.CONSISTENCY, [machine], Fraction(8), Fraction(1, 100))
    assert [run.outcome for run in outcome.runs] == ["not-robust-at-zero"] * 2
    assert outcome.exit_code == 1


def test_fixed_machine_is_robust_up_to_one(fixed_machine):
    outcome = run_param(Check.CONSISTENCY, [fixed_machine], Fraction(8), Fraction(1, 100))
    runs = {run.method: run.result for run in outcome.runs}
    assert runs[Method.COUNTER_STRATEGY].delta_good == Fraction(1)
    assert Fraction(1) - runs[Method.BINARY_SEARCH].delta_good <= Fraction(1, 100)
    assert outcome.agreement <= Fraction(1, 100)
    cr = runs[Method.COUNTER_STRATEGY]
    assert cr.won_games == 1 and cr.iterations[-1].won
