import random
from dataclasses import replace
from fractions import Fraction

import pytest

from helpers import atom, guard, late_window, random_atoms, window_spec
from tioa.errors import ReplayError
from tioa.game import outcome_runs, solve_safety_game
from tioa.milner import milner_ring
from tioa.model import Edge, Guard
from tioa.parametric import (
    DeltaInterval,
    ParamRegion,
    ParamSpace,
    fourier_motzkin,
    make_atom,
    minimize,
    ppost,
    ppred,
    ppred_t,
    project_delta,
    replay_spoiling_strategy,
)
from tioa.search import RobustGame
from tioa.transforms import build_consistency_game
from tioa.zones import Dbm, Federation, pred_t

DELTA_MAX = 4
DELTAS = [Fraction(d) for d in range(DELTA_MAX + 1)]


def random_parametric_guard(rng: random.Random, clocks: int) -> Guard:
    return Guard(tuple(replace(a, delta=rng.choice([-1, 0, 0, 1])) for a in random_atoms(rng, clocks)))


def zone_at(g: Guard, clocks: int, delta: Fraction):
    return g.instantiate(delta).zone(clocks + 1)


def federation_at(region: ParamRegion, clocks: int, delta: Fraction) -> Federation:
    return Federation(clocks + 1, [p.slice(delta) for p in region])


def same_zone(a, b) -> bool:
    if a is None or b is None:
        return a is None and b is None
    return a == b


def test_make_atom_normalises():
    a = make_atom([2, -2, 4], 6, False)
    assert a.coeffs == (1, -1, 2) and a.constant == 3
    assert make_atom([0, 0], 1, True) is True
    assert make_atom([0, 0], -1, False) is False
    assert make_atom([Fraction(1, 2), 0], 1, True).coeffs == (1, 0)


def test_fourier_motzkin_projects_differences():
    space = ParamSpace(2)
    poly = space.from_guard(guard(atom(1, "<=", 1, right=2), atom(2, "<", 2)))
    projected = poly.eliminate([1])
    assert projected.contains((Fraction(5, 2), Fraction(9)), Fraction(0))
    assert not projected.contains((Fraction(3), Fraction(0)), Fraction(0))
    infeasible = space.from_guard(guard(atom(1, "<", 1), atom(1, ">", 2)))
    assert infeasible.is_empty()
    assert fourier_motzkin(space.from_guard(guard(atom(1, "<=", 2))).atoms, 0) is not None


def test_parameter_stays_constant_under_elapse():
    space = ParamSpace(1, Fraction(DELTA_MAX))
    poly = space.origin().and_atoms(space.guard_atoms(guard(atom(1, ">=", 1, delta=-1))))
    later = poly.elapse().intersect(space.from_guard(guard(atom(1, ">=", 2))))
    assert later.contains((Fraction(2),), Fraction(1))
    assert not later.contains((Fraction(2),), Fraction(1, 2))
    assert later.slice(Fraction(1)) == Dbm.from_atoms(2, [atom(1, ">=", 2)])


@pytest.mark.parametrize("clocks", [1, 2])
def test_slices_commute_with_zone_operations(clocks):
    rng = random.Random(77 + clocks)
    space = ParamSpace(clocks, Fraction(DELTA_MAX))
    for _ in range(100):
        g, h = random_parametric_guard(rng, clocks), random_parametric_guard(rng, clocks)
        p, q = space.from_guard(g), space.from_guard(h)
        up, down = p.elapse(), p.elapse_past()
        reset, free = p.reset([1]), p.free([clocks])
        both = p.intersect(q)
        difference = ParamRegion.of(p).subtract(ParamRegion.of(q))
        for delta in DELTAS:
            zone = zone_at(g, clocks, delta)
            other = zone_at(h, clocks, delta)
            assert same_zone(p.slice(delta), zone)
            if zone is None:
                assert up.slice(delta) is None and down.slice(delta) is None
                continue
            assert same_zone(up.slice(delta), zone.up())
            assert same_zone(down.slice(delta), zone.down())
            assert same_zone(reset.slice(delta), zone.reset([1]))
            assert same_zone(free.slice(delta), zone.free([clocks]))
            assert same_zone(both.slice(delta), zone.intersect(other) if other is not None else None)
            expected = Federation(clocks + 1, [zone]).subtract(Federation(clocks + 1, [other]))
            assert federation_at(difference, clocks, delta).same_set(expected)


@pytest.mark.parametrize("instances", [30, pytest.param(100, marks=pytest.mark.slow)])
def test_safe_timed_predecessors_commute_with_slices(instances):
    rng = random.Random(5)
    clocks = 2
    space = ParamSpace(clocks, Fraction(DELTA_MAX))
    for _ in range(instances):
        goals = [random_parametric_guard(rng, clocks) for _ in range(rng.randint(1, 2))]
        avoids = [random_parametric_guard(rng, clocks) for _ in range(rng.randint(0, 2))]
        result = ppred_t(
            ParamRegion(space, [space.from_guard(g) for g in goals]),
            ParamRegion(space, [space.from_guard(b) for b in avoids]),
        )
        for delta in DELTAS:
            goal = Federation(clocks + 1, [zone_at(g, clocks, delta) for g in goals])
            avoid = Federation(clocks + 1, [zone_at(b, clocks, delta) for b in avoids])
            assert federation_at(result, clocks, delta).same_set(pred_t(goal, avoid))


def test_discrete_steps_follow_parametric_guards():
    space = ParamSpace(2, Fraction(DELTA_MAX))
    edge = Edge("A", "a", guard(atom(1, ">=", 2, delta=-1), atom(1, "<=", 3, delta=1)), frozenset({2}), "B")
    source = space.universe()
    after = ppost(source, edge, space.universe())
    assert after.contains((Fraction(1), Fraction(0)), Fraction(1))
    assert not after.contains((Fraction(1), Fraction(0)), Fraction(0))
    assert not after.contains((Fraction(2), Fraction(1)), Fraction(1))
    before = ppred(space.universe(), edge, space.universe())
    assert before.contains((Fraction(4), Fraction(7)), Fraction(1))
    assert not before.contains((Fraction(4), Fraction(7)), Fraction(0))


def test_projection_and_minimum():
    space = ParamSpace(1, Fraction(DELTA_MAX))
    from_one = space.poly(space.guard_atoms(guard(atom(1, ">=", 1, delta=-1), atom(1, "<=", 3))))
    from_two = space.poly([make_atom([0, -1], -2, True)])
    intervals = project_delta(ParamRegion(space, [from_two, from_one]))
    assert intervals == [
        DeltaInterval(Fraction(1), False, Fraction(DELTA_MAX), False),
        DeltaInterval(Fraction(2), True, Fraction(DELTA_MAX), False),
    ]
    assert minimize(intervals) == (Fraction(1), True)
    assert minimize(intervals[1:]) == (Fraction(2), False)
    assert str(intervals[1]) == "(2, 4]"
    with pytest.raises(ReplayError):
        minimize([])


def test_region_drops_covered_pieces_and_merges_halves():
    space = ParamSpace(1, Fraction(DELTA_MAX))
    wide = space.from_guard(guard(atom(1, "<=", 3)))
    narrow = space.from_guard(guard(atom(1, "<=", 2, delta=-1)))
    assert ParamRegion(space, [narrow, wide, narrow]).polys == (wide,)
    assert ParamRegion.of(wide).includes(ParamRegion.of(narrow))
    assert not ParamRegion.of(narrow).includes(ParamRegion.of(wide))
    (below,) = ParamRegion.of(wide).subtract(ParamRegion.of(space.from_guard(guard(atom(1, ">", 1)))))
    assert below.contains((Fraction(1),), Fraction(0)) and not below.contains((Fraction(3, 2),), Fraction(0))
    low = space.from_guard(guard(atom(1, "<", 2, delta=1), atom(1, "<=", 5)))
    high = space.from_guard(guard(atom(1, ">=", 2, delta=1), atom(1, "<=", 5)))
    (merged,) = ParamRegion(space, [low, high]).coalesce()
    assert merged.includes(low) and merged.includes(high)
    assert merged.includes(space.from_guard(guard(atom(1, "<=", 5))))


def test_subtraction_stays_compact_on_repeated_updates():
    rng = random.Random(61)
    space = ParamSpace(2, Fraction(DELTA_MAX))
    region = ParamRegion(space)
    for _ in range(40):
        piece = ParamRegion.of(space.from_guard(random_parametric_guard(rng, 2)))
        region = region.union(piece.subtract(region)).coalesce()
        assert all(not p.includes(q) for p in region for q in region if p is not q)
        assert region.includes(piece)
    universe = ParamRegion.of(space.universe())
    assert len(universe.subtract(universe.subtract(region)).subtract(region)) == 0


def test_replay_of_a_parameter_free_game():
    game = build_consistency_game(late_window())
    result = solve_safety_game(game.automaton, game.verifier, game.bad)
    replay = replay_spoiling_strategy(game, result, Fraction(1))
    assert (replay.delta_min, replay.attained) == (Fraction(0), True)
    assert replay.explored == len(outcome_runs(result))


def test_replay_stops_at_the_visit_bound():
    # Busy has a go? self-loop, so it is queued again after its first update
    game = build_consistency_game(late_window())
    result = solve_safety_game(game.automaton, game.verifier, game.bad)
    with pytest.raises(ReplayError, match="within 1 visits"):
        replay_spoiling_strategy(game, result, Fraction(1), max_visits=1)


def test_replay_of_the_window_finds_the_open_bound():
    # the adversary may move an output by up to twice the perturbation
    game = RobustGame(build_consistency_game(window_spec(1, 4)))
    played = game.solve(Fraction(2))
    assert not played.won and played.factor == 1
    replay = replay_spoiling_strategy(played.game, played.result, played.delta)
    assert (replay.delta_min, replay.attained) == (Fraction(3, 2), False)
    assert replay.intervals[0].low_strict


@pytest.mark.parametrize(
    "spec, bound, lost_at",
    [
        (window_spec(1, 4), Fraction(3, 2), Fraction(2)),
        pytest.param(milner_ring(1), Fraction(15, 2), Fraction(30), marks=pytest.mark.slow),
    ],
    ids=["window", "milner1"],
)
def test_fixed_games_above_the_replayed_bound_are_lost(spec, bound, lost_at):
    rng = random.Random(3)
    game = RobustGame(build_consistency_game(spec))
    played = game.solve(lost_at)
    assert not played.won
    replay = game.replay(played)
    assert (replay.delta_min, replay.attained) == (bound, False)
    above = [bound + Fraction(1, 100)] + [bound + (lost_at - bound) * Fraction(rng.randint(1, 100), 100) for _ in range(3)]
    for delta in above:
        assert not game.solve(delta).won
    assert game.solve(bound).won


def post_at(zone, edge: Edge, invariant, delta: Fraction):
    moved = zone.and_atoms(edge.guard.instantiate(delta).atoms)
    if moved is None or invariant is None:
        return None
    return moved.reset(edge.resets).intersect(invariant)


def pred_at(zone, edge: Edge, invariant, delta: Fraction):
    before = zone
    if edge.resets:
        before = zone.and_atoms([atom(x, "<=", 0) for x in sorted(edge.resets)])
        if before is None:
            return None
        before = before.free(edge.resets)
    before = before.and_atoms(edge.guard.instantiate(delta).atoms)
    if before is None or invariant is None:
        return None
    return before.intersect(invariant)


@pytest.mark.slow
def test_discrete_steps_commute_with_slices():
    rng = random.Random(19)
    clocks = 2
    space = ParamSpace(clocks, Fraction(DELTA_MAX))
    for _ in range(100):
        g = random_parametric_guard(rng, clocks)
        edge = Edge("A", "a", random_parametric_guard(rng, clocks), frozenset(rng.sample([1, 2], rng.randint(0, 2))), "B")
        invariant = guard(atom(rng.randint(1, clocks), "<=", rng.randint(2, 8)))
        p, inv = space.from_guard(g), space.from_guard(invariant)
        after, before = ppost(p, edge, inv), ppred(p, edge, inv)
        for delta in DELTAS:
            zone = zone_at(g, clocks, delta)
            if zone is None:
                assert after.slice(delta) is None and before.slice(delta) is None
                continue
            inv_zone = invariant.zone(clocks + 1)
            assert same_zone(after.slice(delta), post_at(zone, edge, inv_zone, delta))
            assert same_zone(before.slice(delta), pred_at(zone, edge, inv_zone, delta))
