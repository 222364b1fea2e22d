import random
from fractions import Fraction

import pytest

from helpers import atom, random_federation, random_zone
from tioa.zones import INF, Bound, Dbm, Federation, bound, bound_add, pred_t

# Zones are built at scale SCALE and points use integers in scaled units, so
# that points on the 1/SCALE grid hit every border of an integer-constant zone.
SCALE = 4
HIGH = 8


def scaled_point(rng: random.Random, clocks: int, step: int = 1) -> tuple[int, ...]:
    return tuple(step * rng.randint(0, HIGH * SCALE // step) for _ in range(clocks))


def some_zone(rng: random.Random, clocks: int, factor: int = SCALE) -> Dbm:
    while True:
        zone = random_zone(rng, clocks, factor=factor)
        if zone is not None:
            return zone


def test_bound_encoding_orders_bounds():
    assert bound(3, True) < bound(3, False) < bound(4, True)
    assert bound_add(bound(1, False), bound(2, True)) == bound(3, True)
    assert bound_add(bound(1, False), INF) == INF
    assert Bound.decode(bound(-2, True)) == Bound(-2, True)
    assert Bound.decode(INF) == Bound(None, True)


def test_guard_with_difference_constraint():
    zone = Dbm.from_atoms(3, [atom(1, "<=", 1, right=2), atom(1, "<", Fraction(7, 2))], factor=2)
    assert zone.contains_point((6, 4))
    assert zone.contains_point((6, 6))
    assert not zone.contains_point((7, 7))
    assert not zone.contains_point((6, 3))
    assert zone.render(["x", "y"], 2) == "x < 7/2 && x - y <= 1"


def test_contradiction_is_empty():
    assert Dbm.from_atoms(2, [atom(1, ">", 2), atom(1, "<=", 2)]) is None
    assert Federation.from_atoms(2, [atom(1, ">", 2), atom(1, "<=", 2)]).is_empty()


def test_up_down_reset_on_a_point():
    zone = Dbm.from_atoms(3, [atom(1, "<=", 1), atom(1, ">=", 1), atom(2, "<=", 2), atom(2, ">=", 2)])
    up = zone.up()
    assert up.contains_point((Fraction(5), Fraction(6)))
    assert not up.contains_point((Fraction(5), Fraction(5)))
    down = zone.down()
    assert down.contains_point((Fraction(0), Fraction(1)))
    assert not down.contains_point((Fraction(0), Fraction(0)))
    reset = zone.reset([1])
    assert reset.contains_point((Fraction(0), Fraction(2)))
    assert not reset.contains_point((Fraction(1), Fraction(2)))


def test_subtract_gives_disjoint_cover():
    rng = random.Random(7)
    for _ in range(50):
        a, b = some_zone(rng, 2), some_zone(rng, 2)
        pieces = a.subtract(b)
        for _ in range(200):
            p = scaled_point(rng, 2)
            inside = [piece.contains_point(p) for piece in pieces]
            assert sum(inside) <= 1
            assert any(inside) == (a.contains_point(p) and not b.contains_point(p))


def test_extrapolation_only_grows():
    rng = random.Random(11)
    for _ in range(100):
        zone = some_zone(rng, 2, factor=1)
        wider = zone.extrapolate([0, 2, 3])
        assert wider.includes(zone)


def test_pred_t_example():
    # goal x >= 4, avoid 2 < x < 3: only valuations past the bad window can delay into the goal
    goal = Federation.from_atoms(2, [atom(1, ">=", 4)])
    avoid = Federation.from_atoms(2, [atom(1, ">", 2), atom(1, "<", 3)])
    result = pred_t(goal, avoid)
    assert result.contains_point((Fraction(3),))
    assert result.contains_point((Fraction(5),))
    assert not result.contains_point((Fraction(2),))
    assert not result.contains_point((Fraction(5, 2),))
    assert pred_t(goal, Federation.empty(2)).contains_point((Fraction(0),))


@pytest.mark.slow
@pytest.mark.parametrize("clocks", [1, 2, 3])
def test_set_operations_agree_with_sampling(clocks):
    rng = random.Random(1000 + clocks)
    instances = 200 if clocks == 2 else 70
    for _ in range(instances):
        a = random_federation(rng, clocks, factor=SCALE)
        b = random_federation(rng, clocks, factor=SCALE)
        both, either = a.intersect(b), a.union(b)
        difference, complement = a.subtract(b), a.complement()
        for _ in range(1000):
            p = scaled_point(rng, clocks)
            in_a, in_b = a.contains_point(p), b.contains_point(p)
            assert both.contains_point(p) == (in_a and in_b)
            assert either.contains_point(p) == (in_a or in_b)
            assert difference.contains_point(p) == (in_a and not in_b)
            assert complement.contains_point(p) == (not in_a)
        assert a.includes(both) and either.includes(a)
        assert difference.union(both).same_set(a)


def test_set_operations_agree_with_sampling_quick():
    rng = random.Random(5)
    for _ in range(20):
        a, b = random_federation(rng, 2, factor=SCALE), random_federation(rng, 2, factor=SCALE)
        both, difference = a.intersect(b), a.subtract(b)
        for _ in range(300):
            p = scaled_point(rng, 2)
            in_a, in_b = a.contains_point(p), b.contains_point(p)
            assert both.contains_point(p) == (in_a and in_b)
            assert difference.contains_point(p) == (in_a and not in_b)


@pytest.mark.parametrize("zones, points", [(30, 100), pytest.param(200, 1000, marks=pytest.mark.slow)])
def test_time_and_reset_operations_agree_with_sampling(zones, points):
    # points on the 1/4 grid, witnesses searched on the 1/8 grid
    rng = random.Random(23)
    factor, step = 8, 2
    horizon = (6 + HIGH + 2) * factor
    for _ in range(zones):
        zone = some_zone(rng, 2, factor=factor)
        up, down = zone.up(), zone.down()
        reset, free = zone.reset([1]), zone.free([2])
        for _ in range(points):
            p = tuple(step * rng.randint(0, HIGH * factor // step) for _ in range(2))
            past = any(zone.contains_point((p[0] - d, p[1] - d)) for d in range(min(p) + 1))
            assert up.contains_point(p) == past
            future = any(zone.contains_point((p[0] + d, p[1] + d)) for d in range(horizon))
            assert down.contains_point(p) == future
            assert reset.contains_point(p) == (p[0] == 0 and any(zone.contains_point((v, p[1])) for v in range(horizon)))
            assert free.contains_point(p) == any(zone.contains_point((p[0], v)) for v in range(horizon))


def brute_pred_t(goal: Federation, avoid: Federation, p: tuple[int, ...], horizon: int) -> bool:
    for d in range(horizon + 1):
        q = tuple(c + d for c in p)
        if avoid.contains_point(q):
            return False
        if goal.contains_point(q):
            return True
    return False


@pytest.mark.parametrize("clocks", [1, 2])
@pytest.mark.parametrize("zones, points", [(20, 100), pytest.param(200, 1000, marks=pytest.mark.slow)])
def test_pred_t_agrees_with_grid_search(clocks, zones, points):
    # points on the 1/8 grid and delays on the 1/16 grid find every border crossing
    rng = random.Random(300 + clocks)
    factor = 16
    horizon = 7 * factor
    for _ in range(zones):
        goal = random_federation(rng, clocks, factor=factor)
        avoid = random_federation(rng, clocks, factor=factor)
        result = pred_t(goal, avoid)
        for _ in range(points):
            p = tuple(2 * rng.randint(0, 7 * factor // 2) for _ in range(clocks))
            assert result.contains_point(p) == brute_pred_t(goal, avoid, p, horizon), (goal, avoid, p)
