from fractions import Fraction

import pytest

from ergopt import dynamics
from ergopt.dynamics import circle_cover, doubling, parse_map, quadratic, tent
from ergopt.errors import CapExceeded
from ergopt.observables import observable_for
from ergopt.orbits import dist_to_orbit, enumerate_periodic_orbits, lyndon_words, orbit_average, period_cap


def fixed_point_count(orbits, p):
    """Points fixed by T^p: orbits whose period divides p."""
    return sum(o.period for o in orbits if p % o.period == 0)


def test_small_orbit_examples():
    orbits = enumerate_periodic_orbits(doubling(), 2)
    assert [o.points for o in orbits] == [(0,), (Fraction(1, 3), Fraction(2, 3))]
    orbits = enumerate_periodic_orbits(tent(2), 2)
    assert sorted(o.points for o in orbits) == [(0,), (Fraction(4, 5), Fraction(8, 5)), (Fraction(4, 3),)]


@pytest.mark.parametrize("desc,count", [
    ("doubling", lambda p: 2 ** p - 1),
    ("tent:a=2", lambda p: 2 ** p),
    ("quad:a=4", lambda p: 2 ** p),
    ("cover:d=3", lambda p: 3 ** p - 1),
])
def test_fixed_points_of_iterates(desc, count):
    m = parse_map(desc)
    top = min(8, period_cap(m))
    orbits = enumerate_periodic_orbits(m, top)
    for p in range(1, top + 1):
        assert fixed_point_count(orbits, p) == count(p)


def test_orbits_are_really_periodic():
    for m in (quadratic(Fraction(39, 10)), tent(Fraction(9, 5)), circle_cover(2, Fraction(1, 2))):
        for o in enumerate_periodic_orbits(m, 6):
            pts = [float(v) for v in o.points]
            for i, x in enumerate(pts):
                y = float(dynamics.eval_map(m, x))
                assert dynamics.distance(m.space, y, pts[(i + 1) % o.period]) < 1e-8
            assert len({round(v, 9) for v in pts}) == o.period


def test_minimal_periods_are_distinct():
    orbits = enumerate_periodic_orbits(doubling(), 6)
    seen = set()
    for o in orbits:
        key = frozenset(o.points)
        assert key not in seen
        seen.add(key)


def test_average_examples():
    m = doubling()
    phi = observable_for(m, "cos(2*pi*x)")
    orbits = enumerate_periodic_orbits(m, 2)
    assert orbit_average(orbits[1], phi) == pytest.approx(-0.5)
    assert orbit_average(orbits[0], phi) == 1.0
    assert orbit_average(orbits[1], observable_for(m, "0.25")) == pytest.approx(0.25)


def test_distance_examples():
    two = enumerate_periodic_orbits(doubling(), 2)[1]
    assert dist_to_orbit(Fraction(1, 2), two) == Fraction(1, 6)
    assert dist_to_orbit(Fraction(1, 3), two) == 0
    assert dist_to_orbit(0, two) == Fraction(1, 3)


def test_cap():
    with pytest.raises(CapExceeded):
        enumerate_periodic_orbits(doubling(), 25)
    with pytest.raises(ValueError):
        enumerate_periodic_orbits(doubling(), 0)


def test_lyndon_counts():
    # necklace counting: number of binary Lyndon words of length n
    assert [sum(1 for w in lyndon_words(2, n) if len(w) == n) for n in range(1, 9)] == [2, 1, 2, 3, 6, 9, 18, 30]


def test_within_core_filters_to_the_core():
    m = tent(Fraction(7, 5))
    r, (lo, hi) = dynamics.renorm_core(m)
    assert r == 2
    image = dynamics.interval_image(m, lo, hi)
    inside = enumerate_periodic_orbits(m, 6, within_core=True)
    assert inside
    for o in inside:
        # the cycle Y, TY is visited alternately
        assert o.period % 2 == 0
        assert all(lo <= v <= hi or image[0] <= v <= image[1] for v in o.points)
    every = enumerate_periodic_orbits(m, 6)
    # the fixed points 0 and 7/6 sit outside the core
    assert {o.itinerary for o in every} - {o.itinerary for o in inside} >= {"L", "R"}
