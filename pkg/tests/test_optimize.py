from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ergopt.dynamics import doubling, quadratic, tent
from ergopt.observables import coboundary, observable_for, parse_observable
from ergopt.optimize import (
    beta_cycle,
    beta_periodic,
    beta_report,
    gamma_estimate,
    gamma_profile,
    subordination_check,
    support_candidate,
)

THIRDS = "-dist(x,[0.3333333333333333,0.6666666666666666])"


def test_beta_examples():
    m = doubling()
    beta, orbit = beta_periodic(m, observable_for(m, "cos(2*pi*x)"), 3)
    assert beta == 1.0 and orbit.points == (0,)
    beta, orbit = beta_periodic(m, observable_for(m, THIRDS), 4)
    assert beta == 0.0 and orbit.points == (Fraction(1, 3), Fraction(2, 3))
    beta, orbit = beta_periodic(m, observable_for(m, "-cos(2*pi*x)"), 12)
    assert beta == pytest.approx(0.5, abs=1e-12) and orbit.itinerary == "01"


def test_quadratic_fixed_point_wins():
    m = quadratic(4)
    beta, orbit = beta_periodic(m, observable_for(m, "x"), 12)
    assert orbit.period == 1 and float(orbit.points[0]) == pytest.approx(0.75, abs=1e-12)
    assert beta == pytest.approx(0.75, abs=1e-9)


def test_cycle_route_brackets_orbit_route():
    m = tent(2)
    phi = observable_for(m, "cos(pi*x)")
    rep = beta_report(m, phi, 10, 1024)
    assert rep.gap <= 0.02
    # each cell weight is within lip * h / 2 of phi on the cell
    assert rep.beta_cycle <= rep.beta_orbit + phi.lip_estimate * 2 / 1024 / 2 + 1e-12


def test_cycle_route_constant():
    m = doubling()
    value, _ = beta_cycle(m, observable_for(m, "0.4"), 64)
    assert value == pytest.approx(0.4)


def test_gamma_constant_is_zero():
    m = tent(Fraction(9, 5))
    assert gamma_estimate(m, observable_for(m, "3"), 3.0, 10, 500) == 0.0


def test_gamma_coboundary_bound():
    m = doubling()
    psi = parse_observable("0.3*sin(2*pi*x)")
    phi = coboundary(psi, m)
    g = [gamma_estimate(m, phi, 0.0, depth, 3000) for depth in (5, 10, 20)]
    assert all(v <= 0.6 + 1e-9 for v in g)
    assert g == sorted(g)
    assert g[-1] > 0.55


def test_gamma_monotone_in_depth_and_nested_grids():
    m = doubling()
    phi = observable_for(m, "-cos(2*pi*x)")
    prof = gamma_profile(m, phi, 0.5, 30, 10_000)
    assert np.all(np.diff(prof) >= 0)
    assert np.isfinite(prof[-1])
    a = gamma_estimate(m, phi, 0.5, 12, 1000)
    b = gamma_estimate(m, phi, 0.5, 12, 3000)
    assert b >= a


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 5.0))
def test_gamma_is_homogeneous(t):
    m = doubling()
    phi = observable_for(m, "-cos(2*pi*x)")
    tphi = observable_for(m, f"{t!r}*(-cos(2*pi*x))")
    base = gamma_estimate(m, phi, 0.5, 12, 2000)
    assert gamma_estimate(m, tphi, 0.5 * t, 12, 2000) == pytest.approx(t * base, rel=1e-9)


def test_support_examples():
    m = doubling()
    everything = support_candidate(m, observable_for(m, "0"), 0.0, 0.0, (5, 5), 200)
    assert everything.members.all()

    # 9999 nodes include 1/3 and 2/3
    cand = support_candidate(m, observable_for(m, THIRDS), 0.0, 0.01, (20, 20), 9999)
    pts = cand.member_points
    assert np.allclose(sorted(pts), [1 / 3, 2 / 3])

    cand = support_candidate(m, observable_for(m, "cos(2*pi*x)"), 1.0, 0.05, (20, 20), 10_000)
    pts = cand.member_points
    assert pts.size
    assert np.minimum(pts, 1 - pts).max() < 0.05

    # shallow truncations admit genuine neighbourhoods
    cand = support_candidate(m, observable_for(m, THIRDS), 0.0, 0.01, (3, 3), 10_000)
    pts = cand.member_points
    assert pts.size > 2
    assert np.minimum(np.abs(pts - 1 / 3), np.abs(pts - 2 / 3)).max() < 0.01


def test_support_rejects_negative_threshold():
    m = doubling()
    with pytest.raises(ValueError):
        support_candidate(m, observable_for(m, "0"), 0.0, -1.0, (2, 2), 10)


def test_subordination_examples():
    m = doubling()
    phi = observable_for(m, THIRDS)
    rep = subordination_check(m, phi, 0.0, 0.0, [Fraction(1, 3), Fraction(2, 3)], 20)
    assert rep.minimum == 0 and rep.passed
    cos = observable_for(m, "cos(2*pi*x)")
    assert subordination_check(m, cos, 1.0, 0.0, [0], 20).passed
    rep = subordination_check(m, cos, 1.0, 0.01, [Fraction(1, 4)], 20)
    assert not rep.passed
    # cos(pi/2) - 1 then cos(pi) - 1, then the fixed point contributes nothing
    assert rep.minimum == pytest.approx(-3.0)
