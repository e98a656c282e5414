"""Maximal ergodic averages, the constant gamma and support approximations.

beta is computed along two independent routes: the best periodic-orbit
average (a certified lower bound, since every orbit carries an invariant
measure) and the maximum cycle mean of the Ulam cell graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dynamics
from .dynamics import MapSpec
from .orbits import PeriodicOrbit, enumerate_periodic_orbits, orbit_average
from .ulam import build_ulam, max_mean_cycle

TIE_RTOL = 1e-12
SUBORDINATION_TOL = 1e-6


@dataclass
class BetaReport:
    beta_orbit: float
    argmax_orbit: PeriodicOrbit
    beta_cycle: float
    cycle_cells: list
    n_cells: int
    max_period: int

    @property
    def gap(self) -> float:
        return abs(self.beta_orbit - self.beta_cycle)

    def to_json(self) -> dict:
        return {
            "beta_orbit": self.beta_orbit,
            "argmax_orbit": self.argmax_orbit.to_json(),
            "beta_cycle": self.beta_cycle,
            "cycle_cells": list(self.cycle_cells),
            "gap": self.gap,
            "n_cells": self.n_cells,
            "max_period": self.max_period,
        }


def orbit_averages(orbits, phi) -> np.ndarray:
    """Averages of phi over many orbits with one vectorized evaluation."""
    if not orbits:
        return np.zeros(0)
    pts = np.array([float(v) for o in orbits for v in o.points])
    periods = np.array([o.period for o in orbits])
    starts = np.concatenate(([0], np.cumsum(periods)[:-1]))
    vals = np.asarray(phi(pts), dtype=float) * np.ones(pts.size)
    return np.add.reduceat(vals, starts) / periods


def best_orbit(orbits, phi):
    """Index and average of the best orbit; near-ties go to the earlier orbit
    (orbits are sorted by period, then itinerary)."""
    avgs = orbit_averages(orbits, phi)
    best = 0
    for i in range(1, len(avgs)):
        tol = TIE_RTOL * max(1.0, abs(avgs[best]))
        if avgs[i] > avgs[best] + tol:
            best = i
    return best, avgs


def beta_periodic(m: MapSpec, phi, max_period: int):
    """(beta, orbit): the largest orbit average among orbits of period <= max_period."""
    orbits = enumerate_periodic_orbits(m, max_period)
    i, _ = best_orbit(orbits, phi)
    return orbit_average(orbits[i], phi), orbits[i]


def beta_cycle(m: MapSpec, phi, n_cells: int):
    return max_mean_cycle(build_ulam(m, phi, n_cells))


def beta_report(m: MapSpec, phi, max_period: int = 12, n_cells: int = 4096) -> BetaReport:
    b_orbit, orbit = beta_periodic(m, phi, max_period)
    b_cycle, cells = beta_cycle(m, phi, n_cells)
    return BetaReport(b_orbit, orbit, b_cycle, cells, n_cells, max_period)


# -- gamma -----------------------------------------------------------------


def midpoint_grid(m: MapSpec, grid_n: int) -> np.ndarray:
    lo, hi = float(m.domain[0]), float(m.domain[1])
    h = (hi - lo) / grid_n
    return lo + (np.arange(grid_n) + 0.5) * h


def node_grid(m: MapSpec, grid_n: int) -> np.ndarray:
    """i / n on the circle, endpoints included on an interval."""
    if m.space == "circle":
        return np.arange(grid_n) / grid_n
    lo, hi = float(m.domain[0]), float(m.domain[1])
    return np.linspace(lo, hi, grid_n)


def deviation_table(m: MapSpec, phi, beta: float, xs, depth: int) -> np.ndarray:
    """Rows n = 0..depth of S_n phi(x) - n beta."""
    table = dynamics.birkhoff_table(m, phi, xs, depth)
    return table - beta * np.arange(depth + 1)[:, None]


def gamma_estimate(m: MapSpec, phi, beta: float, depth: int, grid_n: int, extra_points=()) -> float:
    """max over grid midpoints (and ``extra_points``) and 1 <= n <= depth of
    S_n phi(x) - n beta, floored at 0 since gamma is never negative.

    This is a lower bound for gamma; it is monotone in depth, and in grid_n
    along refinements that keep the old midpoints (grid_n -> 3 grid_n).
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    xs = midpoint_grid(m, grid_n)
    if len(extra_points):
        xs = np.concatenate((xs, [float(v) for v in extra_points]))
    best = 0.0
    # chunk to bound memory at large grids
    for start in range(0, xs.size, 1 << 16):
        dev = deviation_table(m, phi, beta, xs[start : start + (1 << 16)], depth)
        best = max(best, float(dev[1:].max()))
    return best


def gamma_profile(m: MapSpec, phi, beta: float, depth: int, grid_n: int) -> np.ndarray:
    """Running maxima: entry n-1 is the estimate with depth n."""
    xs = midpoint_grid(m, grid_n)
    dev = deviation_table(m, phi, beta, xs, depth)
    return np.maximum(np.maximum.accumulate(dev[1:].max(axis=1)), 0.0)


# -- support ----------------------------------------------------------------


@dataclass
class SupportCandidate:
    points: np.ndarray
    members: np.ndarray
    c_star: float
    k_max: int
    l_max: int
    beta: float

    @property
    def member_points(self) -> np.ndarray:
        return self.points[self.members]

    def to_json(self) -> dict:
        return {
            "c_star": self.c_star,
            "k_max": self.k_max,
            "l_max": self.l_max,
            "beta": self.beta,
            "n_points": int(self.points.size),
            "n_members": int(self.members.sum()),
            "members": self.member_points.tolist(),
        }

    def to_csv_rows(self):
        yield ("x", "member")
        for x, f in zip(self.points.tolist(), self.members.tolist()):
            yield (f"{x:.12g}", int(f))


def support_candidate(m: MapSpec, phi, beta: float, c_star: float | None = None, depths=(20, 20),
                      grid_n: int = 10_000, gamma_depth: int = 30, extra_points=()) -> SupportCandidate:
    """Flag grid nodes x with |S_k phi(T^l x) - k beta| <= C_* for all
    1 <= k <= k_max and 0 <= l <= l_max.

    Members must shadow the support for k_max + l_max steps, so at depth 20
    they sit within about 2^-40 of it; the node grid (rather than midpoints)
    is used so that rational orbit points such as 0 or 1/3 can be hit
    exactly.  ``extra_points`` are tested too.  C_* defaults to the gamma
    estimate plus 10%.
    """
    k_max, l_max = depths
    if c_star is None:
        c_star = 1.1 * gamma_estimate(m, phi, beta, gamma_depth, grid_n)
    if c_star < 0:
        raise ValueError("C_* must be >= 0")
    xs = node_grid(m, grid_n)
    if len(extra_points):
        xs = np.concatenate((xs, [float(v) for v in extra_points]))
    dev = deviation_table(m, phi, beta, xs, k_max + l_max)
    worst = np.zeros(xs.size)
    for l in range(l_max + 1):
        window = dev[l + 1 : l + k_max + 1] - dev[l]
        np.maximum(worst, np.abs(window).max(axis=0), out=worst)
    return SupportCandidate(xs, worst <= c_star, float(c_star), k_max, l_max, beta)


# -- subordination ----------------------------------------------------------


@dataclass
class SubordinationReport:
    minimum: float
    point: object
    n: int
    gamma: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.minimum >= -self.gamma - self.tol

    def to_json(self) -> dict:
        return {"min": self.minimum, "point": float(self.point), "n": self.n, "gamma": self.gamma,
                "tol": self.tol, "pass": self.passed}


def subordination_check(m: MapSpec, phi, beta: float, gamma: float, points, depth: int,
                        tol: float = SUBORDINATION_TOL) -> SubordinationReport:
    """min over the points and 1 <= n <= depth of S_n phi(x) - n beta.

    Rational points on exact maps are iterated exactly.
    """
    best = (math.inf, None, 0)
    for x0 in points:
        x = dynamics.check_point(m, x0)
        if not (m.exact and dynamics.is_rational(x)):
            x = float(x)
        s = 0.0
        for n in range(1, depth + 1):
            s += phi(x) - beta
            if s < best[0]:
                best = (s, x0, n)
            x = dynamics.eval_map(m, x)
    return SubordinationReport(best[0], best[1], best[2], gamma, tol)
