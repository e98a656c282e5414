"""Periodic orbit enumeration, orbit averages and distances to orbits.

Orbits are indexed by their itinerary.  Every periodic orbit that avoids the
turning point has a primitive itinerary, and its lexicographically least
rotation is a Lyndon word.  For each Lyndon word w of length p we solve
x = g_w(x), where g_w composes the inverse branches along w, then rebuild the
orbit backwards and keep it only if its forward itinerary really is w.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import dynamics
from .dynamics import MapSpec, EQ_TOL
from .errors import CapExceeded

BINARY_CAP = 20
BISECT_ITERS = 64
POLISH_TARGET = 1e-12


@dataclass(frozen=True)
class PeriodicOrbit:
    period: int
    points: tuple
    itinerary: str
    exact: bool = False
    space: str = "interval"

    def __post_init__(self):
        if len(self.points) != self.period or len(self.itinerary) != self.period:
            raise ValueError("period, points and itinerary disagree in length")

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return self.period

    def floats(self) -> np.ndarray:
        return np.array([float(v) for v in self.points])

    @property
    def diameter(self):
        """Largest pairwise distance in the space's metric."""
        pts = self.points
        return max(
            (dynamics.distance(self.space, u, v) for i, u in enumerate(pts) for v in pts[i + 1 :]),
            default=0,
        )

    def literal(self) -> str:
        """The points as a dist(...) orbit literal, exact to double precision."""
        return "[" + ", ".join(repr(float(v)) for v in self.points) + "]"

    def to_json(self) -> dict:
        out = {"period": self.period, "points": [float(v) for v in self.points], "itinerary": self.itinerary}
        if self.exact:
            out["exact_points"] = [str(v) for v in self.points]
        return out


def lyndon_words(k: int, n: int):
    """All Lyndon words of length <= n over {0..k-1}, in lexicographic order (Duval)."""
    w = [-1]
    while w:
        w[-1] += 1
        yield tuple(w)
        m = len(w)
        while len(w) < n:
            w.append(w[len(w) - m])
        while w and w[-1] == k - 1:
            w.pop()


def period_cap(m: MapSpec) -> int:
    """Largest supported period: 20 for two branches, the same word budget otherwise."""
    return max(1, int(BINARY_CAP * math.log(2) / math.log(m.n_branches) + 1e-9))


def _words_by_length(k: int, n: int) -> dict:
    out = {p: [] for p in range(1, n + 1)}
    for w in lyndon_words(k, n):
        out[len(w)].append(w)
    return out


def _affine_branch(m: MapSpec, s: int):
    """Inverse branch s as y -> A y + B for the piecewise-linear kinds."""
    if m.kind == "tent":
        return (1 / m.a, 0) if s == 0 else (-1 / m.a, 2)
    d = m.d
    return Fraction(1, d), Fraction(s, d)


def _affine_fixed_point(m: MapSpec, word) -> object:
    A, B = 1, 0
    for s in reversed(word):
        a_s, b_s = _affine_branch(m, s)
        A, B = a_s * A, a_s * B + b_s
    return B / (1 - A)


def _backward_orbit(m: MapSpec, x0, word):
    """points[k] with T(points[k]) = points[k+1], built from x0 by inverse branches."""
    p = len(word)
    pts = [None] * p
    pts[0] = x0
    y = x0
    for k in range(p - 1, 0, -1):
        if m.kind == "tent" or m.linear_cover:
            a_s, b_s = _affine_branch(m, word[k])
            y = a_s * y + b_s
        else:
            y = dynamics.inverse_branch(m, word[k], y)
        pts[k] = y
    return pts


def _float_fixed_points(m: MapSpec, words: list) -> np.ndarray:
    """Vectorized bisection for g_w(x) = x over [0, 1], one root per word."""
    W = np.array(words, dtype=int)
    lo = np.zeros(len(words))
    hi = np.ones(len(words))

    def g(x):
        for j in range(W.shape[1] - 1, -1, -1):
            x = dynamics.inverse_branch_array(m, W[:, j], x)
        return x

    for _ in range(BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        up = g(mid) >= mid
        lo = np.where(up, mid, lo)
        hi = np.where(up, hi, mid)
        if np.all(hi - lo <= 1e-17):
            break
    x = 0.5 * (lo + hi)
    if m.kind == "quad":
        x = _newton_polish(m, x, W.shape[1])
    return x


def _newton_polish(m: MapSpec, x: np.ndarray, p: int) -> np.ndarray:
    """A few guarded Newton steps on Q^p(x) - x."""
    for _ in range(8):
        y = x.copy()
        dp = np.ones_like(x)
        for _ in range(p):
            dp *= float(m.a) * (1.0 - 2.0 * y)
            y = dynamics.step_array(m, y)
        f = y - x
        denom = dp - 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(np.abs(denom) > 1e-300, f / denom, 0.0)
        ok = np.isfinite(step) & (np.abs(step) < 1e-6)
        x = np.where(ok, np.clip(x - step, 0.0, 1.0), x)
        if np.all(np.abs(np.where(ok, step, 0.0)) <= POLISH_TARGET):
            break
    return x


def _validate(m: MapSpec, pts, word, tol) -> bool:
    exact = m.exact
    lo, hi = m.domain
    p = len(word)
    for k, x in enumerate(pts):
        if m.space == "interval" and not lo <= x <= hi:
            return False
        if dynamics.branch_index(m, x) != word[k]:
            return False
    for k, x in enumerate(pts):
        fx = dynamics.eval_map(m, x)
        nxt = pts[(k + 1) % p]
        if exact and dynamics.is_rational(x):
            if fx != nxt:
                return False
        elif dynamics.distance(m.space, float(fx), float(nxt)) > tol:
            return False
    return True


@lru_cache(maxsize=256)
def _orbits_of_period(m: MapSpec, p: int, tol: float) -> tuple:
    words = _words_by_length(m.n_branches, p)[p]
    symbols = m.symbols
    exact = m.exact
    piecewise_linear = m.kind == "tent" or m.linear_cover
    if not piecewise_linear:
        roots = _float_fixed_points(m, words)
    out = []
    for i, w in enumerate(words):
        x0 = _affine_fixed_point(m, w) if piecewise_linear else float(roots[i])
        pts = _backward_orbit(m, x0, w)
        if m.space == "circle":
            pts = [v % 1 for v in pts]
        if _validate(m, pts, w, tol):
            itin = "".join(symbols[s] for s in w)
            out.append(PeriodicOrbit(p, tuple(pts), itin, exact, m.space))
    return tuple(out)


def enumerate_periodic_orbits(m: MapSpec, max_period: int, tol: float = EQ_TOL, cap: int | None = None,
                              within_core: bool = False) -> list:
    """All periodic orbits of minimal period <= max_period, sorted by (period, itinerary).

    The whole domain is searched by default; ``within_core=True`` keeps only the
    orbits lying in the renormalization core Y of a unimodal map together with
    its images T^k Y, k < r.
    """
    if max_period < 1:
        raise ValueError("max_period must be >= 1")
    cap = period_cap(m) if cap is None else cap
    if max_period > cap:
        raise CapExceeded(f"max_period {max_period} exceeds the cap {cap} for {m}")
    orbits = []
    for p in range(1, max_period + 1):
        orbits.extend(_orbits_of_period(m, p, tol))
    if within_core and m.unimodal:
        r, (lo, hi) = dynamics.renorm_core(m)
        # the core Y and its images T^k Y, k < r, form the invariant cycle
        cycle = [(lo, hi)]
        for _ in range(r - 1):
            cycle.append(dynamics.interval_image(m, *cycle[-1]))
        slack = 0 if m.exact else tol
        orbits = [o for o in orbits
                  if all(any(u - slack <= v <= w + slack for u, w in cycle) for v in o.points)]
    return orbits


def orbit_average(orbit: PeriodicOrbit, phi) -> float:
    return math.fsum(phi(v) for v in orbit.points) / orbit.period


def dist_to_orbit(x, orbit: PeriodicOrbit, space: str | None = None):
    space = space or orbit.space
    return min(dynamics.distance(space, x, v) for v in orbit.points)
