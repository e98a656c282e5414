"""Markov covers of invariant sets that avoid the turning point.

A cover is built from E_m, the union of the first m backward images of a
periodic orbit z.  Because T(E_m) is contained in E_m, the image of any gap
of E_m that avoids c is an interval with endpoints in E_m, so every other
gap either lies inside it or misses it.  That is the Markov property, and
verify_markov checks it independently by direct image computation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import dynamics
from .dynamics import MapSpec
from .errors import CoverageGap, MarginTooSmall

M_MAX = 12


@dataclass
class MarkovCover:
    intervals: list
    z: tuple = ()
    m: int = 0
    transitions: list = field(default_factory=list)
    verified: bool = False
    endpoints: tuple = ()

    def __len__(self):
        return len(self.intervals)

    def contains(self, x) -> bool:
        return any(a < x < b for a, b in self.intervals)

    def to_json(self) -> dict:
        return {
            "intervals": [[_num(a), _num(b)] for a, b in self.intervals],
            "transitions": [list(t) for t in self.transitions],
            "z": [_num(v) for v in self.z],
            "m": self.m,
            "verified": self.verified,
        }


def _num(v):
    if isinstance(v, Fraction):
        return float(v) if v.denominator == 1 or Fraction(float(v)) == v else str(v)
    return float(v)


def backward_set(m: MapSpec, seeds, depth: int) -> list:
    """E = union over 0 <= k < depth of T^{-k}(seeds), sorted (exact when possible)."""
    level = set(dynamics.check_point(m, s) for s in seeds)
    out = set(level)
    for _ in range(depth - 1):
        nxt = set()
        for y in level:
            nxt.update(dynamics.preimages(m, y))
        level = nxt - out
        out |= nxt
    return sorted(out)


def _neighbors(E, x):
    """Nearest points of E strictly left and right of x (None when absent)."""
    i = np.searchsorted(np.array([float(e) for e in E]), float(x))
    left = [e for e in E[max(0, i - 2) : i + 2] if e < x]
    right = [e for e in E[max(0, i - 2) : i + 2] if e > x]
    return (max(left) if left else None), (min(right) if right else None)


def admissible_cover(m: MapSpec, K_points, z, depth: int) -> MarkovCover:
    """Gaps of E_depth that meet K, after removing the gap around c and the
    two gaps adjacent to each point of z.

    ``z`` is a PeriodicOrbit or a sequence of its points.
    """
    if not m.unimodal:
        raise ValueError("admissible covers are built for unimodal maps")
    zpts = tuple(getattr(z, "points", z))
    K = [dynamics.check_point(m, x) for x in K_points]
    if not K:
        return MarkovCover([], zpts, depth, [], True, ())
    E = backward_set(m, zpts, depth)
    Eset = set(E)
    c = m.turning
    removed = []
    c_gap = None
    if c not in Eset:
        c_gap = _neighbors(E, c)
        if None in c_gap:
            raise MarginTooSmall(f"c is not enclosed by points of E_{depth}")
        removed.append(c_gap)
    for zi in zpts:
        left, right = _neighbors(E, zi)
        if left is not None:
            removed.append((left, zi))
        if right is not None:
            removed.append((zi, right))
    for x in K:
        if x == c or (c_gap is not None and c_gap[0] < x < c_gap[1]):
            raise MarginTooSmall(f"K point {x} is too close to the turning point at depth {depth}")
    gaps = [(E[i], E[i + 1]) for i in range(len(E) - 1)]
    gaps = [g for g in gaps if g not in removed]
    chosen = []
    for x in K:
        hit = [g for g in gaps if g[0] < x < g[1]]
        if not hit:
            raise CoverageGap(x)
        if hit[0] not in chosen:
            chosen.append(hit[0])
    chosen.sort()
    cover = MarkovCover(chosen, zpts, depth, [], False, tuple(E))
    verify_markov(m, cover)
    return cover


def escalate_cover(m: MapSpec, K_points, z, depth: int = 3, m_max: int = M_MAX) -> MarkovCover:
    """Retry admissible_cover with depth, depth + 1, ... up to m_max."""
    err = None
    for d in range(depth, m_max + 1):
        try:
            return admissible_cover(m, K_points, z, d)
        except (CoverageGap, MarginTooSmall) as e:
            err = e
    raise err


# -- verification -----------------------------------------------------------


def _image(m: MapSpec, a, b):
    """Image of (a, b) as a pair of endpoints; lift coordinates on the circle."""
    if m.space == "circle":
        return dynamics.lift(m, a), dynamics.lift(m, b)
    return dynamics.interval_image(m, a, b)


def _relation(m: MapSpec, image, J):
    """(meets, contains) for the image interval against J."""
    u, v = image
    p, q = J
    if m.space != "circle":
        return (u < q and p < v), (u <= p and q <= v)
    if v - u >= 1:
        return True, True
    meets = contains = False
    for s in range(int(np.floor(float(u))) - 1, int(np.ceil(float(v))) + 1):
        ps, qs = p + s, q + s
        if u < qs and ps < v:
            meets = True
            if u <= ps and qs <= v:
                contains = True
    return meets, contains


def verify_markov(m: MapSpec, cover: MarkovCover):
    """Check TI ∩ J ≠ ∅ ⟹ TI ⊃ J for all pairs; returns (ok, violating pairs)
    and records the transition relation on the cover."""
    images = [_image(m, a, b) for a, b in cover.intervals]
    bad = []
    trans = []
    for i, I in enumerate(cover.intervals):
        for j, J in enumerate(cover.intervals):
            meets, contains = _relation(m, images[i], J)
            if meets and not contains:
                bad.append((I, J))
            elif contains:
                trans.append((i, j))
    cover.transitions = trans
    cover.verified = not bad
    return cover.verified, bad


# -- invariant set ----------------------------------------------------------


@dataclass
class InvariantSetReport:
    components: list
    surjective: bool
    counts: list
    total_lengths: list
    max_lengths: list


def _monotone_pieces(m: MapSpec, a, b):
    """Split (a, b) into pieces on which T is monotone, with branch indices."""
    if m.space == "circle":
        bounds = dynamics.cover_branch_bounds(m)
        if m.linear_cover:
            bounds = [Fraction(k, m.d) for k in range(m.d + 1)]
        cuts = [a] + [t for t in bounds if a < t < b] + [b]
    else:
        c = m.turning
        cuts = [a, c, b] if a < c < b else [a, b]
    out = []
    for lo, hi in zip(cuts, cuts[1:]):
        mid = (lo + hi) / 2
        out.append((lo, hi, dynamics.branch_index(m, mid)))
    return out


def _pullback(m: MapSpec, piece, C):
    """Points of the piece mapped into C by T, as an open interval or None."""
    lo, hi, s = piece
    if m.space == "circle":
        u, v = dynamics.lift(m, lo) - s, dynamics.lift(m, hi) - s
    else:
        u, v = sorted((dynamics.eval_map(m, lo), dynamics.eval_map(m, hi)))
    p, q = max(u, C[0]), min(v, C[1])
    if not p < q:
        return None
    x, y = dynamics.inverse_branch(m, s, p), dynamics.inverse_branch(m, s, q)
    return (x, y) if x < y else (y, x)


def invariant_set_depth(m: MapSpec, cover: MarkovCover, depth: int) -> InvariantSetReport:
    """Components of the points whose first ``depth`` iterates stay in the cover,
    plus whether every cover interval is contained in the image of another."""
    if not cover.transitions and cover.intervals:
        verify_markov(m, cover)
    comps = sorted(cover.intervals)
    counts = [len(comps)]
    total = [sum(b - a for a, b in comps)]
    longest = [max((b - a for a, b in comps), default=0)]
    pieces = [p for a, b in cover.intervals for p in _monotone_pieces(m, a, b)]
    for _ in range(depth):
        nxt = []
        for piece in pieces:
            for C in comps:
                got = _pullback(m, piece, C)
                if got is not None:
                    nxt.append(got)
        comps = sorted(nxt)
        counts.append(len(comps))
        total.append(sum(b - a for a, b in comps))
        longest.append(max((b - a for a, b in comps), default=0))
    targets = {j for _, j in cover.transitions}
    surjective = all(j in targets for j in range(len(cover.intervals)))
    return InvariantSetReport(comps, surjective, counts, total, longest)
