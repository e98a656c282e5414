"""Explicit sub-action candidates and their verification.

For a covering map the truncated candidate is

    psi_N(x) = max over 1 <= n <= N and y in T^{-n} x of S_n phi(y) - n beta.

Along the preimage tree of x a child z of y (T z = y) has
S_{n+1} phi(z) = phi(z) + S_n phi(y), so values accumulate one level at a
time.  The tree is searched breadth-first for all grid points at once, and a
branch is cut once its value plus (levels left) * max(0, sup phi - beta)
cannot beat the best value already found.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dynamics
from .dynamics import MapSpec
from .errors import ConstantsUnavailable, DepthOverflow

NODE_CAP = 10_000_000
CHUNK = 512
V_DEPTH = 6


@dataclass
class SubActionTable:
    xs: np.ndarray
    psi: np.ndarray
    depth: int
    beta: float
    achieved: np.ndarray
    space: str
    map: MapSpec
    lip_phi: float
    phi_c_below_beta: bool
    nodes: int = 0

    @property
    def lip_observed(self) -> float:
        return observed_lip(self.xs, self.psi, self.space)

    def histogram(self) -> dict:
        """How many grid points attained their sup at each depth."""
        vals, counts = np.unique(self.achieved, return_counts=True)
        return {int(v): int(c) for v, c in zip(vals, counts)}

    def __call__(self, x):
        """psi at arbitrary points by linear interpolation (periodic on the circle)."""
        x = np.asarray(x, dtype=float)
        if self.space == "circle":
            return np.interp(np.mod(x, 1.0), self.xs, self.psi, period=1.0)
        return np.interp(x, self.xs, self.psi)

    def to_csv_rows(self):
        yield ("x", "psi", "achieved_depth")
        for x, v, n in zip(self.xs.tolist(), self.psi.tolist(), self.achieved.tolist()):
            yield (f"{x:.12g}", f"{v:.12g}", int(n))

    def to_json(self) -> dict:
        return {
            "depth": self.depth,
            "beta": self.beta,
            "grid_n": int(self.xs.size),
            "lip_observed": self.lip_observed,
            "phi_c_below_beta": self.phi_c_below_beta,
            "achieved_depths": self.histogram(),
            "nodes": self.nodes,
        }


def observed_lip(xs, vals, space: str) -> float:
    if xs.size < 2:
        return 0.0
    dv = np.abs(np.diff(vals))
    dx = np.diff(xs)
    if space == "circle":
        dv = np.append(dv, abs(vals[0] - vals[-1]))
        dx = np.append(dx, 1.0 - xs[-1] + xs[0])
    return float(np.max(dv / dx))


def subaction_grid(m: MapSpec, grid_n: int) -> np.ndarray:
    if m.space == "circle":
        return np.arange(grid_n) / grid_n
    lo, hi = float(m.domain[0]), float(m.domain[1])
    return np.linspace(lo, hi, grid_n)


def _children(m: MapSpec, idx, ys, vals, phi, beta):
    pre = dynamics.preimages_array(m, ys)
    k = pre.shape[1]
    z = pre.ravel()
    parent = np.repeat(idx, k)
    v = np.repeat(vals, k)
    ok = ~np.isnan(z)
    z, parent, v = z[ok], parent[ok], v[ok]
    return parent, z, v + (np.asarray(phi(z), dtype=float) - beta)


def _greedy_seed(m, phi, beta, xs, N):
    """Follow the preimage with the largest phi value; a cheap lower bound."""
    best = np.full(xs.size, -np.inf)
    achieved = np.zeros(xs.size, dtype=np.int64)
    ys = xs.copy()
    vals = np.zeros(xs.size)
    live = np.ones(xs.size, dtype=bool)
    for n in range(1, N + 1):
        pre = dynamics.preimages_array(m, ys)
        ph = np.where(np.isnan(pre), -np.inf, np.asarray(phi(np.nan_to_num(pre)), dtype=float) * np.ones(pre.shape))
        j = np.argmax(ph, axis=1)
        rows = np.arange(xs.size)
        step = ph[rows, j]
        live &= np.isfinite(step)
        vals = np.where(live, vals + step - beta, -np.inf)
        ys = np.where(live, pre[rows, j], ys)
        better = vals > best
        best[better] = vals[better]
        achieved[better] = n
    return best, achieved


def _search_chunk(m, phi, beta, xs, N, gain, prune, budget):
    best, achieved = _greedy_seed(m, phi, beta, xs, N) if prune else (
        np.full(xs.size, -np.inf), np.zeros(xs.size, dtype=np.int64))
    idx = np.arange(xs.size)
    ys = xs.copy()
    vals = np.zeros(xs.size)
    nodes = 0
    for n in range(1, N + 1):
        idx, ys, vals = _children(m, idx, ys, vals, phi, beta)
        nodes += idx.size
        if nodes > budget:
            raise DepthOverflow(f"preimage search exceeded the node cap at depth {n}")
        level = np.full(xs.size, -np.inf)
        np.maximum.at(level, idx, vals)
        better = level > best
        best[better] = level[better]
        achieved[better] = n
        if n == N:
            break
        if prune:
            keep = vals + (N - n) * gain > best[idx]
            idx, ys, vals = idx[keep], ys[keep], vals[keep]
        if idx.size == 0:
            break
    return best, achieved, nodes


def subaction_candidate(m: MapSpec, phi, beta: float, N: int, grid_n: int, node_cap: int = NODE_CAP,
                        prune: bool = True, xs=None) -> SubActionTable:
    """Tabulate psi_N on a uniform grid (``xs`` overrides the grid).

    ``node_cap`` bounds the total number of tree nodes expanded; beyond it
    DepthOverflow is raised.  ``prune=False`` runs the exhaustive search.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    xs = subaction_grid(m, grid_n) if xs is None else np.asarray(xs, dtype=float)
    gain = max(0.0, phi.sup_bound() - beta) if prune else math.inf
    psi = np.empty(xs.size)
    achieved = np.empty(xs.size, dtype=np.int64)
    nodes = 0
    for start in range(0, xs.size, CHUNK):
        sl = slice(start, start + CHUNK)
        b, a, k = _search_chunk(m, phi, beta, xs[sl], N, gain, prune, node_cap - nodes)
        psi[sl], achieved[sl] = b, a
        nodes += k
    c = float(m.turning)
    return SubActionTable(xs, psi, N, beta, achieved, m.space, m, float(phi.lip_estimate),
                          bool(phi(c) < beta), nodes)


def increments(m: MapSpec, phi, beta: float, depths, grid_n: int) -> list:
    """max_x (psi_{N+1} - psi_N)(x) for consecutive N in ``depths``; a
    stabilization record (values near 0) or a non-stabilization witness."""
    tables = [subaction_candidate(m, phi, beta, n, grid_n) for n in depths]
    return [float(np.max(b.psi - a.psi)) for a, b in zip(tables, tables[1:])]


# -- verification -----------------------------------------------------------


@dataclass
class ViolationReport:
    xs: np.ndarray
    slack: np.ndarray
    tol: float
    c_slack: float
    v_interval: tuple
    v_avoided: bool

    @property
    def max_slack(self) -> float:
        return float(self.slack[0]) if self.slack.size else -math.inf

    @property
    def z_flags(self) -> np.ndarray:
        return np.abs(self.slack) <= self.tol

    @property
    def contact_points(self) -> np.ndarray:
        return self.xs[self.z_flags]

    @property
    def c_excluded(self) -> bool:
        return abs(self.c_slack) > self.tol

    @property
    def passed(self) -> bool:
        return self.max_slack <= self.tol

    def worst(self, k: int = 10) -> list:
        return list(zip(self.xs[:k].tolist(), self.slack[:k].tolist()))

    def to_json(self) -> dict:
        return {
            "pass": self.passed,
            "max_slack": self.max_slack,
            "tol": self.tol,
            "worst": self.worst(),
            "contact_count": int(self.z_flags.sum()),
            "c_slack": self.c_slack,
            "c_excluded": self.c_excluded,
            "v_interval": [float(self.v_interval[0]), float(self.v_interval[1])],
            "v_avoided": self.v_avoided,
        }


def v_interval(m: MapSpec, depth: int = V_DEPTH):
    """The gap around c between its nearest left and right points of T^{-depth} c."""
    c = float(m.turning)
    level = np.array([c])
    for _ in range(depth):
        pre = dynamics.preimages_array(m, level)
        level = pre[~np.isnan(pre)]
    if m.space == "circle":
        d = np.mod(level - c, 1.0)
        d = d[(d > 1e-12) & (d < 1 - 1e-12)]
        return c - (1.0 - d.max()), c + d.min()
    left = level[level < c - 1e-12]
    right = level[level > c + 1e-12]
    lo = left.max() if left.size else float(m.domain[0])
    hi = right.min() if right.size else float(m.domain[1])
    return lo, hi


def verify_subaction(m: MapSpec, phi, beta: float, table: SubActionTable, tol: float = 1e-3,
                     v_depth: int = V_DEPTH) -> ViolationReport:
    """slack(x) = phi(x) - beta - psi(T x) + psi(x) at every grid point, with
    psi(T x) interpolated from the table.  Sorted by slack, largest first."""
    xs = table.xs
    slack = np.asarray(phi(xs), dtype=float) - beta - table(dynamics.step_array(m, xs)) + table.psi
    order = np.argsort(-slack, kind="stable")
    c = float(m.turning)
    c_slack = float(phi(c) - beta - table(dynamics.step_array(m, np.array([c])))[0] + table(np.array([c]))[0])
    lo, hi = v_interval(m, v_depth)
    if m.space == "circle":
        off = np.mod(xs - c + 0.5, 1.0) - 0.5
        inside = (off > lo - c) & (off < hi - c)
    else:
        inside = (xs > lo) & (xs < hi)
    avoided = not bool(np.any(inside & (np.abs(slack) <= tol)))
    return ViolationReport(xs[order], slack[order], tol, c_slack, (lo, hi), avoided)


# -- Lipschitz profile ------------------------------------------------------


@dataclass
class LipProfile:
    lip_observed: float
    claim_bound: float | None

    @property
    def available(self) -> bool:
        return self.claim_bound is not None

    @property
    def passed(self) -> bool | None:
        return None if self.claim_bound is None else self.lip_observed <= self.claim_bound

    def to_json(self) -> dict:
        return {"lip_observed": self.lip_observed, "claim_bound": self.claim_bound, "pass": self.passed}


def lipschitz_profile(table: SubActionTable, require_bound: bool = False) -> LipProfile:
    """Observed Lipschitz constant of the table and, for uniformly expanding
    maps, the bound L_* (1 + 1/(1 - lambda)) with lambda = 1/min|T'|.

    Without computable constants the bound is None, or ConstantsUnavailable
    is raised when ``require_bound`` is set.
    """
    m = table.map
    bound = None
    if m.uniformly_expanding:
        lam = 1.0 / float(m.min_expansion)
        bound = table.lip_phi * (1.0 + 1.0 / (1.0 - lam))
    elif require_bound:
        raise ConstantsUnavailable(f"no certified expansion constants for {m}")
    return LipProfile(table.lip_observed, bound)
