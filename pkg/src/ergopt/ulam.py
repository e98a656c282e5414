"""Ulam discretization of a map and maximum mean cycles on the cell graph."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dynamics
from .dynamics import MapSpec
from .errors import NoCycle


@dataclass(frozen=True, eq=False)
class UlamGraph:
    n_cells: int
    lo: float
    hi: float
    src: np.ndarray
    dst: np.ndarray
    weights: np.ndarray

    @classmethod
    def from_edges(cls, n: int, edges, weights, lo=0.0, hi=1.0) -> "UlamGraph":
        edges = sorted(set((int(u), int(v)) for u, v in edges))
        src = np.array([u for u, _ in edges], dtype=np.int64)
        dst = np.array([v for _, v in edges], dtype=np.int64)
        return cls(n, float(lo), float(hi), src, dst, np.asarray(weights, dtype=float))

    @property
    def boundaries(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n_cells + 1)

    @property
    def midpoints(self) -> np.ndarray:
        h = (self.hi - self.lo) / self.n_cells
        return self.lo + (np.arange(self.n_cells) + 0.5) * h

    def edge_set(self) -> set:
        return set(zip(self.src.tolist(), self.dst.tolist()))

    def successors(self, i: int) -> list:
        return self.dst[self.src == i].tolist()

    def out_degree(self) -> np.ndarray:
        return np.bincount(self.src, minlength=self.n_cells)


def _cell_range(u, v, lo, h, n):
    """Indices j whose open cell (lo + j h, lo + (j+1) h) meets the open interval (u, v)."""
    if u == v:
        j = min(n - 1, int(math.floor((u - lo) / h)))
        return j, j
    j0 = int(math.floor((u - lo) / h))
    j1 = int(math.ceil((v - lo) / h)) - 1
    return j0, j1


def build_ulam(m: MapSpec, phi, n_cells: int) -> UlamGraph:
    """Cells are a uniform partition of the domain; i -> j when the image of
    cell i overlaps cell j in an interval of positive length.

    Exact maps are handled in rational arithmetic so that image endpoints
    landing on cell boundaries are classified without rounding.
    """
    if n_cells < 2:
        raise ValueError("n_cells must be >= 2")
    lo, hi = m.domain
    n = n_cells
    exact = m.exact
    h = (hi - lo) / n if exact else float(hi - lo) / n
    if not exact:
        lo, hi = float(lo), float(hi)
    src, dst = [], []
    for i in range(n):
        a, b = lo + i * h, lo + (i + 1) * h
        if m.space == "circle":
            u, v = dynamics.lift(m, a), dynamics.lift(m, b)
            if v - u >= 1:
                js = range(n)
            else:
                j0, j1 = _cell_range(u, v, 0, h, n)
                js = [j % n for j in range(j0, j1 + 1)]
        else:
            u, v = dynamics.interval_image(m, a, b)
            j0, j1 = _cell_range(u, v, lo, h, n)
            js = range(max(j0, 0), min(j1, n - 1) + 1)
        for j in js:
            src.append(i)
            dst.append(j)
    src = np.array(src, dtype=np.int64)
    dst = np.array(dst, dtype=np.int64)
    lo_f, hi_f = float(m.domain[0]), float(m.domain[1])
    hf = (hi_f - lo_f) / n
    mids = lo_f + (np.arange(n) + 0.5) * hf
    w = np.asarray(phi(mids), dtype=float) * np.ones(n)
    return UlamGraph(n, lo_f, hi_f, src, dst, w)


# -- Karp ------------------------------------------------------------------


class _Stepper:
    """One step of the walk DP: D'(v) = max over edges u->v of D(u) + w(u)."""

    def __init__(self, g: UlamGraph):
        n = g.n_cells
        self.n = n
        self.w = g.weights
        indeg = np.bincount(g.dst, minlength=n)
        order = np.argsort(g.dst, kind="stable")
        src, dst = g.src[order], g.dst[order]
        first = np.concatenate(([0], np.cumsum(indeg)[:-1]))
        slot = np.arange(dst.size) - first[dst]
        # vertices by decreasing in-degree, so that column j of the padded
        # predecessor table only involves a prefix of them
        self.verts = np.argsort(-indeg, kind="stable")
        rank = np.empty(n, dtype=np.int64)
        rank[self.verts] = np.arange(n)
        self.cols = []
        j = 0
        top = int(indeg.max(initial=0))
        while j < top and (j == 0 or np.count_nonzero(indeg > j) >= 32):
            sel = slot == j
            col = np.empty(int(np.count_nonzero(indeg > j)), dtype=np.int64)
            col[rank[dst[sel]]] = src[sel]
            self.cols.append(col)
            j += 1
        self.active = self.verts[: len(self.cols[0])] if self.cols else self.verts[:0]
        # the few high in-degree vertices left over are reduced segment-wise
        tail = slot >= j
        self.tail_src = src[tail]
        self.tail_targets, self.tail_starts = np.unique(dst[tail], return_index=True)

    def __call__(self, D: np.ndarray) -> np.ndarray:
        out = np.full(self.n, -np.inf)
        if not self.cols:
            return out
        E = D + self.w
        buf = E[self.cols[0]]
        for col in self.cols[1:]:
            head = buf[: col.size]
            np.maximum(head, E[col], out=head)
        out[self.active] = buf
        if self.tail_src.size:
            t = self.tail_targets
            out[t] = np.maximum(out[t], np.maximum.reduceat(E[self.tail_src], self.tail_starts))
        return out


def max_mean_cycle(g: UlamGraph):
    """Maximum cycle mean (vertex weights, counted at the source of each edge)
    and a cycle attaining it, via Karp's characterization

        lambda* = max_v min_k (D_n(v) - D_k(v)) / (n - k)

    with D_k(v) the best weight of a length-k walk ending at v.  D is kept in
    O(n) memory per level, with sqrt(n) checkpoints for the witness walk.
    """
    n = g.n_cells
    if g.src.size == 0:
        raise NoCycle("graph has no edges")
    step = _Stepper(g)
    stride = max(1, int(math.isqrt(n)))
    checkpoints = {}
    D = np.zeros(n)
    for k in range(n):
        if k % stride == 0:
            checkpoints[k] = D
        D = step(D)
    Dn = D
    alive = np.isfinite(Dn)
    if not alive.any():
        raise NoCycle("graph is acyclic")
    worst = np.full(n, np.inf)
    D = np.zeros(n)
    with np.errstate(invalid="ignore"):
        for k in range(n):
            ratio = (Dn - D) / (n - k)
            ratio = np.where(np.isfinite(D), ratio, np.inf)
            np.minimum(worst, ratio, out=worst)
            D = step(D)
    worst = np.where(alive, worst, -np.inf)
    v = int(np.argmax(worst))
    value = float(worst[v])
    cycle = _witness(g, step, checkpoints, stride, n, v)
    return value, cycle


def _witness(g, step, checkpoints, stride, n, v):
    """Walk the optimal length-n path backwards from v until a vertex repeats."""
    in_edges = {}
    for u, t in zip(g.src.tolist(), g.dst.tolist()):
        in_edges.setdefault(t, []).append(u)
    seen = {v: n}
    path = [v]
    level = n
    cache = {}
    while True:
        k = level - 1
        base = (k // stride) * stride
        if base not in cache:
            cache.clear()
            rows = [checkpoints[base]]
            for _ in range(base, min(base + stride, n) - 1):
                rows.append(step(rows[-1]))
            cache[base] = rows
        Dk = cache[base][k - base]
        preds = in_edges[v]
        u = max(preds, key=lambda p: (Dk[p] + g.weights[p], -p))
        level = k
        v = u
        if v in seen:
            start = path.index(v)
            loop = path[start:]
            loop.reverse()
            i = loop.index(min(loop))
            return loop[i:] + loop[:i]
        seen[v] = level
        path.append(v)


def cycle_mean(g: UlamGraph, cycle) -> float:
    return float(np.mean(g.weights[list(cycle)]))
