"""Desk-scale experiments: locking of maximizing orbits under perturbation,
parameter sweeps over the tent and quadratic families, and the scaling of
gamma with the Lipschitz constant.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from fractions import Fraction

import numpy as np

from . import dynamics
from .dynamics import MapSpec, parse_map
from .errors import BaseNotMaximized, ErgoptError
from .observables import observable_for
from .optimize import TIE_RTOL, best_orbit, beta_periodic, gamma_estimate
from .orbits import PeriodicOrbit, enumerate_periodic_orbits

FOURIER_TERMS = 5

# (map, phi) pairs on which the orbit and cell-graph routes to beta are compared
BETA_PAIRS = (
    ("doubling", "cos(2*pi*x)"),
    ("doubling", "-cos(2*pi*x)"),
    ("doubling", "-dist(x, [0.3333333333333333, 0.6666666666666666])"),
    ("doubling", "sin(2*pi*x)"),
    ("doubling", "cos(2*pi*(x-0.5)) + 0.1*sin(2*pi*x)"),
    ("tent:a=2", "cos(pi*x)"),
    ("tent:a=2", "-dist(x, [0.8, 1.6])"),
    ("tent:a=2", "x*(2-x)"),
    ("tent:a=1.8", "x"),
    ("quad:a=4", "x"),
    ("quad:a=4", "sin(2*pi*x)"),
    ("quad:a=3.9", "x"),
)


def fmt(v) -> str:
    """Floats with 12 significant digits; everything else via str."""
    if isinstance(v, (float, np.floating, Fraction)):
        return f"{float(v) + 0.0:.12g}"
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


# -- configuration -----------------------------------------------------------


@dataclass
class ExperimentConfig:
    map: str = "doubling"
    phi: list = field(default_factory=list)
    max_period: int = 10
    cells: int = 4096
    depth: int = 14
    grid: int = 4096
    eps: float = 0.1
    delta: float | None = None
    trials: int = 200
    seed: int = 0
    out: str | None = None
    format: str = "json"
    threads: int = 1
    a_values: list = field(default_factory=list)
    family: str = "tent"
    m: int = 4
    t_values: list = field(default_factory=lambda: [0.5, 1.0, 2.0, 4.0])
    tol: float = 1e-3
    c_star: float | None = None
    k_points: list = field(default_factory=list)
    z: list = field(default_factory=list)
    orbit: list = field(default_factory=list)

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be > 0")
        if self.delta is not None and self.delta < 0:
            raise ValueError("delta must be >= 0")

    @property
    def map_spec(self) -> MapSpec:
        return parse_map(self.map)


def _coerce(name: str, raw: str):
    kinds = {f.name: f.type for f in fields(ExperimentConfig)}
    t = kinds[name]
    if name in ("a_values", "k_points", "z", "orbit"):
        return [s.strip() for s in raw.split(",") if s.strip()]
    if name == "t_values":
        return [float(s) for s in raw.split(",") if s.strip()]
    if name == "phi":
        return [raw]
    if "int" in str(t):
        return int(raw)
    if "float" in str(t):
        return float(raw)
    return raw


def parse_config_text(text: str) -> dict:
    """key=value lines; '#' starts a comment; repeated phi keys accumulate."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise ValueError(f"config line {lineno}: expected key=value")
        key = key.strip().replace("-", "_")
        if key not in {f.name for f in fields(ExperimentConfig)}:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        val = _coerce(key, value.strip())
        if key == "phi":
            out.setdefault("phi", []).extend(val)
        else:
            out[key] = val
    return out


def load_config(path: str | None = None, **overrides) -> ExperimentConfig:
    values = {}
    if path:
        with open(path, encoding="utf-8") as fh:
            values.update(parse_config_text(fh.read()))
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


def _pool_map(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# -- domination constant -------------------------------------------------------


def domination_constant(m: MapSpec, orbit: PeriodicOrbit):
    """C = 1 + p D / delta with Delta half the smallest gap between orbit points,
    delta = Delta / Lambda^(p-1) (Lambda = sup|T'|) and D the orbit diameter.
    Exact when the orbit and the map are."""
    p = orbit.period
    if p == 1:
        return 1
    pts = orbit.points
    gap = min(dynamics.distance(orbit.space, u, v) for i, u in enumerate(pts) for v in pts[i + 1 :])
    Delta = gap / 2
    Lam = m.expansion_bound
    delta = Delta / Lam ** (p - 1)
    return 1 + p * orbit.diameter / delta


def domination_spot_check(m: MapSpec, orbit: PeriodicOrbit, C, n_points: int = 1000, seed: int = 0) -> dict:
    """For random x: min over y in the orbit of sum_{k<p} d(T^k x, T^k y)
    against C * sum_{k<p} d(T^k x, orbit)."""
    rng = np.random.default_rng(seed)
    lo, hi = float(m.domain[0]), float(m.domain[1])
    xs = lo + (hi - lo) * rng.random(n_points)
    p = orbit.period
    pts = orbit.floats()
    # shadowing cost against each starting point of the orbit
    shadow = np.zeros((p, n_points))
    to_orbit = np.zeros(n_points)
    x = xs.copy()
    for k in range(p):
        for j in range(p):
            shadow[j] += dynamics.distance_array(m.space, x, pts[(j + k) % p])
        to_orbit += np.min([dynamics.distance_array(m.space, x, y) for y in pts], axis=0)
        x = dynamics.step_array(m, x)
    lhs = shadow.min(axis=0)
    rhs = float(C) * to_orbit
    ok = lhs <= rhs + 1e-12
    return {"points": n_points, "violations": int((~ok).sum()), "pass": bool(ok.all()),
            "max_ratio": float(np.max(np.where(to_orbit > 0, lhs / np.maximum(rhs, 1e-300), 0.0)))}


# -- locking -------------------------------------------------------------------


@dataclass
class TrialRecord:
    trial: int
    lip: float
    certified: bool
    argmax: str
    margin: float
    kept: bool


@dataclass
class LockingReport:
    base: str
    orbit: PeriodicOrbit
    C: object
    eps: float
    delta: float
    trials: list

    @property
    def threshold(self) -> float:
        return self.eps / float(self.C)

    @property
    def certified(self) -> list:
        return [t for t in self.trials if t.certified]

    @property
    def pass_fraction(self) -> float:
        cert = self.certified
        return sum(t.kept for t in cert) / len(cert) if cert else 1.0

    @property
    def passed(self) -> bool:
        return all(t.kept for t in self.certified)

    def csv_rows(self):
        yield ("trial", "lip_psi", "certified", "argmax", "margin", "kept")
        for t in self.trials:
            yield (t.trial, fmt(t.lip), fmt(t.certified), t.argmax, fmt(t.margin), fmt(t.kept))

    def to_json(self) -> dict:
        return {
            "base": self.base,
            "orbit": self.orbit.to_json(),
            "C": fmt(self.C),
            "eps": self.eps,
            "delta": self.delta,
            "threshold": fmt(self.threshold),
            "trials": len(self.trials),
            "certified": len(self.certified),
            "pass_fraction": self.pass_fraction,
            "pass": self.passed,
            "records": [
                {"trial": t.trial, "lip": fmt(t.lip), "certified": t.certified, "argmax": t.argmax,
                 "margin": fmt(t.margin), "kept": t.kept}
                for t in self.trials
            ],
        }


def fourier_perturbation(rng: np.random.Generator, lip: float, period: float = 1.0, terms: int = FOURIER_TERMS):
    """Source text for sum_k c_k cos(2 pi k x / L) + s_k sin(2 pi k x / L), scaled
    so the compositional Lipschitz bound equals ``lip``."""
    c = rng.normal(size=terms)
    s = rng.normal(size=terms)
    k = np.arange(1, terms + 1)
    w = 2 * math.pi / period
    raw = w * float(np.sum(k * (np.abs(c) + np.abs(s))))
    scale = lip / raw if raw > 0 else 0.0
    parts = []
    for kk, ck, sk in zip(k.tolist(), (c * scale).tolist(), (s * scale).tolist()):
        arg = f"2*pi*{kk}*x" if period == 1 else f"2*pi*{kk}*x*{1 / period!r}"
        parts.append(f"{ck!r}*cos({arg}) + {sk!r}*sin({arg})")
    return " + ".join(parts)


def _margin(orbits, phi, target: int):
    _, avgs = best_orbit(orbits, phi)
    others = np.delete(avgs, target)
    return float(others.max() - avgs[target]) if others.size else -math.inf, avgs


def _find_orbit(m: MapSpec, orbits, points) -> int:
    """Index of the enumerated orbit with exactly these points (to 1e-9)."""
    want = sorted(float(Fraction(v)) for v in points)
    for i, o in enumerate(orbits):
        have = sorted(o.floats().tolist())
        if len(have) == len(want) and all(dynamics.distance(m.space, u, v) <= 1e-9 for u, v in zip(have, want)):
            return i
    raise ValueError(f"no enumerated orbit with points {points}")


def locking_experiment(cfg: ExperimentConfig) -> LockingReport:
    """phi' = phi - eps dist(., O) + psi stays maximized by O when lip(psi) < eps / C."""
    m = cfg.map_spec
    if not cfg.phi:
        raise ValueError("locking needs a base observable")
    base_src = cfg.phi[0]
    phi = observable_for(m, base_src)
    orbits = enumerate_periodic_orbits(m, cfg.max_period)
    idx, avgs = best_orbit(orbits, phi)
    if cfg.orbit:
        idx = _find_orbit(m, orbits, cfg.orbit)
    orbit = orbits[idx]
    margin, _ = _margin(orbits, phi, idx)
    if margin > TIE_RTOL * max(1.0, abs(float(avgs[idx]))):
        raise BaseNotMaximized(f"{base_src!r} is not maximized by {orbit.itinerary}: another orbit "
                               f"beats it by {margin:.3g}")
    C = domination_constant(m, orbit)
    delta = cfg.eps / (2 * float(C)) if cfg.delta is None else cfg.delta
    perturbed_base = f"{base_src} - {cfg.eps!r}*dist(x, {orbit.literal()})"
    period = float(m.domain[1] - m.domain[0])
    threshold = cfg.eps / float(C)

    def trial(t: int) -> TrialRecord:
        rng = np.random.default_rng([cfg.seed, t])
        target = float(rng.uniform(0.0, delta))
        psi_src = fourier_perturbation(rng, target, period)
        lip = observable_for(m, psi_src).lip_estimate
        phi_t = observable_for(m, f"{perturbed_base} + ({psi_src})")
        j, _ = best_orbit(orbits, phi_t)
        mg, _ = _margin(orbits, phi_t, idx)
        return TrialRecord(t, lip, lip < threshold, orbits[j].itinerary, mg, j == idx and mg < 0)

    records = _pool_map(trial, range(cfg.trials), cfg.threads)
    return LockingReport(base_src, orbit, C, cfg.eps, delta, records)


# -- TPO sweep -----------------------------------------------------------------

SWEEP_COLUMNS = ("a", "phi_index", "phi", "argmax", "period", "beta", "runner_up", "gap", "threshold",
                 "locked", "error")


def _sweep_cell(family: str, a, phi_index: int, src: str, eps: float, max_period: int) -> dict:
    row = dict.fromkeys(SWEEP_COLUMNS, "")
    row.update(a=str(a), phi_index=phi_index, phi=src)
    try:
        m = parse_map(f"{family}:a={a}")
        phi = observable_for(m, src)
        orbits = enumerate_periodic_orbits(m, max_period)
        i0, _ = best_orbit(orbits, phi)
        star = orbits[i0]
        locked_phi = observable_for(m, f"{src} - {eps!r}*dist(x, {star.literal()})")
        i, avgs = best_orbit(orbits, locked_phi)
        gap, _ = _margin(orbits, locked_phi, i)
        gap = -gap
        near = [dynamics.distance(m.space, float(v), float(w)) for o in orbits if o is not star
                for v in o.points for w in star.points]
        near = [d for d in near if d > 1e-12]
        threshold = eps * min(near) if near else 0.0
        row.update(argmax=orbits[i].itinerary, period=orbits[i].period, beta=fmt(float(avgs[i])),
                   runner_up=fmt(float(avgs[i] - gap)), gap=fmt(gap), threshold=fmt(threshold),
                   locked=fmt(gap > threshold))
    except (ErgoptError, ValueError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def tpo_sweep(family: str, a_values, phi_bank, eps: float, max_period: int, threads: int = 1) -> list:
    """One row per (a, phi): the argmax orbit of phi - eps dist(., O*) where O*
    maximizes phi, its average, and the gap to the runner-up orbit.  A cell
    counts as locked when the gap exceeds eps times the smallest positive
    distance from another enumerated orbit point to O*."""
    family = {"quadratic": "quad", "Tent": "tent", "Quadratic": "quad"}.get(family, family)
    cells = [(a, i, src) for a in a_values for i, src in enumerate(phi_bank)]
    return _pool_map(lambda c: _sweep_cell(family, c[0], c[1], c[2], eps, max_period), cells, threads)


def sweep_summary(rows) -> dict:
    good = [r for r in rows if not r["error"]]
    locked = sum(r["locked"] == "true" for r in good)
    return {"cells": len(rows), "errors": len(rows) - len(good),
            "locked_fraction": locked / len(good) if good else 0.0}


# -- gamma scaling -------------------------------------------------------------


def linear_gamma_ratio_bound(m: MapSpec):
    """Bound on gamma / lip for linear covers: a sub-action with Lipschitz
    constant lip * lambda / (1 - lambda), lambda = 1/d, changes by at most
    that times the circle diameter 1/2."""
    if not m.linear_cover:
        return None
    lam = 1.0 / m.d
    return 0.5 * lam / (1.0 - lam)


def gamma_scaling(m: MapSpec, src: str, t_values, depth: int, grid_n: int, max_period: int = 12) -> dict:
    """gamma_estimate(t phi) for each t; homogeneous when gamma/t agrees to 1%."""
    rows = []
    for t in t_values:
        phi = observable_for(m, f"{t!r}*({src})")
        beta, _ = beta_periodic(m, phi, max_period)
        g = gamma_estimate(m, phi, beta, depth, grid_n)
        rows.append({"t": t, "gamma": g, "lip": phi.lip_estimate, "gamma_over_t": g / t,
                     "ratio": g / phi.lip_estimate if phi.lip_estimate else 0.0})
    per_t = [r["gamma_over_t"] for r in rows]
    ref = max(abs(v) for v in per_t) if per_t else 0.0
    homogeneous = ref == 0 or (max(per_t) - min(per_t)) <= 0.01 * ref
    return {"phi": src, "rows": rows, "homogeneous": homogeneous,
            "max_ratio": max((r["ratio"] for r in rows), default=0.0)}


def gamma_bank(m: MapSpec, bank, t_values, depth: int, grid_n: int, max_period: int = 12,
               threads: int = 1) -> dict:
    results = _pool_map(lambda s: gamma_scaling(m, s, t_values, depth, grid_n, max_period), bank, threads)
    bound = linear_gamma_ratio_bound(m)
    max_ratio = max((r["max_ratio"] for r in results), default=0.0)
    bounded = math.isfinite(max_ratio) and (bound is None or max_ratio <= bound + 1e-9)
    return {"results": results, "max_ratio": max_ratio, "ratio_bound": bound,
            "pass": bounded and all(r["homogeneous"] for r in results)}
