"""One-dimensional map families: forward and inverse dynamics, Birkhoff sums,
and detection of the renormalization core of unimodal maps.

Four kinds are supported:

* ``tent``      T(x) = a(1 - |x - 1|) on [0, 2], turning point 1
* ``quad``      Q(x) = a x (1 - x) on [0, 1], turning point 1/2
* ``doubling``  x -> 2x mod 1 on the circle R/Z
* ``cover``     x -> x + (d - 1) x^(1 + alpha) mod 1, a degree-d circle cover
                with an indifferent fixed point at 0 when alpha > 0

Points are plain numbers.  When the map and the point are both rational
(``int``/``Fraction``) the piecewise-linear kinds compute exactly; everything
else runs in double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

import numpy as np

from .errors import DomainError, NotDifferentiable, NotFound

UNIMODAL = ("tent", "quad")
CIRCLE = ("doubling", "cover")

ROOT_TOL = 1e-10
EQ_TOL = 1e-9
NEWTON_MAX_ITER = 80


def is_rational(v) -> bool:
    return isinstance(v, Rational) and not isinstance(v, bool)


@dataclass(frozen=True)
class MapSpec:
    kind: str
    a: object = None
    d: int = 2
    alpha: object = 0

    def __post_init__(self):
        for name in ("a", "alpha"):
            v = getattr(self, name)
            if is_rational(v) and not isinstance(v, Fraction):
                object.__setattr__(self, name, Fraction(v))
        if self.kind == "tent":
            if not 1 < self.a <= 2:
                raise ValueError(f"tent slope must lie in (1, 2], got {self.a}")
        elif self.kind == "quad":
            if not 0 < self.a <= 4:
                raise ValueError(f"quadratic parameter must lie in (0, 4], got {self.a}")
        elif self.kind == "doubling":
            object.__setattr__(self, "d", 2)
            object.__setattr__(self, "alpha", 0)
        elif self.kind == "cover":
            if int(self.d) != self.d or self.d < 2:
                raise ValueError(f"cover degree must be an integer >= 2, got {self.d}")
            if self.alpha < 0:
                raise ValueError(f"stickiness exponent must be >= 0, got {self.alpha}")
        else:
            raise ValueError(f"unknown map kind {self.kind!r}")

    # -- descriptive properties -------------------------------------------

    @property
    def space(self) -> str:
        return "circle" if self.kind in CIRCLE else "interval"

    @property
    def unimodal(self) -> bool:
        return self.kind in UNIMODAL

    @property
    def domain(self):
        if self.kind == "tent":
            return Fraction(0), Fraction(2)
        return Fraction(0), Fraction(1)

    @property
    def turning(self):
        """Turning point for unimodal kinds, the marked fixed point 0 for covers."""
        if self.kind == "tent":
            return Fraction(1)
        if self.kind == "quad":
            return Fraction(1, 2)
        return Fraction(0)

    @property
    def linear_cover(self) -> bool:
        return self.kind == "doubling" or (self.kind == "cover" and self.alpha == 0)

    @property
    def exact(self) -> bool:
        """True when rational inputs are mapped to rational outputs exactly."""
        if self.kind == "tent":
            return is_rational(self.a)
        return self.linear_cover

    @property
    def n_branches(self) -> int:
        return 2 if self.unimodal else int(self.d)

    @property
    def symbols(self) -> str:
        if self.unimodal:
            return "LR"
        return "0123456789abcdefghijklmnopqrstuvwxyz"[: self.n_branches]

    @property
    def expansion_bound(self):
        """sup |T'|, i.e. the Lipschitz constant of T."""
        if self.kind in ("tent", "quad"):
            return self.a
        if self.linear_cover:
            return self.d
        return 1 + (self.d - 1) * (1 + float(self.alpha))

    @property
    def min_expansion(self):
        """inf |T'| over points of differentiability (0 for the quadratic)."""
        if self.kind == "tent":
            return self.a
        if self.kind == "quad":
            return 0
        if self.linear_cover:
            return self.d
        return 1

    @property
    def uniformly_expanding(self) -> bool:
        return self.kind == "tent" or self.linear_cover

    def descriptor(self) -> str:
        if self.kind == "doubling":
            return "doubling"
        if self.kind == "cover":
            return f"cover:d={self.d},alpha={_fmt_param(self.alpha)}"
        return f"{self.kind}:a={_fmt_param(self.a)}"

    def __str__(self):
        return self.descriptor()


def _fmt_param(v) -> str:
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return str(v.numerator)
        return str(float(v)) if Fraction(str(float(v))) == v else f"{v.numerator}/{v.denominator}"
    return repr(v)


def tent(a) -> MapSpec:
    return MapSpec("tent", a=a)


def quadratic(a) -> MapSpec:
    return MapSpec("quad", a=a)


def doubling() -> MapSpec:
    return MapSpec("doubling")


def circle_cover(d: int = 2, alpha=0) -> MapSpec:
    return MapSpec("cover", d=int(d), alpha=alpha)


def _parse_number(text: str):
    text = text.strip()
    try:
        return Fraction(text)
    except ValueError:
        return float(text)


def parse_map(descriptor: str) -> MapSpec:
    """Build a MapSpec from ``tent:a=2``, ``quad:a=3.9``, ``doubling`` or
    ``cover:d=2,alpha=0.5``.  Decimal literals are read as exact rationals."""
    kind, _, rest = descriptor.strip().partition(":")
    kind = kind.strip().lower()
    params = {}
    if rest.strip():
        for item in rest.split(","):
            key, eq, value = item.partition("=")
            if not eq:
                raise ValueError(f"malformed map parameter {item!r} in {descriptor!r}")
            params[key.strip().lower()] = _parse_number(value)
    aliases = {"quadratic": "quad", "logistic": "quad", "circle": "cover"}
    kind = aliases.get(kind, kind)
    if kind in UNIMODAL:
        if "a" not in params:
            raise ValueError(f"{kind} map needs a parameter a: {descriptor!r}")
        return MapSpec(kind, a=params["a"])
    if kind == "doubling":
        return doubling()
    if kind == "cover":
        return circle_cover(int(params.get("d", 2)), params.get("alpha", Fraction(0)))
    raise ValueError(f"unknown map kind in descriptor {descriptor!r}")


# -- metric ----------------------------------------------------------------


def circle_dist(x, y):
    t = abs(x - y) % 1
    return min(t, 1 - t)


def distance(space: str, x, y):
    if space == "circle":
        return circle_dist(x, y)
    return abs(x - y)


def distance_array(space: str, x, y):
    t = np.abs(np.asarray(x, dtype=float) - y)
    if space == "circle":
        t = np.mod(t, 1.0)
        return np.minimum(t, 1.0 - t)
    return t


# -- forward dynamics ------------------------------------------------------


def _check_domain(m: MapSpec, x):
    if is_rational(x) and not isinstance(x, Fraction):
        x = Fraction(x)
    if m.space == "circle":
        return x % 1
    lo, hi = m.domain
    if not lo <= x <= hi:
        raise DomainError(f"{x} is outside the domain [{lo}, {hi}] of {m}")
    return x


def check_point(m: MapSpec, x):
    """x as a point of the map's space: circle points reduced mod 1, ints made exact."""
    return _check_domain(m, x)


def lift(m: MapSpec, x):
    """The increasing lift R -> R of a circle map restricted to [0, 1]."""
    if m.linear_cover:
        return m.d * x
    alpha = float(m.alpha)
    x = float(x)
    return x + (m.d - 1) * x ** (1 + alpha)


def eval_map(m: MapSpec, x):
    x = _check_domain(m, x)
    if m.kind == "tent":
        if not (m.exact and is_rational(x)):
            x = float(x)
        return m.a * (1 - abs(x - 1))
    if m.kind == "quad":
        x = float(x)
        return float(m.a) * x * (1 - x)
    if not (m.exact and is_rational(x)):
        x = float(x)
    return lift(m, x) % 1


def step_array(m: MapSpec, xs) -> np.ndarray:
    """Vectorized float version of :func:`eval_map` (no domain checks)."""
    xs = np.asarray(xs, dtype=float)
    if m.kind == "tent":
        return float(m.a) * (1.0 - np.abs(xs - 1.0))
    if m.kind == "quad":
        return float(m.a) * xs * (1.0 - xs)
    if m.linear_cover:
        return np.mod(m.d * xs, 1.0)
    alpha = float(m.alpha)
    return np.mod(xs + (m.d - 1) * np.power(xs, 1.0 + alpha), 1.0)


def iterate(m: MapSpec, x, n: int):
    for _ in range(n):
        x = eval_map(m, x)
    return x


def derivative_abs(m: MapSpec, x):
    x = _check_domain(m, x)
    if m.kind == "tent":
        if x == 1:
            raise NotDifferentiable("tent map has a corner at its turning point")
        return m.a
    if m.kind == "quad":
        return abs(float(m.a) * (1 - 2 * float(x)))
    if m.linear_cover:
        return m.d
    alpha = float(m.alpha)
    return 1 + (m.d - 1) * (1 + alpha) * float(x) ** alpha


def derivative_array(m: MapSpec, xs) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    if m.kind == "tent":
        return np.full_like(xs, float(m.a))
    if m.kind == "quad":
        return np.abs(float(m.a) * (1.0 - 2.0 * xs))
    if m.linear_cover:
        return np.full_like(xs, float(m.d))
    alpha = float(m.alpha)
    return 1.0 + (m.d - 1) * (1.0 + alpha) * np.power(xs, alpha)


def branch_index(m: MapSpec, x):
    """Index of the monotone branch containing x, or None on the turning point."""
    if m.unimodal:
        c = m.turning
        if x == c:
            return None
        return 0 if x < c else 1
    x = x % 1
    if m.linear_cover:
        return int(math.floor(m.d * x))
    b = cover_branch_bounds(m)
    return int(np.searchsorted(b, float(x), side="right") - 1)


def interval_image(m: MapSpec, lo, hi):
    """Image of [lo, hi].  For unimodal maps this is a sub-interval of the domain;
    for circle maps the pair of lift values (F(lo), F(hi)) with lo, hi in [0, 1]."""
    if m.space == "circle":
        return lift(m, lo), lift(m, hi)
    u, v = eval_map(m, lo), eval_map(m, hi)
    vals = [u, v]
    c = m.turning
    if lo < c < hi:
        vals.append(eval_map(m, c))
    return min(vals), max(vals)


# -- inverse dynamics ------------------------------------------------------


def _cover_solve(m: MapSpec, targets, root_tol=ROOT_TOL) -> np.ndarray:
    """Solve F(x) = t on [0, 1] for the nonlinear cover lift F, elementwise.

    Bisection brackets keep Newton inside [0, 1]; F is strictly increasing so
    the bracket always contains the root.
    """
    t = np.asarray(targets, dtype=float)
    alpha = float(m.alpha)
    k = m.d - 1
    lo = np.zeros_like(t)
    hi = np.ones_like(t)
    x = np.clip(t / m.d, 0.0, 1.0)
    for _ in range(NEWTON_MAX_ITER):
        f = x + k * np.power(x, 1 + alpha) - t
        hi = np.where(f > 0, x, hi)
        lo = np.where(f <= 0, x, lo)
        fp = 1 + k * (1 + alpha) * np.power(x, alpha)
        xn = x - f / fp
        bad = (xn <= lo) | (xn >= hi)
        xn = np.where(bad, 0.5 * (lo + hi), xn)
        step = np.max(np.abs(xn - x)) if xn.size else 0.0
        x = xn
        if step <= 1e-15:
            break
    return x


def cover_branch_bounds(m: MapSpec) -> np.ndarray:
    """Branch boundaries 0 = b_0 < ... < b_d = 1 with F(b_k) = k."""
    if m.linear_cover:
        return np.arange(m.d + 1) / m.d
    return _cover_solve(m, np.arange(m.d + 1, dtype=float))


def inverse_branch(m: MapSpec, s: int, y):
    """The inverse of branch ``s`` evaluated at y (exact when possible).

    For unimodal kinds values of y above the peak are clamped to the turning
    point so the composition stays continuous.
    """
    if is_rational(y):
        y = Fraction(y)
    if m.kind == "tent":
        if not (m.exact and is_rational(y)):
            y = float(y)
        y = min(y, m.a)
        return y / m.a if s == 0 else 2 - y / m.a
    if m.kind == "quad":
        a = float(m.a)
        y = float(y)
        disc = max(0.0, 1.0 - 4.0 * y / a)
        xr = 0.5 * (1.0 + math.sqrt(disc))
        return y / (a * xr) if s == 0 else xr
    if m.linear_cover:
        if not is_rational(y):
            y = float(y)
        return (y + s) / m.d
    return float(_cover_solve(m, np.array([float(y) + s]))[0])


def inverse_branch_array(m: MapSpec, s, ys) -> np.ndarray:
    """Vectorized float inverse branches; ``s`` may be an int or an int array."""
    ys = np.asarray(ys, dtype=float)
    s = np.asarray(s)
    if m.kind == "tent":
        a = float(m.a)
        y = np.minimum(ys, a)
        return np.where(s == 0, y / a, 2.0 - y / a)
    if m.kind == "quad":
        a = float(m.a)
        disc = np.maximum(0.0, 1.0 - 4.0 * ys / a)
        xr = 0.5 * (1.0 + np.sqrt(disc))
        return np.where(s == 0, ys / (a * xr), xr)
    if m.linear_cover:
        return (ys + s) / m.d
    return _cover_solve(m, ys + s)


def preimages(m: MapSpec, y) -> list:
    """All solutions of T(x) = y, sorted ascending."""
    if is_rational(y):
        y = Fraction(y)
    if m.space == "circle":
        y = y % 1
        if m.linear_cover:
            if not is_rational(y):
                y = float(y)
            return [(y + k) / m.d for k in range(m.d)]
        xs = _cover_solve(m, float(y) + np.arange(m.d, dtype=float))
        return [float(v) for v in xs]
    lo, hi = m.domain
    if not lo <= y <= hi:
        return []
    if m.kind == "tent":
        a = m.a
        if not (m.exact and is_rational(y)):
            y, a = float(y), float(a)
        if y > a:
            return []
        if y == a:
            return [Fraction(1) if is_rational(y) else 1.0]
        return [y / a, 2 - y / a]
    a = float(m.a)
    y = float(y)
    disc = 1.0 - 4.0 * y / a
    if disc < 0:
        return []
    if disc == 0:
        return [0.5]
    xr = 0.5 * (1.0 + math.sqrt(disc))
    return [y / (a * xr), xr]


def preimages_array(m: MapSpec, ys) -> np.ndarray:
    """Array of shape (len(ys), n_branches) of preimages; NaN where none exists."""
    ys = np.asarray(ys, dtype=float)
    if m.space == "circle":
        ks = np.arange(m.d, dtype=float)
        if m.linear_cover:
            return (np.mod(ys, 1.0)[:, None] + ks[None, :]) / m.d
        out = _cover_solve(m, (np.mod(ys, 1.0)[:, None] + ks[None, :]).ravel())
        return out.reshape(len(ys), m.d)
    a = float(m.a)
    out = np.full((len(ys), 2), np.nan)
    if m.kind == "tent":
        ok = ys <= a
        out[ok, 0] = ys[ok] / a
        out[ok, 1] = 2.0 - ys[ok] / a
        return out
    disc = 1.0 - 4.0 * ys / a
    ok = disc >= 0
    xr = 0.5 * (1.0 + np.sqrt(np.where(ok, disc, 0.0)))
    out[ok, 0] = ys[ok] / (a * xr[ok])
    out[ok, 1] = xr[ok]
    return out


# -- Birkhoff sums ---------------------------------------------------------


def birkhoff_sum(m: MapSpec, phi, x, n: int) -> float:
    """S_n phi(x) = sum_{0 <= k < n} phi(T^k x)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    x = _check_domain(m, x)
    total = 0.0
    for _ in range(n):
        total += phi(x)
        x = eval_map(m, x)
    return total


def birkhoff_table(m: MapSpec, phi, xs, n: int) -> np.ndarray:
    """Rows k = 0..n of prefix sums sum_{j<k} phi(T^j x) for every x in xs."""
    xs = np.asarray(xs, dtype=float)
    out = np.zeros((n + 1, xs.size))
    for k in range(n):
        out[k + 1] = out[k] + phi(xs)
        xs = step_array(m, xs)
    return out


# -- renormalization core --------------------------------------------------


def _power_image(m: MapSpec, lo, hi, r: int):
    for _ in range(r):
        lo, hi = interval_image(m, lo, hi)
    return lo, hi


def _leo(m: MapSpec, r: int, lo: float, hi: float, pieces=16, max_iter=400, tol=EQ_TOL) -> bool:
    """Numerical locally-eventually-onto test for T^r on [lo, hi]: every one of
    ``pieces`` equal sub-intervals must grow to cover the whole interval."""
    width = hi - lo
    slack = tol * max(1.0, width)
    for i in range(pieces):
        u, v = lo + i * width / pieces, lo + (i + 1) * width / pieces
        for _ in range(max_iter):
            u, v = _power_image(m, u, v, r)
            if u <= lo + slack and v >= hi - slack:
                break
        else:
            return False
    return True


def renorm_core(m: MapSpec, r_max: int = 8, tol: float = EQ_TOL):
    """Smallest r with c strictly between T^r c and T^{2r} c such that
    Y = [T^r c, T^{2r} c] is T^r-invariant and T^r is l.e.o. on Y.

    Returns ``(r, (lo, hi))``.  Exact for rational tent maps.
    """
    if not m.unimodal:
        raise ValueError("renormalization core is defined for unimodal maps only")
    c = m.turning
    if not m.exact:
        c = float(c)
    for r in range(1, r_max + 1):
        u = iterate(m, c, r)
        v = iterate(m, u, r)
        lo, hi = min(u, v), max(u, v)
        if not lo < c < hi:
            continue
        ilo, ihi = _power_image(m, lo, hi, r)
        if m.exact:
            invariant = ilo == lo and ihi == hi
        else:
            invariant = abs(ilo - lo) <= tol and abs(ihi - hi) <= tol
        if invariant and _leo(m, r, float(lo), float(hi), tol=tol):
            return r, (lo, hi)
    raise NotFound(f"no renormalization core with r <= {r_max} for {m}")
