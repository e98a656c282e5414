"""A small expression language for Lipschitz observables.

Grammar (whitespace is insignificant)::

    expr   := term (('+' | '-') term)*
    term   := factor ('*' factor)*
    factor := NUM | 'x' | 'pi'
            | FUNC '(' expr ')'                     FUNC in cos, sin, exp, abs
            | 'dist' '(' 'x' ',' '[' NUM (',' NUM)* ']' ')'
            | ('min' | 'max') '(' expr ',' expr ')'
            | '(' expr ')'
            | '-' factor

Besides evaluation the module gives two Lipschitz estimates: a compositional
upper bound and a difference-quotient lower bound on a grid.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from . import dynamics
from .errors import ParseError, UnsupportedNode, DomainError

FUNCS = ("cos", "sin", "exp", "abs")


# -- AST -------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Pi:
    pass


@dataclass(frozen=True)
class Func:
    name: str
    arg: object


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * min max
    left: object
    right: object


@dataclass(frozen=True)
class Dist:
    points: tuple


@dataclass(frozen=True)
class Pullback:
    """arg composed with a map: evaluates arg(T(x)).  Not part of the text grammar."""

    arg: object
    map: object


# -- tokenizer / parser ----------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_]\w*)"
    r"|(?P<punct>[-+*(),\[\]]))"
)

FACTOR_START = frozenset({"number", "x", "pi", "cos", "sin", "exp", "abs", "dist", "min", "max", "(", "-"})


def _tokenize(src: str):
    tokens = []
    pos = 0
    raw = src.encode()
    while True:
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            rest = src[pos:]
            if rest.strip() == "":
                break
            offset = len(src[: pos + len(rest) - len(rest.lstrip())].encode())
            raise ParseError(f"unexpected character {rest.lstrip()[0]!r}", offset, FACTOR_START)
        kind = m.lastgroup
        text = m.group(kind)
        start = len(src[: m.start(kind)].encode())
        if kind == "num":
            tokens.append(("number", float(text), start))
        elif kind == "ident":
            tokens.append((text, text, start))
        else:
            tokens.append((text, text, start))
        pos = m.end()
    tokens.append(("eof", None, len(raw)))
    return tokens


class _Parser:
    def __init__(self, src: str):
        self.tokens = _tokenize(src)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def advance(self):
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, kind):
        if self.tok[0] != kind:
            self.fail({kind})
        return self.advance()

    def fail(self, expected):
        kind, value, offset = self.tok
        what = "end of input" if kind == "eof" else repr(value if kind != "number" else kind)
        raise ParseError(f"unexpected {what}", offset, expected)

    def parse(self):
        node = self.expr()
        if self.tok[0] != "eof":
            self.fail({"+", "-", "*", "eof"})
        return node

    def expr(self):
        node = self.term()
        while self.tok[0] in ("+", "-"):
            op = self.advance()[0]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.tok[0] == "*":
            self.advance()
            node = BinOp("*", node, self.factor())
        return node

    def factor(self):
        kind = self.tok[0]
        if kind == "number":
            return Num(self.advance()[1])
        if kind == "x":
            self.advance()
            return Var()
        if kind == "pi":
            self.advance()
            return Pi()
        if kind in FUNCS:
            self.advance()
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            return Func(kind, arg)
        if kind in ("min", "max"):
            self.advance()
            self.expect("(")
            left = self.expr()
            self.expect(",")
            right = self.expr()
            self.expect(")")
            return BinOp(kind, left, right)
        if kind == "dist":
            self.advance()
            self.expect("(")
            self.expect("x")
            self.expect(",")
            self.expect("[")
            pts = [self.expect("number")[1]]
            while self.tok[0] == ",":
                self.advance()
                pts.append(self.expect("number")[1])
            self.expect("]")
            self.expect(")")
            return Dist(tuple(pts))
        if kind == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        if kind == "-":
            self.advance()
            return Neg(self.factor())
        self.fail(FACTOR_START)


def parse_expr(src: str):
    if not src or not src.strip():
        raise ParseError("empty observable", 0, FACTOR_START)
    return _Parser(src).parse()


# -- pretty printing -------------------------------------------------------


def _level(node) -> int:
    if isinstance(node, BinOp) and node.op in "+-":
        return 1
    if isinstance(node, BinOp) and node.op == "*":
        return 2
    return 3


def _wrap(node, need: int) -> str:
    text = to_source(node)
    return f"({text})" if _level(node) < need else text


def _fmt_num(v: float) -> str:
    text = repr(float(v))
    return text


def to_source(node) -> str:
    """Render an AST in the grammar above; parse(to_source(t)) == t for parsed t."""
    if isinstance(node, Num):
        return _fmt_num(node.value)
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Pi):
        return "pi"
    if isinstance(node, Func):
        return f"{node.name}({to_source(node.arg)})"
    if isinstance(node, Neg):
        return "-" + _wrap(node.arg, 3)
    if isinstance(node, Dist):
        return "dist(x, [" + ", ".join(_fmt_num(p) for p in node.points) + "])"
    if isinstance(node, BinOp):
        if node.op in ("min", "max"):
            return f"{node.op}({to_source(node.left)}, {to_source(node.right)})"
        if node.op == "*":
            return f"{_wrap(node.left, 2)} * {_wrap(node.right, 3)}"
        return f"{_wrap(node.left, 1)} {node.op} {_wrap(node.right, 2)}"
    if isinstance(node, Pullback):
        raise ValueError("composition with a map has no textual form")
    raise TypeError(f"not an observable node: {node!r}")


# -- evaluation ------------------------------------------------------------


def evaluate(node, x, space: str = "circle"):
    """Evaluate on a float or a numpy array of points."""
    if isinstance(node, Num):
        return node.value + 0.0 * x
    if isinstance(node, Var):
        return x
    if isinstance(node, Pi):
        return math.pi + 0.0 * x
    if isinstance(node, Func):
        v = evaluate(node.arg, x, space)
        return {"cos": np.cos, "sin": np.sin, "exp": np.exp, "abs": np.abs}[node.name](v)
    if isinstance(node, Neg):
        return -evaluate(node.arg, x, space)
    if isinstance(node, BinOp):
        a = evaluate(node.left, x, space)
        b = evaluate(node.right, x, space)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "min":
            return np.minimum(a, b)
        return np.maximum(a, b)
    if isinstance(node, Dist):
        out = None
        for p in node.points:
            d = dynamics.distance_array(space, x, p)
            out = d if out is None else np.minimum(out, d)
        return out
    if isinstance(node, Pullback):
        return evaluate(node.arg, dynamics.step_array(node.map, x), space)
    raise TypeError(f"not an observable node: {node!r}")


def _has_var(node) -> bool:
    if isinstance(node, (Var, Dist, Pullback)):
        return True
    if isinstance(node, (Func, Neg)):
        return _has_var(node.arg)
    if isinstance(node, BinOp):
        return _has_var(node.left) or _has_var(node.right)
    return False


# -- range and Lipschitz bounds ---------------------------------------------


def value_range(node, lo: float, hi: float, space: str):
    """Interval enclosure of the node's values over [lo, hi]."""
    if not _has_var(node):
        v = float(evaluate(node, 0.0, space))
        return v, v
    if isinstance(node, Var):
        return lo, hi
    if isinstance(node, Func):
        a, b = value_range(node.arg, lo, hi, space)
        if node.name == "exp":
            return math.exp(a) if a < 700 else math.inf, math.exp(b) if b < 700 else math.inf
        if node.name == "abs":
            if a >= 0:
                return a, b
            if b <= 0:
                return -b, -a
            return 0.0, max(-a, b)
        return -1.0, 1.0
    if isinstance(node, Neg):
        a, b = value_range(node.arg, lo, hi, space)
        return -b, -a
    if isinstance(node, BinOp):
        a, b = value_range(node.left, lo, hi, space)
        c, d = value_range(node.right, lo, hi, space)
        if node.op == "+":
            return a + c, b + d
        if node.op == "-":
            return a - d, b - c
        if node.op == "*":
            prods = [a * c, a * d, b * c, b * d]
            prods = [0.0 if math.isnan(p) else p for p in prods]
            return min(prods), max(prods)
        if node.op == "min":
            return min(a, c), min(b, d)
        return max(a, c), max(b, d)
    if isinstance(node, Dist):
        return 0.0, 0.5 if space == "circle" else hi - lo
    if isinstance(node, Pullback):
        return value_range(node.arg, lo, hi, space)
    raise TypeError(f"not an observable node: {node!r}")


def analytic_lip(node, lo: float, hi: float, space: str) -> float:
    """Compositional upper bound for the Lipschitz constant."""
    if not _has_var(node):
        return 0.0
    if isinstance(node, Var):
        return 1.0
    if isinstance(node, Dist):
        return 1.0
    if isinstance(node, Func):
        inner = analytic_lip(node.arg, lo, hi, space)
        if node.name == "exp":
            top = value_range(node.arg, lo, hi, space)[1]
            if not math.isfinite(top) or top > 700:
                raise UnsupportedNode("exp of an unbounded argument")
            return math.exp(top) * inner
        return inner
    if isinstance(node, Neg):
        return analytic_lip(node.arg, lo, hi, space)
    if isinstance(node, BinOp):
        lf = analytic_lip(node.left, lo, hi, space)
        lg = analytic_lip(node.right, lo, hi, space)
        if node.op in "+-":
            return lf + lg
        if node.op in ("min", "max"):
            return max(lf, lg)
        a, b = value_range(node.left, lo, hi, space)
        c, d = value_range(node.right, lo, hi, space)
        sf, sg = max(abs(a), abs(b)), max(abs(c), abs(d))
        return (lf * sg if lf else 0.0) + (sf * lg if lg else 0.0)
    if isinstance(node, Pullback):
        return analytic_lip(node.arg, lo, hi, space) * float(node.map.expansion_bound)
    raise TypeError(f"not an observable node: {node!r}")


# -- Observable ------------------------------------------------------------


@dataclass(frozen=True)
class Observable:
    expr: object
    space: str = "circle"
    domain: tuple = (0.0, 1.0)
    lip_estimate: float = field(default=0.0, compare=False)
    lip_mode: str = field(default="analytic", compare=False)

    def __call__(self, x):
        if isinstance(x, np.ndarray):
            return evaluate(self.expr, x.astype(float, copy=False), self.space)
        return float(evaluate(self.expr, float(x), self.space))

    @property
    def source(self) -> str:
        return to_source(self.expr)

    def grid(self, n: int) -> np.ndarray:
        lo, hi = self.domain
        if self.space == "circle":
            return np.arange(n) / n
        return np.linspace(lo, hi, n)

    def sup_bound(self, grid_n: int = 4096) -> float:
        """A guaranteed upper bound for sup phi over the domain."""
        lo, hi = self.domain
        top = value_range(self.expr, lo, hi, self.space)[1]
        h = (hi - lo) / grid_n
        mids = lo + (np.arange(grid_n) + 0.5) * h
        sampled = float(np.max(self(mids))) + self.lip_estimate * h / 2 if self.lip_mode == "analytic" else math.inf
        return min(top, sampled)

    def with_expr(self, expr) -> "Observable":
        return make_observable(expr, self.space, self.domain)


def make_observable(expr, space: str = "circle", domain=None, lip_mode: str = "analytic") -> Observable:
    if domain is None:
        domain = (0.0, 1.0)
    domain = (float(domain[0]), float(domain[1]))
    _check_dist_points(expr, space, domain)
    if space == "circle":
        _check_periodic(expr)
    obs = Observable(expr, space, domain)
    mode = lip_mode
    try:
        lip = lip_constant(obs, mode)
    except UnsupportedNode:
        mode = "grid"
        lip = lip_constant(obs, "grid", grid_n=10_000)
    return Observable(expr, space, domain, lip, mode)


def _check_periodic(expr, tol: float = 1e-9):
    """A Lipschitz function on the circle must agree at 0 and 1."""
    with np.errstate(all="ignore"):
        f0, f1 = float(evaluate(expr, 0.0)), float(evaluate(expr, 1.0))
    if math.isfinite(f0) and math.isfinite(f1) and abs(f0 - f1) > tol * max(1.0, abs(f0)):
        raise DomainError(f"observable is discontinuous on the circle: f(0) = {f0!r}, f(1) = {f1!r}")


def _check_dist_points(node, space, domain):
    if isinstance(node, Dist):
        lo, hi = (0.0, 1.0) if space == "circle" else domain
        for p in node.points:
            if not lo <= p <= hi:
                raise DomainError(f"dist point {p} outside the {space} domain [{lo}, {hi}]")
    elif isinstance(node, (Func, Neg, Pullback)):
        _check_dist_points(node.arg, space, domain)
    elif isinstance(node, BinOp):
        _check_dist_points(node.left, space, domain)
        _check_dist_points(node.right, space, domain)


def parse_observable(src: str, space: str = "circle", domain=None, lip_mode: str = "analytic") -> Observable:
    """Parse ``src`` into an Observable on the given space.

    ``domain`` defaults to [0, 1]; pass the map's domain for interval maps
    (e.g. (0, 2) for tent maps) or use :func:`observable_for`.
    """
    return make_observable(parse_expr(src), space, domain, lip_mode)


def observable_for(m, src: str) -> Observable:
    """Parse ``src`` on the space and domain of map ``m``."""
    return parse_observable(src, m.space, tuple(float(v) for v in m.domain))


def eval_observable(phi: Observable, x) -> float:
    return phi(x)


def lip_constant(phi: Observable, mode: str = "analytic", grid_n: int = 1000) -> float:
    """Analytic mode is a sound upper bound, grid mode a lower bound."""
    lo, hi = phi.domain
    if mode == "analytic":
        return analytic_lip(phi.expr, lo, hi, phi.space)
    if mode != "grid":
        raise ValueError(f"unknown lip mode {mode!r}")
    if grid_n < 2:
        raise ValueError("grid mode needs grid_n >= 2")
    xs = phi.grid(grid_n)
    vals = phi(xs)
    if phi.space == "circle":
        diffs = np.abs(np.diff(np.append(vals, vals[0])))
        return float(np.max(diffs) * grid_n)
    return float(np.max(np.abs(np.diff(vals)) / np.diff(xs)))


def sup_abs(phi: Observable, grid_n: int = 4096) -> float:
    lo, hi = phi.domain
    a, b = value_range(phi.expr, lo, hi, phi.space)
    return max(abs(a), abs(b))


# -- constructors used by the experiments -----------------------------------


def pullback(phi: Observable, m) -> Observable:
    return phi.with_expr(Pullback(phi.expr, m))


def coboundary(psi: Observable, m) -> Observable:
    """psi o T - psi."""
    return psi.with_expr(BinOp("-", Pullback(psi.expr, m), psi.expr))


def add_constant(phi: Observable, c: float) -> Observable:
    return phi.with_expr(BinOp("+", phi.expr, Num(float(c))))


def scale(phi: Observable, t: float) -> Observable:
    return phi.with_expr(BinOp("*", Num(float(t)), phi.expr))
