"""Meromorphic expressions on the Riemann sphere.

Expressions are parsed into a small AST over {z, complex literals, +, -, *,
/, ^integer, exp, sin, cos}.  A map carries a declared (finite,
duplicate-free) pole list; evaluation is total on the plane and lands on the
sphere: declared poles and any value whose modulus exceeds the overflow
guard come back as the point at infinity.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

# Finite values above this modulus are coerced to the point at infinity;
# far above every escape threshold used elsewhere, far below IEEE overflow.
OVERFLOW_GUARD = 1e150


class ParseError(ValueError):
    """Syntax error in an expression string; `position` is 1-based."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class DuplicatePoleError(ValueError):
    pass


class PoleAtPointError(ValueError):
    pass


class PoleOnCircleError(ValueError):
    pass


class OriginInDiskError(ValueError):
    pass


class EvaluationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Sphere points and the chordal metric
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpherePoint:
    """A point of the Riemann sphere: a finite complex value or infinity."""

    value: Optional[complex]

    @property
    def is_infinity(self) -> bool:
        return self.value is None

    @property
    def finite(self) -> complex:
        if self.value is None:
            raise EvaluationError("point at infinity has no finite value")
        return self.value

    def modulus(self) -> float:
        return math.inf if self.value is None else abs(self.value)

    @staticmethod
    def of(w: complex) -> "SpherePoint":
        return SpherePoint(complex(w))


INFINITY = SpherePoint(None)

PointLike = Union[SpherePoint, complex, float, int]


def _as_sphere(p: PointLike) -> SpherePoint:
    if isinstance(p, SpherePoint):
        return p
    return SpherePoint.of(p)


def chordal(a: PointLike, b: PointLike) -> float:
    """Chordal distance on the sphere of diameter 2; always in [0, 2]."""
    pa, pb = _as_sphere(a), _as_sphere(b)
    if pa.is_infinity and pb.is_infinity:
        return 0.0
    if pa.is_infinity or pb.is_infinity:
        w = pb.finite if pa.is_infinity else pa.finite
        return 2.0 / math.hypot(1.0, abs(w))
    wa, wb = pa.finite, pb.finite
    return 2.0 * abs(wa - wb) / (math.hypot(1.0, abs(wa)) * math.hypot(1.0, abs(wb)))


# ---------------------------------------------------------------------------
# Expression AST
# ---------------------------------------------------------------------------

class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class Const(Expr):
    value: complex


@dataclass(frozen=True)
class Var(Expr):
    pass


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr


@dataclass(frozen=True)
class Fun(Expr):
    name: str  # one of _FUNCTIONS
    arg: Expr


_FUNCTIONS = ("exp", "sin", "cos")


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"(?P<imag>(?:\d+\.\d*|\.\d+|\d+)[ij](?![A-Za-z_0-9]))"
    r"|(?P<num>\d+\.\d*|\.\d+|\d+)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        m = _TOKEN_RE.match(text, i)
        if m is None:
            raise ParseError(f"unexpected character {text[i]!r}", i + 1)
        kind = m.lastgroup
        tokens.append((kind, m.group(), i + 1))
        i = m.end()
    tokens.append(("end", "", n + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str):
        kind, val, pos = self.peek()
        if kind != "op" or val != op:
            raise ParseError(f"expected {op!r}", pos)
        return self.advance()

    def parse(self) -> Expr:
        node = self.expression()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", pos)
        return node

    def expression(self) -> Expr:
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.advance()
            node: Expr = Neg(self.term())
        else:
            node = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.advance()
                rhs = self.term()
                node = Add(node, rhs) if val == "+" else Sub(node, rhs)
            else:
                return node

    def term(self) -> Expr:
        node = self.factor()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.advance()
                rhs = self.factor()
                node = Mul(node, rhs) if val == "*" else Div(node, rhs)
            else:
                return node

    def factor(self) -> Expr:
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.advance()
            return Neg(self.factor())
        node = self.atom()
        kind, val, pos = self.peek()
        if kind == "op" and val == "^":
            self.advance()
            node = Pow(node, self.integer())
        return node

    def integer(self) -> int:
        sign = 1
        kind, val, pos = self.peek()
        if kind == "op" and val == "-":
            self.advance()
            sign = -1
        kind, val, pos = self.peek()
        if kind != "num" or "." in val:
            raise ParseError("expected integer exponent", pos)
        self.advance()
        return sign * int(val)

    def atom(self) -> Expr:
        kind, val, pos = self.peek()
        if kind == "num":
            self.advance()
            return Const(complex(float(val)))
        if kind == "imag":
            self.advance()
            return Const(float(val[:-1]) * 1j)
        if kind == "name":
            self.advance()
            if val == "z":
                return Var()
            if val in ("i", "j"):
                return Const(1j)
            if val in _FUNCTIONS:
                self.expect_op("(")
                arg = self.expression()
                self.expect_op(")")
                return Fun(val, arg)
            raise ParseError(f"unsupported function or name {val!r}", pos)
        if kind == "op" and val == "(":
            self.advance()
            node = self.expression()
            self.expect_op(")")
            return node
        raise ParseError(f"unexpected token {val!r}" if val else "unexpected end of input", pos)


def parse_expression(text: str) -> Expr:
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Printing (canonical, round-trip stable)
# ---------------------------------------------------------------------------

def _fmt_real(x: float) -> str:
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def _fmt_const(v: complex) -> str:
    if v.imag == 0:
        return _fmt_real(v.real)
    if v.real == 0:
        if v.imag == 1:
            return "i"
        return f"{_fmt_real(v.imag)}*i"
    return f"({_fmt_real(v.real)}+{_fmt_real(v.imag)}*i)" if v.imag >= 0 else \
        f"({_fmt_real(v.real)}-{_fmt_real(-v.imag)}*i)"


_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4, Fun: 5, Const: 5, Var: 5}


def expr_to_string(node: Expr) -> str:
    return _print(node)


def _print(node: Expr, parent_prec: int = 0, right_side: bool = False) -> str:
    prec = _PREC[type(node)]
    if isinstance(node, Const):
        s = _fmt_const(node.value)
        if s.startswith("-"):
            prec = 3
    elif isinstance(node, Var):
        s = "z"
    elif isinstance(node, Fun):
        s = f"{node.name}({_print(node.arg)})"
    elif isinstance(node, Neg):
        s = f"-{_print(node.operand, prec, True)}"
    elif isinstance(node, Pow):
        s = f"{_print(node.base, prec, False)}^{node.exponent}"
    elif isinstance(node, (Add, Sub)):
        op = "+" if isinstance(node, Add) else "-"
        s = f"{_print(node.left, prec)}{op}{_print(node.right, prec + 1)}"
    else:  # Mul, Div
        op = "*" if isinstance(node, Mul) else "/"
        s = f"{_print(node.left, prec)}{op}{_print(node.right, prec + 1)}"
    if prec < parent_prec:
        return f"({s})"
    return s


# ---------------------------------------------------------------------------
# Symbolic derivative with light simplification
# ---------------------------------------------------------------------------

_ZERO = Const(0j)
_ONE = Const(1 + 0j)


def _is_const(node: Expr, value=None) -> bool:
    return isinstance(node, Const) and (value is None or node.value == value)


def simplify(node: Expr) -> Expr:
    if isinstance(node, (Const, Var)):
        return node
    if isinstance(node, Neg):
        a = simplify(node.operand)
        if _is_const(a):
            return Const(-a.value)
        if isinstance(a, Neg):
            return a.operand
        return Neg(a)
    if isinstance(node, Fun):
        return Fun(node.name, simplify(node.arg))
    if isinstance(node, Pow):
        base = simplify(node.base)
        if node.exponent == 1:
            return base
        if node.exponent == 0:
            return _ONE
        if _is_const(base):
            return Const(base.value ** node.exponent)
        return Pow(base, node.exponent)
    left = simplify(node.left)
    right = simplify(node.right)
    if isinstance(node, Add):
        if _is_const(left, 0j):
            return right
        if _is_const(right, 0j):
            return left
        if _is_const(left) and _is_const(right):
            return Const(left.value + right.value)
        return Add(left, right)
    if isinstance(node, Sub):
        if _is_const(right, 0j):
            return left
        if _is_const(left, 0j):
            return simplify(Neg(right))
        if _is_const(left) and _is_const(right):
            return Const(left.value - right.value)
        return Sub(left, right)
    if isinstance(node, Mul):
        if _is_const(left, 0j) or _is_const(right, 0j):
            return _ZERO
        if _is_const(left, 1 + 0j):
            return right
        if _is_const(right, 1 + 0j):
            return left
        if _is_const(left) and _is_const(right):
            return Const(left.value * right.value)
        return Mul(left, right)
    # Div
    if _is_const(left, 0j):
        return _ZERO
    if _is_const(right, 1 + 0j):
        return left
    return Div(left, right)


def derivative_expr(node: Expr) -> Expr:
    return simplify(_derive(node))


def _derive(node: Expr) -> Expr:
    if isinstance(node, Const):
        return _ZERO
    if isinstance(node, Var):
        return _ONE
    if isinstance(node, Neg):
        return Neg(_derive(node.operand))
    if isinstance(node, Add):
        return Add(_derive(node.left), _derive(node.right))
    if isinstance(node, Sub):
        return Sub(_derive(node.left), _derive(node.right))
    if isinstance(node, Mul):
        return Add(Mul(_derive(node.left), node.right), Mul(node.left, _derive(node.right)))
    if isinstance(node, Div):
        u, v = node.left, node.right
        return Div(Sub(Mul(_derive(u), v), Mul(u, _derive(v))), Pow(v, 2))
    if isinstance(node, Pow):
        n = node.exponent
        return Mul(Mul(Const(complex(n)), Pow(node.base, n - 1)), _derive(node.base))
    if isinstance(node, Fun):
        inner = _derive(node.arg)
        if node.name == "exp":
            outer: Expr = Fun("exp", node.arg)
        elif node.name == "sin":
            outer = Fun("cos", node.arg)
        else:  # cos
            outer = Neg(Fun("sin", node.arg))
        return Mul(outer, inner)
    raise TypeError(f"unknown node {node!r}")


def substitute(node: Expr, replacement: Expr) -> Expr:
    """Replace every occurrence of the variable by `replacement`."""
    if isinstance(node, Var):
        return replacement
    if isinstance(node, Const):
        return node
    if isinstance(node, Neg):
        return Neg(substitute(node.operand, replacement))
    if isinstance(node, Fun):
        return Fun(node.name, substitute(node.arg, replacement))
    if isinstance(node, Pow):
        return Pow(substitute(node.base, replacement), node.exponent)
    cls = type(node)
    return cls(substitute(node.left, replacement), substitute(node.right, replacement))


# ---------------------------------------------------------------------------
# Code generation (scalar cmath and vectorized numpy backends)
# ---------------------------------------------------------------------------

def _codegen(node: Expr) -> str:
    if isinstance(node, Const):
        return f"({node.value.real!r}+{node.value.imag!r}j)"
    if isinstance(node, Var):
        return "z"
    if isinstance(node, Neg):
        return f"(-{_codegen(node.operand)})"
    if isinstance(node, Fun):
        return f"_{node.name}({_codegen(node.arg)})"
    if isinstance(node, Pow):
        return f"({_codegen(node.base)})**({node.exponent})"
    op = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(node)]
    return f"({_codegen(node.left)}{op}{_codegen(node.right)})"


def compile_scalar(node: Expr):
    env = {"_exp": cmath.exp, "_sin": cmath.sin, "_cos": cmath.cos}
    return eval(compile(f"lambda z: {_codegen(node)}", "<merodyn-map>", "eval"), env)


def compile_vector(node: Expr):
    env = {"_exp": np.exp, "_sin": np.sin, "_cos": np.cos}
    return eval(compile(f"lambda z: {_codegen(node)}", "<merodyn-map-np>", "eval"), env)


# ---------------------------------------------------------------------------
# Maps and disks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Pole:
    location: complex
    order: int


class MeromorphicMap:
    """An evaluable meromorphic expression with a declared pole list.

    Immutable after construction; evaluation is a pure function of the
    input, safe to share across workers.
    """

    def __init__(self, expression: Expr, poles=(), label: Optional[str] = None):
        self.expression = expression
        self.poles = tuple(poles)
        locations = [p.location for p in self.poles]
        for i, loc in enumerate(locations):
            if loc in locations[:i]:
                raise DuplicatePoleError(f"duplicate pole at {loc}")
        self.label = label if label is not None else self.text
        self._fn = None
        self._vfn = None

    @property
    def text(self) -> str:
        return expr_to_string(self.expression)

    def __repr__(self):
        return f"MeromorphicMap({self.text!r}, poles={list(self.poles)!r})"

    def __getstate__(self):
        return (self.expression, self.poles, self.label)

    def __setstate__(self, state):
        self.expression, self.poles, self.label = state
        self._fn = None
        self._vfn = None

    def _scalar(self):
        if self._fn is None:
            self._fn = compile_scalar(self.expression)
        return self._fn

    def _vector(self):
        if self._vfn is None:
            self._vfn = compile_vector(self.expression)
        return self._vfn

    def __call__(self, z: complex) -> SpherePoint:
        z = complex(z)
        for p in self.poles:
            if z == p.location:
                return INFINITY
        try:
            w = self._scalar()(z)
        except (OverflowError, ZeroDivisionError, ValueError):
            return INFINITY
        w = complex(w)
        if not cmath.isfinite(w) or abs(w) > OVERFLOW_GUARD:
            return INFINITY
        return SpherePoint(w)

    def eval_array(self, zs: np.ndarray) -> np.ndarray:
        """Vectorized evaluation; infinite values come back as complex inf."""
        zs = np.asarray(zs, dtype=complex)
        with np.errstate(all="ignore"):
            w = self._vector()(zs)
        w = np.asarray(w, dtype=complex) + np.zeros_like(zs)
        bad = ~np.isfinite(w.real) | ~np.isfinite(w.imag) | (np.abs(w) > OVERFLOW_GUARD)
        for p in self.poles:
            bad |= zs == p.location
        w = np.where(bad, complex(np.inf, 0.0), w)
        return w

    def derivative(self) -> "MeromorphicMap":
        poles = [Pole(p.location, p.order + 1) for p in self.poles]
        return MeromorphicMap(derivative_expr(self.expression), poles,
                              label=f"({self.label})'")


def parse_map(text: str, poles=(), label: Optional[str] = None) -> MeromorphicMap:
    """Parse an expression string with a declared pole list.

    `poles` is an iterable of (location, order) pairs.
    """
    expr = parse_expression(text)
    pole_objs = [Pole(complex(loc), int(order)) for loc, order in poles]
    return MeromorphicMap(expr, pole_objs, label=label)


def compose(outer: MeromorphicMap, inner: MeromorphicMap) -> MeromorphicMap:
    """Expression-level composition outer(inner(z)).

    The declared poles of the composite are the inner map's poles: there the
    inner value is infinite and the composite is undefined.  Points whose
    intermediate image lands on a pole of the outer map surface as infinity
    during evaluation, without any pole classification of the composite.
    """
    expr = substitute(outer.expression, inner.expression)
    return MeromorphicMap(expr, inner.poles,
                          label=f"({outer.label})o({inner.label})")


def spherical_derivative(m: MeromorphicMap, z: complex) -> float:
    """|f'(z)| / (1 + |f(z)|^2), the Euclidean-to-chordal expansion factor."""
    z = complex(z)
    for p in m.poles:
        if z == p.location:
            raise PoleAtPointError(f"z = {z} is a declared pole of {m.label}")
    w = m(z)
    d = m.derivative()(z)
    if w.is_infinity or d.is_infinity:
        raise EvaluationError(f"map not finite at {z}")
    return abs(d.finite) / (1.0 + abs(w.finite) ** 2)


def circle_modulus(m: MeromorphicMap, r: float, n_samples: int = 4096) -> tuple[float, float]:
    """Sampled (max, min) of |f| over n_samples equispaced points on |z| = r."""
    if n_samples < 64:
        raise ValueError("n_samples must be at least 64")
    if r <= 0:
        raise ValueError("radius must be positive")
    for p in m.poles:
        if abs(abs(p.location) - r) <= 1e-12 * max(1.0, r):
            raise PoleOnCircleError(f"declared pole {p.location} lies on |z| = {r}")
    hi = 0.0
    lo = math.inf
    for k in range(n_samples):
        w = m(r * cmath.exp(2j * math.pi * k / n_samples))
        mod = w.modulus()
        if mod > hi:
            hi = mod
        if mod < lo:
            lo = mod
    return hi, lo


@dataclass(frozen=True)
class DiskRegion:
    """A disk B(center, radius), open unless `closed`."""

    center: complex
    radius: float
    closed: bool = False

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    def contains(self, z: complex) -> bool:
        d = abs(complex(z) - self.center)
        return d <= self.radius if self.closed else d < self.radius

    @property
    def sup_modulus(self) -> float:
        return abs(self.center) + self.radius


def disk_inversion(d: DiskRegion) -> DiskRegion:
    """The exact image disk of d under z -> 1/z; requires 0 outside closure."""
    if abs(d.center) <= d.radius:
        raise OriginInDiskError("origin lies in the closure of the disk")
    denom = abs(d.center) ** 2 - d.radius ** 2
    return DiskRegion(d.center.conjugate() / denom, d.radius / denom, d.closed)
