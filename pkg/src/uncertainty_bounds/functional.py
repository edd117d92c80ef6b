"""Uncertainty functionals: parsing, evaluation and exact first derivatives.

A functional is a real function ``f(x, y, w)`` of the second moments, with
``x`` the momentum variance, ``y`` the position variance and ``w`` the
symmetrised covariance.  The variance of ``r = -p - q`` is available as the
variable ``z`` and is rewritten to ``x + y + 2*w`` while parsing, so every
tree handed to the rest of the package only refers to ``x``, ``y`` and ``w``.

Grammar (whitespace is insignificant)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := base (('^' | '**') unary)?
    base   := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'

Names are the variables ``x y w z``, the constants ``hbar pi e``, the
functions ``sqrt exp ln abs pow`` and any parameter bound at parse time.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Mapping, NamedTuple, Sequence

VARIABLES = ("x", "y", "w")
FUNCTIONS = {"sqrt": 1, "exp": 1, "ln": 1, "abs": 1, "pow": 2}
CONSTANTS = {"pi": math.pi, "e": math.e}


class FunctionalError(ValueError):
    """Base class for errors raised by this module."""


class ParseError(FunctionalError):
    """Syntax error; ``pos`` is the offending character offset."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


class UnknownIdentifierError(ParseError):
    pass


class UnboundParameterError(ParseError):
    pass


class DomainError(FunctionalError):
    """Evaluation left the domain of ln, sqrt, a fractional power or 1/x."""


class NonDifferentiableError(FunctionalError):
    """Gradient requested where the functional has no derivative."""


class Grad3(NamedTuple):
    fx: float
    fy: float
    fw: float


# ---------------------------------------------------------------- dual numbers


class Dual:
    """Value plus gradient with respect to (x, y, w)."""

    __slots__ = ("val", "dx", "dy", "dw")

    def __init__(self, val, dx=0.0, dy=0.0, dw=0.0):
        self.val = val
        self.dx = dx
        self.dy = dy
        self.dw = dw

    def scaled(self, val, k):
        return Dual(val, k * self.dx, k * self.dy, k * self.dw)

    def __add__(self, o):
        if isinstance(o, Dual):
            return Dual(self.val + o.val, self.dx + o.dx, self.dy + o.dy, self.dw + o.dw)
        return Dual(self.val + o, self.dx, self.dy, self.dw)

    __radd__ = __add__

    def __sub__(self, o):
        if isinstance(o, Dual):
            return Dual(self.val - o.val, self.dx - o.dx, self.dy - o.dy, self.dw - o.dw)
        return Dual(self.val - o, self.dx, self.dy, self.dw)

    def __rsub__(self, o):
        return Dual(o - self.val, -self.dx, -self.dy, -self.dw)

    def __neg__(self):
        return Dual(-self.val, -self.dx, -self.dy, -self.dw)

    def __mul__(self, o):
        if isinstance(o, Dual):
            a, b = self.val, o.val
            return Dual(
                a * b,
                a * o.dx + b * self.dx,
                a * o.dy + b * self.dy,
                a * o.dw + b * self.dw,
            )
        return Dual(self.val * o, self.dx * o, self.dy * o, self.dw * o)

    __rmul__ = __mul__

    def __truediv__(self, o):
        if isinstance(o, Dual):
            q = self.val / o.val
            inv = 1.0 / o.val
            return Dual(
                q,
                (self.dx - q * o.dx) * inv,
                (self.dy - q * o.dy) * inv,
                (self.dw - q * o.dw) * inv,
            )
        return Dual(self.val / o, self.dx / o, self.dy / o, self.dw / o)

    def __rtruediv__(self, o):
        q = o / self.val
        return self.scaled(q, -q / self.val)

    def __repr__(self):
        return f"Dual({self.val!r}, d=({self.dx!r}, {self.dy!r}, {self.dw!r}))"


def _val(a):
    return a.val if isinstance(a, Dual) else a


def _sqrt(a):
    v = _val(a)
    if v < 0:
        raise DomainError(f"sqrt of negative value {v!r}")
    s = math.sqrt(v)
    if isinstance(a, Dual):
        if s == 0.0:
            raise NonDifferentiableError("sqrt is not differentiable at 0")
        return a.scaled(s, 0.5 / s)
    return s


def _exp(a):
    try:
        ev = math.exp(_val(a))
    except OverflowError as exc:
        raise DomainError("exp overflow") from exc
    return a.scaled(ev, ev) if isinstance(a, Dual) else ev


def _ln(a):
    v = _val(a)
    if v <= 0:
        raise DomainError(f"ln of non-positive value {v!r}")
    return a.scaled(math.log(v), 1.0 / v) if isinstance(a, Dual) else math.log(v)


def _abs(a):
    v = _val(a)
    if isinstance(a, Dual):
        if v == 0:
            raise NonDifferentiableError("abs is not differentiable at 0")
        return a.scaled(abs(v), 1.0 if v > 0 else -1.0)
    return abs(v)


def _pow(a, b):
    av, bv = _val(a), _val(b)
    b_const = not isinstance(b, Dual) or (b.dx == 0.0 and b.dy == 0.0 and b.dw == 0.0)
    if b_const:
        integral = float(bv).is_integer()
        if av < 0 and not integral:
            raise DomainError(f"fractional power {bv!r} of negative value {av!r}")
        if av == 0 and bv < 0:
            raise DomainError("negative power of zero")
        try:
            pv = math.pow(av, bv)
        except OverflowError as exc:
            raise DomainError("power overflow") from exc
        if not isinstance(a, Dual):
            return pv
        if bv == 0:
            return Dual(1.0)
        if av == 0 and bv < 1:
            raise NonDifferentiableError("power below 1 is not differentiable at 0")
        if av == 0:
            return a.scaled(pv, 1.0 if bv == 1 else 0.0)
        return a.scaled(pv, bv * math.pow(av, bv - 1))
    if av <= 0:
        raise DomainError("variable exponent requires a positive base")
    return _exp(b * _ln(a))


def _div(a, b):
    if _val(b) == 0:
        raise DomainError("division by zero")
    return a / b


_FUNCS = {"sqrt": _sqrt, "exp": _exp, "ln": _ln, "abs": _abs, "pow": _pow}


# ----------------------------------------------------------------- expression tree


@dataclass(frozen=True)
class Const:
    value: float
    label: str | None = None


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


def to_source(node) -> str:
    """Render a tree as a fully parenthesised expression string."""
    if isinstance(node, Const):
        return node.label if node.label else repr(node.value)
    if isinstance(node, (Var, Param)):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_source(node.arg)})"
    if isinstance(node, BinOp):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_source(a) for a in node.args)})"
    raise TypeError(node)


def _contains_abs_w(node) -> bool:
    if isinstance(node, Call):
        if node.name == "abs" and node.args[0] == Var("w"):
            return True
        return any(_contains_abs_w(a) for a in node.args)
    if isinstance(node, Neg):
        return _contains_abs_w(node.arg)
    if isinstance(node, BinOp):
        return _contains_abs_w(node.left) or _contains_abs_w(node.right)
    return False


def _param_names(node, acc: set) -> set:
    if isinstance(node, Param):
        acc.add(node.name)
    elif isinstance(node, Neg):
        _param_names(node.arg, acc)
    elif isinstance(node, BinOp):
        _param_names(node.left, acc)
        _param_names(node.right, acc)
    elif isinstance(node, Call):
        for a in node.args:
            _param_names(a, acc)
    return acc


# ----------------------------------------------------------------------- parser

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^(),]))"
)


def _tokenize(source: str):
    pos = 0
    tokens = []
    n = len(source)
    while pos < n:
        if source[pos:].strip() == "":
            break
        m = _TOKEN.match(source, pos)
        if m is None or m.end() == pos:
            start = pos + (len(source[pos:]) - len(source[pos:].lstrip()))
            raise ParseError(f"unexpected character {source[start]!r}", start)
        kind = m.lastgroup
        text = m.group(kind)
        start = m.start(kind)
        if text == "**":
            text = "^"
        tokens.append((kind, text, start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


def _z_node():
    return BinOp("+", BinOp("+", Var("x"), Var("y")), BinOp("*", Const(2.0), Var("w")))


class _Parser:
    def __init__(self, source: str, params: Mapping[str, float]):
        self.tokens = _tokenize(source)
        self.i = 0
        self.params = params

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        kind, t, pos = self.take()
        if t != text or kind == "end":
            raise ParseError(f"expected {text!r}, found {t or 'end of input'!r}", pos)

    def parse(self):
        node = self.expr()
        kind, t, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {t!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        kind, t, _ = self.peek()
        if kind == "op" and t in ("+", "-"):
            self.take()
            arg = self.unary()
            return Neg(arg) if t == "-" else arg
        return self.power()

    def power(self):
        node = self.base()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            node = BinOp("^", node, self.unary())
        return node

    def base(self):
        kind, t, pos = self.take()
        if kind == "num":
            return Const(float(t))
        if kind == "op" and t == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "name":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                if t not in FUNCTIONS:
                    raise UnknownIdentifierError(f"unknown function {t!r}", pos)
                self.take()
                args = [self.expr()]
                while self.peek()[1] == ",":
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != FUNCTIONS[t]:
                    raise ParseError(f"{t} takes {FUNCTIONS[t]} argument(s), got {len(args)}", pos)
                return Call(t, tuple(args))
            if t in VARIABLES:
                return Var(t)
            if t == "z":
                return _z_node()
            if t in CONSTANTS:
                return Const(CONSTANTS[t], t)
            if t in FUNCTIONS:
                raise ParseError(f"function {t!r} used without arguments", pos)
            if t == "hbar" or t in self.params:
                return Param(t)
            raise UnboundParameterError(f"unbound parameter {t!r}", pos)
        raise ParseError(f"unexpected token {t or 'end of input'!r}", pos)


# ------------------------------------------------------------------- compilation


def _compile(node, abs_branch: int | None) -> Callable:
    """Turn a tree into a closure ``fn(x, y, w, params)``."""
    if isinstance(node, Const):
        c = node.value
        return lambda x, y, w, p: c
    if isinstance(node, Var):
        if node.name == "x":
            return lambda x, y, w, p: x
        if node.name == "y":
            return lambda x, y, w, p: y
        return lambda x, y, w, p: w
    if isinstance(node, Param):
        name = node.name
        return lambda x, y, w, p: p[name]
    if isinstance(node, Neg):
        g = _compile(node.arg, abs_branch)
        return lambda x, y, w, p: -g(x, y, w, p)
    if isinstance(node, BinOp):
        a = _compile(node.left, abs_branch)
        b = _compile(node.right, abs_branch)
        if node.op == "+":
            return lambda x, y, w, p: a(x, y, w, p) + b(x, y, w, p)
        if node.op == "-":
            return lambda x, y, w, p: a(x, y, w, p) - b(x, y, w, p)
        if node.op == "*":
            return lambda x, y, w, p: a(x, y, w, p) * b(x, y, w, p)
        if node.op == "/":
            return lambda x, y, w, p: _div(a(x, y, w, p), b(x, y, w, p))
        return lambda x, y, w, p: _pow(a(x, y, w, p), b(x, y, w, p))
    if isinstance(node, Call):
        if node.name == "abs" and node.args[0] == Var("w") and abs_branch is not None:
            s = float(abs_branch)
            return lambda x, y, w, p: w * s
        fn = _FUNCS[node.name]
        args = [_compile(a, abs_branch) for a in node.args]
        if len(args) == 1:
            g = args[0]
            return lambda x, y, w, p: fn(g(x, y, w, p))
        g, h = args
        return lambda x, y, w, p: fn(g(x, y, w, p), h(x, y, w, p))
    raise TypeError(node)


def _moments3(m) -> tuple[float, float, float]:
    x, y, w = m
    return float(x), float(y), float(w)


@dataclass(frozen=True)
class Functional:
    """A parsed uncertainty functional.

    ``abs_branch`` pins ``abs(w)`` to ``+w`` (``1``) or ``-w`` (``-1``); the
    pinned functional is smooth across ``w = 0`` and is only meaningful on
    the matching half space.
    """

    root: object
    params: Mapping[str, float]
    source: str = ""
    uses_abs_w: bool = False
    abs_branch: int | None = None
    _fn: Callable = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))
        missing = _param_names(self.root, set()) - set(self.params)
        if missing:
            raise UnboundParameterError(f"unbound parameter(s) {sorted(missing)}", 0)
        object.__setattr__(self, "_fn", _compile(self.root, self.abs_branch))

    @property
    def hbar(self) -> float:
        return self.params.get("hbar", 1.0)

    def __call__(self, x, y, w):
        return self.evaluate((x, y, w))

    def evaluate(self, m) -> float:
        x, y, w = _moments3(m)
        try:
            v = self._fn(x, y, w, self.params)
        except (OverflowError, ZeroDivisionError) as exc:
            raise DomainError(str(exc)) from exc
        if not math.isfinite(v):
            raise DomainError(f"non-finite value at {(x, y, w)}")
        return float(v)

    def value_and_gradient(self, m) -> tuple[float, Grad3]:
        x, y, w = _moments3(m)
        d = self._fn(Dual(x, 1.0, 0.0, 0.0), Dual(y, 0.0, 1.0, 0.0), Dual(w, 0.0, 0.0, 1.0), self.params)
        if not isinstance(d, Dual):
            d = Dual(d)
        g = Grad3(float(d.dx), float(d.dy), float(d.dw))
        if not math.isfinite(d.val):
            raise DomainError(f"non-finite value at {(x, y, w)}")
        if not all(math.isfinite(c) for c in g):
            raise NonDifferentiableError(f"non-finite gradient at {(x, y, w)}")
        return float(d.val), g

    def gradient(self, m) -> Grad3:
        return self.value_and_gradient(m)[1]

    def with_branch(self, branch: int | None) -> "Functional":
        if branch not in (None, 1, -1):
            raise ValueError("branch must be None, 1 or -1")
        return Functional(self.root, self.params, self.source, self.uses_abs_w, branch)

    def with_params(self, **params: float) -> "Functional":
        merged = dict(self.params)
        merged.update(params)
        return Functional(self.root, merged, self.source, self.uses_abs_w, self.abs_branch)

    def to_source(self) -> str:
        return to_source(self.root)


def parse(source: str, params: Mapping[str, float] | None = None, hbar: float = 1.0) -> Functional:
    """Parse ``source`` into a :class:`Functional`.

    ``hbar`` binds the constant of the same name unless ``params`` already
    provides it.
    """
    bound = {"hbar": float(hbar)}
    for k, v in (params or {}).items():
        bound[k] = float(v)
    root = _Parser(source, bound).parse()
    return Functional(root, bound, source, _contains_abs_w(root))


def evaluate(f: Functional, m: Sequence[float]) -> float:
    return f.evaluate(m)


def gradient(f: Functional, m: Sequence[float]) -> Grad3:
    return f.gradient(m)
