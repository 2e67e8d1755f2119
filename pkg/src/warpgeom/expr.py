"""Scalar expression language over named chart coordinates.

Expressions are parsed into an immutable tree and evaluated in batches over
points with numpy.  ``jet2`` evaluation propagates value, gradient and Hessian
through the tree by forward-mode rules, so derivatives are exact up to
rounding.  A central-difference path (``fd_jet2_batch``) exists only as an
independent cross-check.

Grammar (highest precedence first)::

    atom   := number | ident | ident '(' expr ')' | '(' expr ')'
    power  := atom ('^' unary)?          # right associative
    unary  := '-' unary | '+' unary | power
    term   := unary (('*' | '/') unary)*
    expr   := term (('+' | '-') term)*
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

__all__ = [
    "Num", "Var", "Const", "Neg", "BinOp", "Call", "Node",
    "Expr", "Jet2", "parse", "to_text", "FUNCTIONS", "BUILTIN_CONSTANTS",
    "ExprError", "ParseError", "UnknownIdentifierError", "ArityError",
    "EvaluationDomainError", "fd_jet2_batch", "constant", "const_value",
]


class ExprError(Exception):
    """Base class for expression errors."""


class ParseError(ExprError, ValueError):
    def __init__(self, message: str, offset: int, text: str = ""):
        self.offset = offset
        self.text = text
        super().__init__(f"{message} (at byte {offset})")


class UnknownIdentifierError(ParseError):
    pass


class ArityError(ParseError):
    pass


class EvaluationDomainError(ExprError, ArithmeticError):
    pass


# --------------------------------------------------------------------------
# tree
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str
    index: int


@dataclass(frozen=True)
class Const:
    name: str
    value: float


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, Const, Neg, BinOp, Call]

FUNCTIONS = ("sin", "cos", "tan", "sinh", "cosh", "tanh", "coth",
             "exp", "ln", "sqrt", "abs")
BUILTIN_CONSTANTS = {"pi": math.pi}


def has_var(node: Node) -> bool:
    if isinstance(node, Var):
        return True
    if isinstance(node, (Num, Const)):
        return False
    if isinstance(node, Neg):
        return has_var(node.operand)
    if isinstance(node, BinOp):
        return has_var(node.left) or has_var(node.right)
    return has_var(node.arg)


def var_names(node: Node) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, (Num, Const)):
        return set()
    if isinstance(node, Neg):
        return var_names(node.operand)
    if isinstance(node, BinOp):
        return var_names(node.left) | var_names(node.right)
    return var_names(node.arg)


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[a-zA-Z][a-zA-Z0-9_]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.lastgroup is None:
            stripped = len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[pos + stripped]!r}",
                             _byte_offset(text, pos + stripped), text)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


class _Parser:
    def __init__(self, text: str, vars: Sequence[str], consts: Mapping[str, float]):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.vars = {name: k for k, name in enumerate(vars)}
        self.consts = consts

    def error(self, cls, message, tok=None):
        tok = tok or self.tokens[self.i]
        return cls(message, _byte_offset(self.text, tok[2]), self.text)

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        tok = self.peek()
        if tok[1] != value or tok[0] == "num":
            found = tok[1] or "end of input"
            raise self.error(ParseError, f"expected {value!r}, found {found!r}")
        return self.advance()

    def parse(self) -> Node:
        node = self.expr()
        if self.peek()[0] != "end":
            raise self.error(ParseError, f"unexpected token {self.peek()[1]!r}")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.advance()
            return Neg(self.unary())
        if tok[0] == "op" and tok[1] == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        tok = self.peek()
        kind, value, _ = tok
        if kind == "num":
            self.advance()
            return Num(float(value))
        if kind == "ident":
            self.advance()
            nxt = self.peek()
            if nxt[0] == "op" and nxt[1] == "(":
                if value not in FUNCTIONS:
                    raise self.error(UnknownIdentifierError, f"unknown function {value!r}", tok)
                self.advance()
                args = [self.expr()]
                while self.peek()[0] == "op" and self.peek()[1] == ",":
                    self.advance()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != 1:
                    raise self.error(ArityError,
                                     f"{value} takes 1 argument, got {len(args)}", tok)
                return Call(value, args[0])
            if value in FUNCTIONS:
                raise self.error(ArityError, f"function {value!r} used without an argument", tok)
            if value in self.vars:
                return Var(value, self.vars[value])
            if value in self.consts:
                return Const(value, float(self.consts[value]))
            raise self.error(UnknownIdentifierError, f"unknown identifier {value!r}", tok)
        if kind == "op" and value == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        found = value or "end of input"
        raise self.error(ParseError, f"unexpected token {found!r}")


def parse(text: str, vars: Sequence[str] = (), consts: Mapping[str, float] | None = None) -> "Expr":
    """Parse ``text`` into an :class:`Expr` over coordinates ``vars``.

    ``consts`` binds extra names to numbers; ``pi`` is always available
    unless shadowed by a coordinate.
    """
    vars = tuple(vars)
    if len(set(vars)) != len(vars):
        raise ValueError(f"duplicate variable names in {vars}")
    consts = dict(consts or {})
    clash = set(consts) & set(vars)
    if clash:
        raise ValueError(f"constants shadow variables: {sorted(clash)}")
    table = {k: v for k, v in BUILTIN_CONSTANTS.items() if k not in vars}
    table.update(consts)
    if not isinstance(text, str) or not text.strip():
        raise ParseError("empty expression", 0, text if isinstance(text, str) else "")
    return Expr(_Parser(text, vars, table).parse(), vars)


# --------------------------------------------------------------------------
# printer
# --------------------------------------------------------------------------

_ADD, _MUL, _UNARY, _POW, _ATOM = 1, 2, 3, 4, 5


def _fmt_num(value: float) -> str:
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _fmt(node: Node) -> tuple[str, int]:
    if isinstance(node, Num):
        if node.value < 0 or math.copysign(1.0, node.value) < 0:
            # only reachable for programmatically built trees
            return f"({_fmt_num(node.value)})", _ATOM
        return _fmt_num(node.value), _ATOM
    if isinstance(node, (Var, Const)):
        return node.name, _ATOM
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})", _ATOM
    if isinstance(node, Neg):
        return "-" + _wrap(node.operand, _UNARY), _UNARY
    if node.op in "+-":
        return f"{_wrap(node.left, _ADD)} {node.op} {_wrap(node.right, _MUL)}", _ADD
    if node.op in "*/":
        return f"{_wrap(node.left, _MUL)} {node.op} {_wrap(node.right, _UNARY)}", _MUL
    return f"{_wrap(node.left, _ATOM)}^{_wrap(node.right, _UNARY)}", _POW


def _wrap(node: Node, min_level: int) -> str:
    text, level = _fmt(node)
    return text if level >= min_level else f"({text})"


def to_text(node: Node) -> str:
    return _fmt(node)[0]


# --------------------------------------------------------------------------
# evaluation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Jet2:
    """Value, gradient and Hessian of a scalar at one point or a batch.

    For a batch of ``N`` points the shapes are ``(N,)``, ``(N, d)`` and
    ``(N, d, d)``; for a single point the leading axis is dropped.
    """

    value: np.ndarray | float
    grad: np.ndarray
    hess: np.ndarray


class _J:
    __slots__ = ("v", "g", "h")

    def __init__(self, v, g=None, h=None):
        self.v, self.g, self.h = v, g, h


class _Evaluator:
    def __init__(self, X: np.ndarray, order: int, strict: bool):
        self.X = X
        self.n, self.d = X.shape
        self.order = order
        self.strict = strict
        self.bad = np.zeros(self.n, dtype=bool)

    # helpers -------------------------------------------------------------
    def const(self, c: float) -> _J:
        v = np.full(self.n, c)
        if self.order == 0:
            return _J(v)
        return _J(v, np.zeros((self.n, self.d)), np.zeros((self.n, self.d, self.d)))

    def domain(self, mask: np.ndarray, message: str):
        if mask.any():
            if self.strict:
                raise EvaluationDomainError(message)
            self.bad |= mask

    def chain(self, a: _J, f0, f1, f2) -> _J:
        if self.order == 0:
            return _J(f0)
        g = f1[:, None] * a.g
        h = f1[:, None, None] * a.h + f2[:, None, None] * a.g[:, :, None] * a.g[:, None, :]
        return _J(f0, g, h)

    # nodes ---------------------------------------------------------------
    def run(self, node: Node) -> _J:
        if isinstance(node, Num):
            return self.const(node.value)
        if isinstance(node, Const):
            return self.const(node.value)
        if isinstance(node, Var):
            out = self.const(0.0)
            out.v = self.X[:, node.index].copy()
            if self.order:
                out.g[:, node.index] = 1.0
            return out
        if isinstance(node, Neg):
            a = self.run(node.operand)
            if self.order == 0:
                return _J(-a.v)
            return _J(-a.v, -a.g, -a.h)
        if isinstance(node, Call):
            return self.call(node.func, self.run(node.arg))
        if node.op == "^":
            return self.power(node)
        a, b = self.run(node.left), self.run(node.right)
        if node.op == "+":
            return _J(a.v + b.v, *((a.g + b.g, a.h + b.h) if self.order else ()))
        if node.op == "-":
            return _J(a.v - b.v, *((a.g - b.g, a.h - b.h) if self.order else ()))
        if node.op == "*":
            return self.mul(a, b)
        self.domain(b.v == 0, "division by zero")
        return self.mul(a, self.reciprocal(b))

    def mul(self, a: _J, b: _J) -> _J:
        v = a.v * b.v
        if self.order == 0:
            return _J(v)
        g = a.v[:, None] * b.g + b.v[:, None] * a.g
        h = (a.v[:, None, None] * b.h + b.v[:, None, None] * a.h
             + a.g[:, :, None] * b.g[:, None, :] + b.g[:, :, None] * a.g[:, None, :])
        return _J(v, g, h)

    def reciprocal(self, b: _J) -> _J:
        inv = 1.0 / b.v
        return self.chain(b, inv, -inv * inv, 2.0 * inv * inv * inv)

    def power(self, node: BinOp) -> _J:
        base = self.run(node.left)
        if not has_var(node.right):
            expo = float(_Evaluator(np.zeros((1, self.d)), 0, True).run(node.right).v[0])
            if expo.is_integer() and abs(expo) <= 1024:
                return self.int_power(base, int(expo))
            exponent = self.const(expo)
        else:
            exponent = self.run(node.right)
        # variable or fractional exponent: exp(y * ln x), x > 0 required
        self.domain(~(base.v > 0), "non-integer power of a non-positive base")
        return self.call("exp", self.mul(exponent, self.call("ln", base)))

    def int_power(self, a: _J, n: int) -> _J:
        if n < 0:
            self.domain(a.v == 0, "division by zero in negative power")
            return self.reciprocal(self.int_power(a, -n))
        f0 = _ipow(a.v, n)
        if self.order == 0:
            return _J(f0)
        f1 = n * _ipow(a.v, n - 1) if n >= 1 else np.zeros(self.n)
        f2 = n * (n - 1) * _ipow(a.v, n - 2) if n >= 2 else np.zeros(self.n)
        return self.chain(a, f0, f1, f2)

    def call(self, name: str, a: _J) -> _J:
        x = a.v
        if name == "sin":
            s, c = np.sin(x), np.cos(x)
            return self.chain(a, s, c, -s)
        if name == "cos":
            s, c = np.sin(x), np.cos(x)
            return self.chain(a, c, -s, -c)
        if name == "tan":
            c = np.cos(x)
            self.domain(c == 0, "tan at a pole")
            t = np.tan(x)
            sec2 = 1.0 + t * t
            return self.chain(a, t, sec2, 2.0 * t * sec2)
        if name == "sinh":
            s, c = np.sinh(x), np.cosh(x)
            return self.chain(a, s, c, s)
        if name == "cosh":
            s, c = np.sinh(x), np.cosh(x)
            return self.chain(a, c, s, c)
        if name == "tanh":
            t = np.tanh(x)
            d = 1.0 - t * t
            return self.chain(a, t, d, -2.0 * t * d)
        if name == "coth":
            self.domain(x == 0, "coth at 0")
            ct = 1.0 / np.tanh(x)
            d = 1.0 - ct * ct
            return self.chain(a, ct, d, -2.0 * ct * d)
        if name == "exp":
            e = np.exp(x)
            return self.chain(a, e, e, e)
        if name == "ln":
            self.domain(~(x > 0), "ln of a non-positive value")
            inv = 1.0 / x
            return self.chain(a, np.log(x), inv, -inv * inv)
        if name == "sqrt":
            if self.order:
                self.domain(~(x > 0), "sqrt derivative at a non-positive value")
            else:
                self.domain(~(x >= 0), "sqrt of a negative value")
            r = np.sqrt(x)
            if self.order == 0:
                return _J(r)
            return self.chain(a, r, 0.5 / r, -0.25 / (r * x))
        if name == "abs":
            s = np.sign(x)
            return self.chain(a, np.abs(x), s, np.zeros_like(x))
        raise ExprError(f"unknown function {name!r}")


def _ipow(x: np.ndarray, n: int) -> np.ndarray:
    # repeated multiplication keeps negative bases legal
    out = np.ones_like(x)
    for _ in range(n):
        out = out * x
    return out


def _evaluate(node: Node, X: np.ndarray, order: int, strict: bool):
    ev = _Evaluator(X, order, strict)
    with np.errstate(all="ignore"):
        res = ev.run(node)
    finite = np.isfinite(res.v)
    if order:
        finite &= np.isfinite(res.g).all(axis=1) & np.isfinite(res.h).all(axis=(1, 2))
    if strict and not finite.all():
        raise EvaluationDomainError("non-finite result")
    bad = ev.bad | ~finite
    return res, bad


# --------------------------------------------------------------------------
# public wrapper
# --------------------------------------------------------------------------


def constant(value: float, vars: Sequence[str] = ()) -> "Expr":
    return Expr(Num(float(value)), tuple(vars))


def _as_node(other, vars) -> Node:
    if isinstance(other, Expr):
        if other.vars != vars and var_names(other.root):
            other = other.rebind(vars)
        return other.root
    if isinstance(other, (int, float)):
        return Num(float(other))
    raise TypeError(f"cannot combine Expr with {type(other).__name__}")


@dataclass(frozen=True)
class Expr:
    """A parsed expression bound to an ordered list of coordinate names."""

    root: Node
    vars: tuple[str, ...]

    def __str__(self) -> str:
        return to_text(self.root)

    def __repr__(self) -> str:
        return f"Expr({to_text(self.root)!r}, vars={self.vars})"

    @property
    def dim(self) -> int:
        return len(self.vars)

    def variables(self) -> set[str]:
        return var_names(self.root)

    def is_constant(self) -> bool:
        return not has_var(self.root)

    def rebind(self, vars: Sequence[str]) -> "Expr":
        """Re-resolve variable references against a new coordinate list."""
        vars = tuple(vars)
        index = {name: k for k, name in enumerate(vars)}
        missing = self.variables() - set(index)
        if missing:
            raise ExprError(f"variables {sorted(missing)} not in {vars}")

        def walk(n: Node) -> Node:
            if isinstance(n, Var):
                return Var(n.name, index[n.name])
            if isinstance(n, Neg):
                return Neg(walk(n.operand))
            if isinstance(n, BinOp):
                return BinOp(n.op, walk(n.left), walk(n.right))
            if isinstance(n, Call):
                return Call(n.func, walk(n.arg))
            return n

        return Expr(walk(self.root), vars)

    def substitute(self, values: Mapping[str, float]) -> "Expr":
        """Replace the named variables by numeric literals (restriction)."""

        def walk(n: Node) -> Node:
            if isinstance(n, Var) and n.name in values:
                return Num(float(values[n.name]))
            if isinstance(n, Neg):
                return Neg(walk(n.operand))
            if isinstance(n, BinOp):
                return BinOp(n.op, walk(n.left), walk(n.right))
            if isinstance(n, Call):
                return Call(n.func, walk(n.arg))
            return n

        return Expr(walk(self.root), self.vars)

    # arithmetic builders ---------------------------------------------------
    def _bin(self, op, other, reverse=False):
        o = _as_node(other, self.vars)
        return Expr(BinOp(op, o, self.root) if reverse else BinOp(op, self.root, o), self.vars)

    def __add__(self, other):
        return self._bin("+", other)

    def __radd__(self, other):
        return self._bin("+", other, True)

    def __sub__(self, other):
        return self._bin("-", other)

    def __rsub__(self, other):
        return self._bin("-", other, True)

    def __mul__(self, other):
        return self._bin("*", other)

    def __rmul__(self, other):
        return self._bin("*", other, True)

    def __truediv__(self, other):
        return self._bin("/", other)

    def __rtruediv__(self, other):
        return self._bin("/", other, True)

    def __pow__(self, other):
        return self._bin("^", other)

    def __neg__(self):
        return Expr(Neg(self.root), self.vars)

    def apply(self, func: str) -> "Expr":
        if func not in FUNCTIONS:
            raise ExprError(f"unknown function {func!r}")
        return Expr(Call(func, self.root), self.vars)

    # evaluation -------------------------------------------------------------
    def _points(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.dim:
            raise ValueError(f"expected points of dimension {self.dim}, got {X.shape[1]}")
        return X

    def eval(self, point) -> float:
        point = np.asarray(point, dtype=float).reshape(-1)
        return float(self.eval_batch(point[None, :])[0])

    def eval_batch(self, X) -> np.ndarray:
        res, _ = _evaluate(self.root, self._points(X), 0, strict=True)
        return res.v

    def eval_masked(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Evaluate without raising; returns values and a mask of failed points."""
        res, bad = _evaluate(self.root, self._points(X), 0, strict=False)
        return res.v, bad

    def jet2(self, point) -> Jet2:
        point = np.asarray(point, dtype=float).reshape(-1)
        j = self.jet2_batch(point[None, :])
        return Jet2(float(j.value[0]), j.grad[0], j.hess[0])

    def jet2_batch(self, X) -> Jet2:
        res, _ = _evaluate(self.root, self._points(X), 2, strict=True)
        h = 0.5 * (res.h + np.swapaxes(res.h, 1, 2))
        return Jet2(res.v, res.g, h)


def const_value(text: str | float | int, consts: Mapping[str, float] | None = None) -> float:
    """Evaluate a variable-free expression (numbers pass through)."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return float(text)
    return parse(str(text), (), consts).eval(np.zeros(0))


def fd_jet2_batch(expr: Expr, X, h1: float = 1e-5, h2: float = 1e-4) -> Jet2:
    """Central-difference value/gradient/Hessian; the independent oracle path.

    Steps are relative: ``h * max(1, |x_i|)``.
    """
    X = expr._points(X)
    n, d = X.shape
    f = expr.eval_batch
    val = f(X)
    grad = np.empty((n, d))
    hess = np.empty((n, d, d))
    s1 = h1 * np.maximum(1.0, np.abs(X))
    s2 = h2 * np.maximum(1.0, np.abs(X))
    for i in range(d):
        e = np.zeros((n, d))
        e[:, i] = s1[:, i]
        grad[:, i] = (f(X + e) - f(X - e)) / (2 * s1[:, i])
        e2 = np.zeros((n, d))
        e2[:, i] = s2[:, i]
        hess[:, i, i] = (f(X + e2) - 2 * val + f(X - e2)) / s2[:, i] ** 2
    for i in range(d):
        for j in range(i + 1, d):
            ei = np.zeros((n, d))
            ej = np.zeros((n, d))
            ei[:, i] = s2[:, i]
            ej[:, j] = s2[:, j]
            v = (f(X + ei + ej) - f(X + ei - ej) - f(X - ei + ej) + f(X - ei - ej)) / (
                4 * s2[:, i] * s2[:, j])
            hess[:, i, j] = hess[:, j, i] = v
    return Jet2(val, grad, hess)
