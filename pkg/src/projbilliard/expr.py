"""Arithmetic expressions over ``x1..xd`` with exact first derivatives.

Grammar, loosest binding first::

    expr  := term (('+' | '-') term)*
    term  := unary (('*' | '/') unary)*
    unary := '-' unary | power
    power := atom ('^' unary)?          # right-associative, binds tighter than '-'
    atom  := NUMBER | 'x' INDEX | FUNC '(' expr ')' | '(' expr ')'

so ``-x1^2`` is ``-(x1^2)`` and ``2^-1`` is ``0.5``.  Gradients use
forward-mode dual numbers, one pass per coordinate.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import EvalError, InputError, ParseError

FUNCTIONS = ("sin", "cos", "sinh", "cosh", "exp", "sqrt", "abs")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 1-based


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
    func: str
    arg: object


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", _byte_offset(text, pos))
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


def _byte_offset(text, pos):
    return len(text[:pos].encode("utf-8"))


class _Parser:
    def __init__(self, text, dimension):
        self.text = text
        self.dimension = dimension
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, message, tok=None):
        tok = tok or self.peek()
        what = "end of input" if tok[0] == "end" else repr(tok[1])
        raise ParseError(f"{message}, found {what}", _byte_offset(self.text, tok[2]))

    def expect(self, value):
        tok = self.peek()
        if tok[1] != value or tok[0] != "op":
            self.fail(f"expected {value!r}")
        return self.advance()

    def parse(self):
        node = self.expr()
        if self.peek()[0] != "end":
            self.fail("unexpected token")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self):
        node = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.advance()
            node = BinOp("^", node, self.unary())
        return node

    def atom(self):
        tok = self.peek()
        kind, text, pos = tok
        if kind == "num":
            self.advance()
            value = float(text)
            if not math.isfinite(value):
                self.fail("numeric literal overflows", tok)
            return Num(value)
        if kind == "ident":
            self.advance()
            m = re.fullmatch(r"x(\d+)", text)
            if m:
                index = int(m.group(1))
                if not 1 <= index <= self.dimension:
                    raise InputError(
                        f"variable {text} out of range for dimension {self.dimension}"
                        f" (byte offset {_byte_offset(self.text, pos)})"
                    )
                return Var(index)
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            self.fail("unknown identifier", tok)
        if kind == "op" and text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        self.fail("expected a number, variable, function or '('")


class Expression:
    """A parsed expression in ``dimension`` variables."""

    def __init__(self, root, dimension):
        self.root = root
        self.dimension = dimension

    def __eq__(self, other):
        return isinstance(other, Expression) and (self.root, self.dimension) == (other.root, other.dimension)

    def __hash__(self):
        return hash((self.root, self.dimension))

    def __str__(self):
        return to_text(self.root)

    def __repr__(self):
        return f"Expression({str(self)!r}, dimension={self.dimension})"

    def __call__(self, x):
        return evaluate(self, x)

    def gradient(self, x):
        return eval_with_gradient(self, x)[1]


def parse_expression(text, dimension):
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError("invalid UTF-8", exc.start) from exc
    if not isinstance(dimension, int) or dimension < 1:
        raise InputError("dimension must be a positive integer")
    try:
        root = _Parser(text, dimension).parse()
    except RecursionError:
        raise ParseError("expression nested too deeply", 0) from None
    return Expression(root, dimension)


# -- printing ---------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _prec(node):
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    return 5


def _wrap(node, min_prec):
    s = to_text(node)
    return f"({s})" if _prec(node) < min_prec else s


def to_text(node):
    """Print with the fewest parentheses that parse back to the same tree."""
    if isinstance(node, Expression):
        node = node.root
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return f"x{node.index}"
    if isinstance(node, Neg):
        return "-" + _wrap(node.arg, 3)
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})"
    if node.op == "^":
        return f"{_wrap(node.left, 5)}^{_wrap(node.right, 3)}"
    p = _PREC[node.op]
    return f"{_wrap(node.left, p)} {node.op} {_wrap(node.right, p + 1)}"


# -- evaluation -------------------------------------------------------------


def _fail(node, message):
    raise EvalError(f"{message} in node {to_text(node)!r}", node)


def _finite(node, value):
    if not math.isfinite(value):
        _fail(node, "non-finite result")
    return value


def _point(e, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (e.dimension,):
        raise InputError(f"point has shape {x.shape}, expected ({e.dimension},)")
    if not np.all(np.isfinite(x)):
        raise InputError("point has non-finite entries")
    return [float(v) for v in x]


def _pow_value(node, a, b):
    if float(b).is_integer():
        n = int(b)
        if a == 0.0 and n < 0:
            _fail(node, "zero raised to a negative power")
        try:
            return a**n
        except OverflowError:
            _fail(node, "overflow")
    if a > 0.0:
        try:
            return a**b
        except OverflowError:
            _fail(node, "overflow")
    if a == 0.0 and b > 0.0:
        return 0.0
    _fail(node, f"non-positive base {a!r} with non-integer exponent {b!r}")


def _value(node, x):
    try:
        return _value_node(node, x)
    except (OverflowError, ZeroDivisionError):
        _fail(node, "overflow")


def _value_node(node, x):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return x[node.index - 1]
    if isinstance(node, Neg):
        return -_value(node.arg, x)
    if isinstance(node, Call):
        a = _value(node.arg, x)
        f = node.func
        if f == "sqrt":
            if a < 0.0:
                _fail(node, f"square root of negative value {a!r}")
            return math.sqrt(a)
        if f == "abs":
            return abs(a)
        try:
            return _finite(node, getattr(math, f)(a))
        except OverflowError:
            _fail(node, "overflow")
    a = _value(node.left, x)
    b = _value(node.right, x)
    op = node.op
    if op == "+":
        return _finite(node, a + b)
    if op == "-":
        return _finite(node, a - b)
    if op == "*":
        return _finite(node, a * b)
    if op == "/":
        if b == 0.0:
            _fail(node, "division by zero")
        return _finite(node, a / b)
    return _finite(node, _pow_value(node, a, b))


def evaluate(e, x):
    """Value of ``e`` at ``x``."""
    return _value(e.root, _point(e, x))


def _dual(node, x, k):
    """(value, d value / d x_k) by forward propagation."""
    try:
        return _dual_node(node, x, k)
    except (OverflowError, ZeroDivisionError):
        _fail(node, "overflow")


def _dual_node(node, x, k):
    if isinstance(node, Num):
        return node.value, 0.0
    if isinstance(node, Var):
        return x[node.index - 1], (1.0 if node.index - 1 == k else 0.0)
    if isinstance(node, Neg):
        a, da = _dual(node.arg, x, k)
        return -a, -da
    if isinstance(node, Call):
        a, da = _dual(node.arg, x, k)
        f = node.func
        if f == "sqrt":
            if a < 0.0:
                _fail(node, f"square root of negative value {a!r}")
            r = math.sqrt(a)
            if r == 0.0:
                if da != 0.0:
                    _fail(node, "square root is not differentiable at 0")
                return 0.0, 0.0
            return r, da / (2.0 * r)
        if f == "abs":
            # derivative at 0 taken as 0
            return abs(a), math.copysign(1.0, a) * da if a != 0.0 else 0.0
        try:
            if f == "sin":
                return math.sin(a), math.cos(a) * da
            if f == "cos":
                return math.cos(a), -math.sin(a) * da
            if f == "sinh":
                return _finite(node, math.sinh(a)), _finite(node, math.cosh(a) * da)
            if f == "cosh":
                return _finite(node, math.cosh(a)), _finite(node, math.sinh(a) * da)
            v = _finite(node, math.exp(a))
            return v, _finite(node, v * da)
        except OverflowError:
            _fail(node, "overflow")
    a, da = _dual(node.left, x, k)
    b, db = _dual(node.right, x, k)
    op = node.op
    if op == "+":
        return _finite(node, a + b), da + db
    if op == "-":
        return _finite(node, a - b), da - db
    if op == "*":
        return _finite(node, a * b), _finite(node, a * db + da * b)
    if op == "/":
        if b == 0.0:
            _fail(node, "division by zero")
        v = _finite(node, a / b)
        return v, _finite(node, (da - v * db) / b)
    v = _pow_value(node, a, b)
    if db == 0.0:
        if da == 0.0:
            return v, 0.0
        if float(b).is_integer():
            n = int(b)
            return v, _finite(node, n * a ** (n - 1) * da) if n != 0 else 0.0
        if a > 0.0:
            return v, _finite(node, b * v / a * da)
        if b > 1.0:
            return v, 0.0
        _fail(node, "power is not differentiable at a zero base")
    if a <= 0.0:
        _fail(node, f"variable exponent needs a positive base, got {a!r}")
    return v, _finite(node, v * (db * math.log(a) + b * da / a))


def eval_with_gradient(e, x):
    """Value and exact gradient of ``e`` at ``x``."""
    pt = _point(e, x)
    value = None
    grad = np.empty(e.dimension)
    for k in range(e.dimension):
        value, grad[k] = _dual(e.root, pt, k)
    return value, grad
