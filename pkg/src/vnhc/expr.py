"""Expression DSL: parsing, exact symbolic differentiation, evaluation.

Expressions are immutable trees over named symbols.  By convention the
velocity of a coordinate ``x`` is the symbol ``xd``.  Angles are plain
reals; nothing here wraps.

Grammar (precedence low to high): ``+ -`` < ``* /`` < unary ``-`` < ``^``
(right associative) < atoms.  Functions: sin cos tan exp log sqrt.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt")

_MATH_FN = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
}


class ExprError(ValueError):
    """Base class for DSL errors."""


class ParseError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class EvalError(ExprError):
    """Unbound symbol or numeric domain error during evaluation."""


@dataclass(frozen=True)
class Expr:
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __pow__(self, other):
        return pow_(self, as_expr(other))

    def __neg__(self):
        return neg(self)

    def __str__(self) -> str:
        return to_string(self)


@dataclass(frozen=True)
class Constant(Expr):
    value: float


@dataclass(frozen=True)
class Symbol(Expr):
    name: str


@dataclass(frozen=True)
class Unary(Expr):
    op: str  # "neg" or a function name
    child: Expr


@dataclass(frozen=True)
class Binary(Expr):
    op: str  # add sub mul div pow
    left: Expr
    right: Expr


ZERO = Constant(0.0)
ONE = Constant(1.0)


def as_expr(value) -> Expr:
    """Coerce a number, string (parsed as DSL) or Expr to an Expr."""
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, float)):
        return Constant(float(value))
    if isinstance(value, str):
        return parse(value)
    raise TypeError(f"cannot interpret {value!r} as an expression")


def _is_const(e: Expr, v: float | None = None) -> bool:
    return isinstance(e, Constant) and (v is None or e.value == v)


# Smart constructors: constant folding plus 0/1 identity elimination only.

def add(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Constant(a.value + b.value)
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    return Binary("add", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Constant(a.value - b.value)
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return neg(b)
    return Binary("sub", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Constant(a.value * b.value)
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return ZERO
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    return Binary("mul", a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is_const(b) and b.value != 0.0:
        if _is_const(a):
            return Constant(a.value / b.value)
        if b.value == 1.0:
            return a
    if _is_const(a, 0.0):
        return ZERO
    return Binary("div", a, b)


def pow_(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Constant(_pow(a.value, b.value, Binary("pow", a, b)))
    if _is_const(b, 1.0):
        return a
    if _is_const(b, 0.0):
        return ONE
    return Binary("pow", a, b)


def neg(a: Expr) -> Expr:
    if _is_const(a):
        return Constant(-a.value)
    if isinstance(a, Unary) and a.op == "neg":
        return a.child
    return Unary("neg", a)


def fn(name: str, child: Expr) -> Expr:
    if name not in FUNCTIONS:
        raise ExprError(f"unknown function {name!r}")
    if _is_const(child):
        try:
            return Constant(_MATH_FN[name](child.value))
        except ValueError:
            raise EvalError(f"domain error in {name}({child.value})") from None
    return Unary(name, child)


def _pow(base: float, exponent: float, node: Expr) -> float:
    try:
        return math.pow(base, exponent)
    except (ValueError, OverflowError):
        raise EvalError(f"domain error in {to_string(node)}") from None


# ---------------------------------------------------------------------------
# Parsing

_NUM_START = set("0123456789.")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def byte_offset(self, pos: int | None = None) -> int:
        p = self.pos if pos is None else pos
        return len(self.text[:p].encode("utf-8"))

    def error(self, message: str, pos: int | None = None):
        raise ParseError(message, self.byte_offset(pos))

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            self.error(f"expected {ch!r}")
        self.pos += 1

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek():
            self.error(f"unexpected {self.text[self.pos]!r}")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while True:
            c = self.peek()
            if c == "+":
                self.pos += 1
                e = add(e, self.term())
            elif c == "-":
                self.pos += 1
                e = sub(e, self.term())
            else:
                return e

    def term(self) -> Expr:
        e = self.factor()
        while True:
            c = self.peek()
            if c == "*":
                self.pos += 1
                e = mul(e, self.factor())
            elif c == "/":
                self.pos += 1
                e = div(e, self.factor())
            else:
                return e

    def factor(self) -> Expr:
        if self.peek() == "-":
            self.pos += 1
            return neg(self.factor())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek() == "^":
            self.pos += 1
            return pow_(base, self.factor())
        return base

    def atom(self) -> Expr:
        c = self.peek()
        if not c:
            self.error("unexpected end of input")
        if c == "(":
            self.pos += 1
            e = self.expr()
            self.expect(")")
            return e
        if c in _NUM_START:
            return self.number()
        if c.isalpha() or c == "_":
            return self.ident()
        self.error(f"unexpected {c!r}")

    def number(self) -> Expr:
        start = self.pos
        t = self.text
        while self.pos < len(t) and t[self.pos].isdigit():
            self.pos += 1
        if self.pos < len(t) and t[self.pos] == ".":
            self.pos += 1
            while self.pos < len(t) and t[self.pos].isdigit():
                self.pos += 1
        if self.pos < len(t) and t[self.pos] in "eE":
            mark = self.pos
            self.pos += 1
            if self.pos < len(t) and t[self.pos] in "+-":
                self.pos += 1
            if self.pos < len(t) and t[self.pos].isdigit():
                while self.pos < len(t) and t[self.pos].isdigit():
                    self.pos += 1
            else:
                self.pos = mark  # "2e" is the number 2 followed by symbol e
        lexeme = t[start:self.pos]
        try:
            return Constant(float(lexeme))
        except ValueError:
            self.error(f"malformed number {lexeme!r}", start)

    def ident(self) -> Expr:
        start = self.pos
        t = self.text
        while self.pos < len(t) and (t[self.pos].isalnum() or t[self.pos] == "_"):
            self.pos += 1
        name = t[start:self.pos]
        if self.peek() == "(":
            if name not in FUNCTIONS:
                self.error(f"unknown function {name!r}", start)
            self.pos += 1
            arg = self.expr()
            self.expect(")")
            return fn(name, arg)
        return Symbol(name)


def parse(text: str) -> Expr:
    """Parse DSL text into an Expr. Raises ParseError with a byte offset."""
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Evaluation

def evaluate(e: Expr, env: Mapping[str, float]) -> float:
    """Evaluate with every free symbol bound; unbound symbols are errors."""
    if isinstance(e, Constant):
        return e.value
    if isinstance(e, Symbol):
        try:
            return float(env[e.name])
        except KeyError:
            raise EvalError(f"unbound symbol {e.name!r}") from None
    if isinstance(e, Unary):
        v = evaluate(e.child, env)
        if e.op == "neg":
            return -v
        try:
            return _MATH_FN[e.op](v)
        except ValueError:
            raise EvalError(f"domain error in {to_string(e)}") from None
    assert isinstance(e, Binary)
    l = evaluate(e.left, env)
    r = evaluate(e.right, env)
    if e.op == "add":
        return l + r
    if e.op == "sub":
        return l - r
    if e.op == "mul":
        return l * r
    if e.op == "div":
        if r == 0.0:
            raise EvalError(f"division by zero in {to_string(e)}")
        return l / r
    return _pow(l, r, e)


def free_symbols(e: Expr) -> set[str]:
    if isinstance(e, Constant):
        return set()
    if isinstance(e, Symbol):
        return {e.name}
    if isinstance(e, Unary):
        return free_symbols(e.child)
    return free_symbols(e.left) | free_symbols(e.right)


# ---------------------------------------------------------------------------
# Differentiation

def diff(e: Expr, s: str) -> Expr:
    """Exact partial derivative with respect to the symbol named s."""
    if isinstance(e, Constant):
        return ZERO
    if isinstance(e, Symbol):
        return ONE if e.name == s else ZERO
    if isinstance(e, Unary):
        u, du = e.child, diff(e.child, s)
        if e.op == "neg":
            return neg(du)
        if e.op == "sin":
            return mul(fn("cos", u), du)
        if e.op == "cos":
            return neg(mul(fn("sin", u), du))
        if e.op == "tan":
            return div(du, pow_(fn("cos", u), Constant(2.0)))
        if e.op == "exp":
            return mul(e, du)
        if e.op == "log":
            return div(du, u)
        if e.op == "sqrt":
            return div(du, mul(Constant(2.0), e))
        raise ExprError(f"unknown unary op {e.op!r}")
    assert isinstance(e, Binary)
    u, v = e.left, e.right
    du, dv = diff(u, s), diff(v, s)
    if e.op == "add":
        return add(du, dv)
    if e.op == "sub":
        return sub(du, dv)
    if e.op == "mul":
        return add(mul(du, v), mul(u, dv))
    if e.op == "div":
        return div(sub(mul(du, v), mul(u, dv)), pow_(v, Constant(2.0)))
    if e.op == "pow":
        if _is_const(v):
            c = v.value
            return mul(mul(v, pow_(u, Constant(c - 1.0))), du)
        # general u^v = exp(v log u)
        return mul(e, add(mul(dv, fn("log", u)), mul(v, div(du, u))))
    raise ExprError(f"unknown binary op {e.op!r}")


# ---------------------------------------------------------------------------
# Printing

_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}
_SIGN = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}


def _prec(e: Expr) -> int:
    if isinstance(e, Binary):
        return _PREC[e.op]
    if isinstance(e, Unary) and e.op == "neg":
        return _PREC["neg"]
    return 5  # constants, symbols, function calls


def to_string(e: Expr) -> str:
    """Render so that parse(to_string(e)) reproduces e node for node."""
    if isinstance(e, Constant):
        v = e.value
        if v == int(v) and abs(v) < 1e16:
            return str(int(v))
        return repr(v)
    if isinstance(e, Symbol):
        return e.name
    if isinstance(e, Unary):
        if e.op == "neg":
            return "-" + _wrap(e.child, 4)
        return f"{e.op}({to_string(e.child)})"
    assert isinstance(e, Binary)
    p = _PREC[e.op]
    if e.op == "pow":
        # right-assoc; exponent position admits unary minus and pow
        return _wrap(e.left, 5) + "^" + _wrap(e.right, 3)
    left = _wrap(e.left, p)
    right = _wrap(e.right, p + 1)
    return f"{left} {_SIGN[e.op]} {right}"


def _wrap(e: Expr, min_prec: int) -> str:
    s = to_string(e)
    return f"({s})" if _prec(e) < min_prec else s


# ---------------------------------------------------------------------------
# Compilation to fast callables

def compile_exprs(
    exprs: Sequence[Expr],
    variables: Sequence[str],
    constants: Mapping[str, float] | None = None,
) -> Callable[..., tuple]:
    """Compile expressions to one function of the given positional variables.

    Constants (model parameters) are inlined.  A free symbol that is
    neither a variable nor a constant raises EvalError at compile time.
    """
    constants = constants or {}
    argnames = {name: f"_a{i}" for i, name in enumerate(variables)}

    def emit(e: Expr) -> str:
        if isinstance(e, Constant):
            return repr(e.value)
        if isinstance(e, Symbol):
            if e.name in argnames:
                return argnames[e.name]
            if e.name in constants:
                return repr(float(constants[e.name]))
            raise EvalError(f"unbound symbol {e.name!r}")
        if isinstance(e, Unary):
            if e.op == "neg":
                return f"(-{emit(e.child)})"
            return f"math.{e.op}({emit(e.child)})"
        assert isinstance(e, Binary)
        l, r = emit(e.left), emit(e.right)
        if e.op == "pow":
            return f"math.pow({l}, {r})"
        op = {"add": "+", "sub": "-", "mul": "*", "div": "/"}[e.op]
        return f"({l} {op} {r})"

    body = ", ".join(emit(e) for e in exprs)
    if len(exprs) == 1:
        body += ","
    args = ", ".join(argnames.values()) if argnames else ""
    src = f"def _kernel({args}):\n    return ({body})\n"
    namespace: dict = {"math": math}
    exec(src, namespace)
    return namespace["_kernel"]


def grid(rows: Iterable[Iterable]) -> list[list[Expr]]:
    """Coerce a nested iterable of numbers/strings/Exprs into an Expr grid."""
    return [[as_expr(x) for x in row] for row in rows]
