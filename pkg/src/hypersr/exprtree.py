"""Immutable expression trees over shifted invariants, with exact derivatives.

Trees represent scalar energy functions W(x0, ..., x_{k-1}).  Evaluation
propagates value, gradient and Hessian simultaneously through every node
(second-order forward mode), so derivatives are exact rather than finite
differences.  Invalid evaluations (log of a non-positive number, division by
zero, ...) propagate NaN/inf instead of being clamped: downstream fitness
code treats non-finite results as "candidate invalid".
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

__all__ = [
    "Expr",
    "Const",
    "Var",
    "Op",
    "SecondOrderValue",
    "UNARY_OPS",
    "BINARY_OPS",
    "ALL_OPS",
    "evaluate",
    "evaluate_batch",
    "evaluate_with_derivatives",
    "evaluate_d2_batch",
    "complexity",
    "parse",
    "format_expr",
    "simplify",
    "to_json",
    "from_json",
    "iter_nodes",
    "operators_used",
    "is_constant_expr",
]

UNARY_OPS = frozenset({"exp", "log", "sqrt", "neg", "macaulay"})
BINARY_OPS = frozenset({"add", "sub", "mul", "div", "pow"})
ALL_OPS = UNARY_OPS | BINARY_OPS


class Expr:
    """Base class; concrete nodes are Const, Var and Op."""

    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Const(Expr):
    value: float

    def __post_init__(self):
        v = float(self.value)
        if not np.isfinite(v):
            raise ValueError(f"constant must be finite, got {v!r}")
        object.__setattr__(self, "value", v)


@dataclass(frozen=True, slots=True)
class Var(Expr):
    index: int

    def __post_init__(self):
        if self.index < 0:
            raise ValueError(f"variable index must be >= 0, got {self.index}")


@dataclass(frozen=True, slots=True)
class Op(Expr):
    kind: str
    args: tuple

    def __post_init__(self):
        if self.kind not in ALL_OPS:
            raise ValueError(f"unknown operator {self.kind!r}")
        arity = 1 if self.kind in UNARY_OPS else 2
        if len(self.args) != arity:
            raise ValueError(f"{self.kind} expects {arity} args, got {len(self.args)}")
        object.__setattr__(self, "args", tuple(self.args))


@dataclass(frozen=True)
class SecondOrderValue:
    """Value, gradient and (exactly symmetric) Hessian at one input point."""

    value: float
    gradient: np.ndarray
    hessian: np.ndarray


def iter_nodes(expr: Expr) -> Iterator[Expr]:
    """Depth-first pre-order walk."""
    stack = [expr]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, Op):
            stack.extend(reversed(node.args))


def complexity(expr: Expr) -> int:
    """Node count: constants, variables and operators each count 1."""
    return sum(1 for _ in iter_nodes(expr))


def operators_used(expr: Expr) -> frozenset:
    return frozenset(n.kind for n in iter_nodes(expr) if isinstance(n, Op))


def is_constant_expr(expr: Expr) -> bool:
    return not any(isinstance(n, Var) for n in iter_nodes(expr))


def max_var_index(expr: Expr) -> int:
    """Largest variable index in the tree, or -1 if there are none."""
    return max((n.index for n in iter_nodes(expr) if isinstance(n, Var)), default=-1)


# ---------------------------------------------------------------------------
# Evaluation (batched over N points, second-order forward propagation)
# ---------------------------------------------------------------------------

def _const_fold(expr: Expr) -> float:
    """Evaluate a constant subtree to a scalar (may be non-finite)."""
    return evaluate(expr, np.zeros(max(max_var_index(expr) + 1, 1)))


def _d2(expr: Expr, x: np.ndarray):
    """Return (value (N,), grad (k,N), hess (k,k,N)) for inputs x of shape (k,N)."""
    k, n = x.shape
    if isinstance(expr, Const):
        return (
            np.full(n, expr.value),
            np.zeros((k, n)),
            np.zeros((k, k, n)),
        )
    if isinstance(expr, Var):
        if expr.index >= k:
            raise IndexError(f"variable index {expr.index} out of range for {k} features")
        g = np.zeros((k, n))
        g[expr.index] = 1.0
        return x[expr.index].copy(), g, np.zeros((k, k, n))

    kind = expr.kind
    if kind in BINARY_OPS:
        va, ga, ha = _d2(expr.args[0], x)
        if kind == "pow" and is_constant_expr(expr.args[1]):
            p = _const_fold(expr.args[1])
            return _pow_const(va, ga, ha, p)
        vb, gb, hb = _d2(expr.args[1], x)
        if kind == "add":
            return va + vb, ga + gb, ha + hb
        if kind == "sub":
            return va - vb, ga - gb, ha - hb
        if kind == "mul":
            v = va * vb
            g = ga * vb + gb * va
            h = ha * vb + hb * va + _sym_outer(ga, gb)
            return v, g, h
        if kind == "div":
            v = va / vb
            g = (ga - v * gb) / vb
            h = (ha - _sym_outer(g, gb) - v * hb) / vb
            return v, g, h
        # pow with a general exponent: a**b = exp(b * log a)
        lv, lg, lh = _unary_chain(va, ga, ha, np.log(va), 1.0 / va, -1.0 / va**2)
        mv = vb * lv
        mg = gb * lv + lg * vb
        mh = hb * lv + lh * vb + _sym_outer(gb, lg)
        ev = np.exp(mv)
        return _unary_chain(mv, mg, mh, ev, ev, ev)

    # unary operators
    va, ga, ha = _d2(expr.args[0], x)
    if kind == "neg":
        return -va, -ga, -ha
    if kind == "exp":
        ev = np.exp(va)
        return _unary_chain(va, ga, ha, ev, ev, ev)
    if kind == "log":
        return _unary_chain(va, ga, ha, np.log(va), 1.0 / va, -1.0 / va**2)
    if kind == "sqrt":
        sv = np.sqrt(va)
        return _unary_chain(va, ga, ha, sv, 0.5 / sv, -0.25 / (sv * va))
    if kind == "macaulay":
        # derivative at exactly 0 is 0 (one-sided subgradient convention)
        mask = (va > 0.0).astype(float)
        return np.maximum(va, 0.0), ga * mask, ha * mask
    raise AssertionError(kind)


def _sym_outer(ga: np.ndarray, gb: np.ndarray) -> np.ndarray:
    """ga_i gb_j + gb_i ga_j; symmetric bit-exactly (float + is commutative)."""
    return ga[:, None, :] * gb[None, :, :] + gb[:, None, :] * ga[None, :, :]


def _unary_chain(v, g, h, fv, f1, f2):
    """Chain rule through a scalar function with derivatives f1, f2 at v."""
    return fv, f1 * g, f1 * h + f2 * _half_outer(g)


def _half_outer(g: np.ndarray) -> np.ndarray:
    """g_i g_j, symmetric bit-exactly (float * is commutative)."""
    return g[:, None, :] * g[None, :, :]


def _pow_const(va, ga, ha, p: float):
    """Power rule for a constant exponent; handles negative bases for integer p."""
    v = np.power(va, p)
    f1 = p * np.power(va, p - 1.0)
    f2 = p * (p - 1.0) * np.power(va, p - 2.0)
    return v, f1 * ga, f1 * ha + f2 * _half_outer(ga)


def evaluate_d2_batch(expr: Expr, inputs: np.ndarray):
    """Evaluate value/gradient/Hessian at many points.

    inputs has shape (k, N); returns (value (N,), grad (k, N), hess (k, k, N)).
    Non-finite intermediate results propagate to the output.
    """
    x = np.asarray(inputs, dtype=float)
    if x.ndim != 2:
        raise ValueError("inputs must have shape (k, N)")
    with np.errstate(all="ignore"):
        return _d2(expr, x)


def evaluate_with_derivatives(expr: Expr, inputs) -> SecondOrderValue:
    """Exact value, gradient and Hessian at a single point."""
    x = np.asarray(inputs, dtype=float).reshape(-1, 1)
    v, g, h = evaluate_d2_batch(expr, x)
    return SecondOrderValue(float(v[0]), g[:, 0].copy(), h[:, :, 0].copy())


def evaluate_batch(expr: Expr, inputs: np.ndarray) -> np.ndarray:
    """Values only, at inputs of shape (k, N)."""
    return evaluate_d2_batch(expr, inputs)[0]


def evaluate(expr: Expr, inputs) -> float:
    """Value at a single input point; non-finite results are returned, not raised."""
    x = np.asarray(inputs, dtype=float).reshape(-1, 1)
    return float(evaluate_batch(expr, x)[0])


# ---------------------------------------------------------------------------
# Parsing / formatting
# ---------------------------------------------------------------------------

_FUNC_NAMES = {"exp": "exp", "log": "log", "sqrt": "sqrt", "relu": "macaulay"}
DEFAULT_VAR_NAMES = ("I1", "I2")


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class _Parser:
    """Recursive-descent parser for the infix grammar.

    expr   := term (('+'|'-') term)*
    term   := unary (('*'|'/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right-associative
    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'
    """

    def __init__(self, text: str, var_names):
        self.text = text
        self.pos = 0
        self.var_index = {name: i for i, name in enumerate(var_names)}

    def parse(self) -> Expr:
        e = self.expr()
        self.skip_ws()
        if self.pos != len(self.text):
            raise ParseError(f"unexpected {self.text[self.pos]!r}", self.pos)
        return e

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expr(self) -> Expr:
        e = self.term()
        while self.peek() and self.peek() in "+-":
            op = self.text[self.pos]
            self.pos += 1
            rhs = self.term()
            e = Op("add" if op == "+" else "sub", (e, rhs))
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek() and self.peek() in "*/":
            op = self.text[self.pos]
            self.pos += 1
            rhs = self.unary()
            e = Op("mul" if op == "*" else "div", (e, rhs))
        return e

    def unary(self) -> Expr:
        if self.peek() == "-":
            self.pos += 1
            return Op("neg", (self.unary(),))
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek() == "^":
            self.pos += 1
            return Op("pow", (base, self.unary()))
        return base

    def atom(self) -> Expr:
        c = self.peek()
        if c == "(":
            self.pos += 1
            e = self.expr()
            if self.peek() != ")":
                raise ParseError("expected ')'", self.pos)
            self.pos += 1
            return e
        if c.isdigit() or c == ".":
            return self.number()
        if c.isalpha() or c == "_":
            return self.name()
        raise ParseError("expected number, name or '('", self.pos)

    def number(self) -> Const:
        start = self.pos
        t = self.text
        while self.pos < len(t) and (t[self.pos].isdigit() or t[self.pos] == "."):
            self.pos += 1
        if self.pos < len(t) and t[self.pos] in "eE":
            save = self.pos
            self.pos += 1
            if self.pos < len(t) and t[self.pos] in "+-":
                self.pos += 1
            if self.pos < len(t) and t[self.pos].isdigit():
                while self.pos < len(t) and t[self.pos].isdigit():
                    self.pos += 1
            else:
                self.pos = save
        try:
            return Const(float(t[start:self.pos]))
        except ValueError:
            raise ParseError(f"bad number {t[start:self.pos]!r}", start) from None

    def name(self) -> Expr:
        start = self.pos
        t = self.text
        while self.pos < len(t) and (t[self.pos].isalnum() or t[self.pos] == "_"):
            self.pos += 1
        word = t[start:self.pos]
        if word in _FUNC_NAMES:
            if self.peek() != "(":
                raise ParseError(f"expected '(' after {word}", self.pos)
            self.pos += 1
            arg = self.expr()
            if self.peek() != ")":
                raise ParseError("expected ')'", self.pos)
            self.pos += 1
            return Op(_FUNC_NAMES[word], (arg,))
        if word in self.var_index:
            return Var(self.var_index[word])
        raise ParseError(f"unknown identifier {word!r}", start)


def parse(text: str, var_names=DEFAULT_VAR_NAMES) -> Expr:
    """Parse the infix grammar; raises ParseError with a position on failure."""
    return _Parser(text, var_names).parse()


_PRECEDENCE = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}
_INFIX = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}
_FUNC_FOR_KIND = {"exp": "exp", "log": "log", "sqrt": "sqrt", "macaulay": "relu"}


def format_expr(expr: Expr, var_names=DEFAULT_VAR_NAMES) -> str:
    """Infix rendering; parse(format_expr(e)) evaluates identically to e."""

    def render(e: Expr, parent_prec: int, right_side: bool) -> str:
        if isinstance(e, Const):
            s = repr(e.value)
            if e.value < 0 and parent_prec > 1:
                s = f"({s})"
            return s
        if isinstance(e, Var):
            if e.index < len(var_names):
                return var_names[e.index]
            return f"x{e.index}"
        if e.kind in _FUNC_FOR_KIND:
            return f"{_FUNC_FOR_KIND[e.kind]}({render(e.args[0], 0, False)})"
        if e.kind == "neg":
            inner = render(e.args[0], _PRECEDENCE["neg"], True)
            s = f"-{inner}"
            return f"({s})" if parent_prec >= _PRECEDENCE["neg"] else s
        prec = _PRECEDENCE[e.kind]
        # sub/div need parens on an equal-precedence right child; pow is
        # right-associative so the left child needs them instead.
        left = render(e.args[0], prec if e.kind != "pow" else prec + 1, False)
        right = render(e.args[1], prec + (1 if e.kind in ("sub", "div") else 0)
                       if e.kind != "pow" else prec, True)
        s = f"{left} {_INFIX[e.kind]} {right}"
        if parent_prec > prec or (right_side and parent_prec == prec):
            return f"({s})"
        return s

    return render(expr, 0, False)


# ---------------------------------------------------------------------------
# Simplification
# ---------------------------------------------------------------------------

def simplify(expr: Expr) -> Expr:
    """Constant folding plus identity elimination.

    Evaluation-equivalent on finite inputs; never increases complexity.
    """
    if not isinstance(expr, Op):
        return expr
    args = tuple(simplify(a) for a in expr.args)
    e = Op(expr.kind, args)

    if all(isinstance(a, Const) for a in args):
        v = evaluate(e, np.zeros(1))
        if np.isfinite(v):
            return Const(v)
        return e

    def is_const(a, value=None):
        return isinstance(a, Const) and (value is None or a.value == value)

    kind = e.kind
    a = args[0]
    b = args[1] if len(args) == 2 else None
    if kind == "add":
        if is_const(a, 0.0):
            return b
        if is_const(b, 0.0):
            return a
    elif kind == "sub":
        if is_const(b, 0.0):
            return a
    elif kind == "mul":
        if is_const(a, 1.0):
            return b
        if is_const(b, 1.0):
            return a
        if is_const(a, 0.0) or is_const(b, 0.0):
            return Const(0.0)
    elif kind == "div":
        if is_const(b, 1.0):
            return a
    elif kind == "pow":
        if is_const(b, 1.0):
            return a
    elif kind == "neg":
        if isinstance(a, Op) and a.kind == "neg":
            return a.args[0]
        # push the sign inward when that does not grow the tree
        if isinstance(a, Op) and a.kind == "sub":
            return Op("sub", (a.args[1], a.args[0]))
        if isinstance(a, Op) and a.kind == "add":
            cand = simplify(Op("add", (Op("neg", (a.args[0],)),
                                       Op("neg", (a.args[1],)))))
            if complexity(cand) <= complexity(e):
                return cand
        if isinstance(a, Op) and a.kind in ("mul", "div"):
            cand = simplify(Op(a.kind, (Op("neg", (a.args[0],)), a.args[1])))
            if complexity(cand) <= complexity(e):
                return cand
    return e


# ---------------------------------------------------------------------------
# JSON serialization:  {"op":"add","args":[...]}, {"var":0}, {"const":0.031}
# ---------------------------------------------------------------------------

def to_json(expr: Expr):
    """Convert a tree to the JSON-serializable wire form."""
    if isinstance(expr, Const):
        return {"const": expr.value}
    if isinstance(expr, Var):
        return {"var": expr.index}
    return {"op": expr.kind, "args": [to_json(a) for a in expr.args]}


def from_json(obj) -> Expr:
    """Inverse of to_json; raises ValueError on malformed input."""
    if not isinstance(obj, dict):
        raise ValueError(f"expected object, got {type(obj).__name__}")
    if "const" in obj:
        return Const(float(obj["const"]))
    if "var" in obj:
        return Var(int(obj["var"]))
    if "op" in obj:
        return Op(obj["op"], tuple(from_json(a) for a in obj.get("args", [])))
    raise ValueError(f"unrecognized node {obj!r}")
