"""Bundled reference energy expressions used throughout tests and demos."""

from __future__ import annotations

from .exprtree import Const, Expr, Op, Var, parse

# Discovered hybrid law: Mooney-Rivlin linear part plus a rational locking
# term with a singularity at I1 = 77.9/1.05.  The canonical tree writes the
# denominator as 77.9 + (-(1.05*I1)) so the node count is 16, the complexity
# at which this model sits in the hall of fame.
RATIONAL_HYBRID_TEXT = "0.031*(3.75*I1 + I2) + I1/(77.9 - 1.05*I1)"


def rational_hybrid_expr() -> Expr:
    """Canonical 16-node tree of the rational-locking hybrid model."""
    linear = Op("mul", (Const(0.031),
                        Op("add", (Op("mul", (Const(3.75), Var(0))), Var(1)))))
    denom = Op("add", (Const(77.9), Op("neg", (Op("mul", (Const(1.05), Var(0))),))))
    return Op("add", (linear, Op("div", (Var(0), denom))))


# Non-convex competitor found by an unconstrained search: lower training
# error but nested roots and negative-curvature regions.
SQRT_NESTED_TEXT = (
    "sqrt(1.43*(exp(sqrt(sqrt(exp(0.067*I1))) + 2.22) + (I1 + I2 - 1.01)/1.87))"
)


def sqrt_nested_expr() -> Expr:
    return parse(SQRT_NESTED_TEXT)


def mooney_rivlin_expr(c10: float, c01: float) -> Expr:
    """add(mul(c10, I1), mul(c01, I2)) - the 7-node linear tree."""
    return Op("add", (Op("mul", (Const(c10), Var(0))),
                      Op("mul", (Const(c01), Var(1)))))


def hgo_fiber_expr(k1: float, k2: float) -> Expr:
    """Fiber reinforcement term (k1/2k2)(exp(k2*<I4>^2) - 1) over feature I4.

    Uses the Macaulay bracket so the term vanishes identically in compression.
    """
    bracket = Op("macaulay", (Var(0),))
    inner = Op("exp", (Op("mul", (Const(k2), Op("pow", (bracket, Const(2.0))))),))
    return Op("mul", (Const(k1 / (2.0 * k2)), Op("sub", (inner, Const(1.0)))))
