"""Pareto-front extraction, knee selection, and the structural convexity audit.

The audit replaces human (or LLM) judgment with deterministic pattern rules:
an energy is certified convex when every top-level additive term matches a
convex building block with verified-positive constants.  The certificate is
analytic — it holds between grid points, where sampled penalties can miss
narrow regions of negative curvature.  Forms the rules cannot match fall
back to the sampled Hessian check (grid_pass / violated), so the audit is
sound but deliberately incomplete.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import exprtree
from .exprtree import Const, Expr, Op, Var
from .fitness import expr_stress, hessian_penalty

__all__ = [
    "ParetoPoint",
    "AuditReport",
    "extract_front",
    "knee_select",
    "structural_audit",
    "rank_candidates",
    "front_to_json",
    "write_front_json",
    "write_front_csv",
]

CERTIFIED = "certified_analytic"
GRID_PASS = "grid_pass"
VIOLATED = "violated"
_CONVEXITY_ORDER = {CERTIFIED: 0, GRID_PASS: 1, VIOLATED: 2}

FLAG_MOONEY_RIVLIN = "has_mooney_rivlin_part"
FLAG_RATIONAL_LOCKING = "has_rational_locking_term"
FLAG_NESTED_TRANSCENDENTAL = "has_nested_transcendental"
FLAG_ZERO_AT_REFERENCE = "zero_at_reference_ok"


@dataclass(frozen=True)
class AuditReport:
    convexity: str
    flags: frozenset
    locking_invariant_limit: float | None = None

    @property
    def interpretability_score(self) -> int:
        s = 0
        if FLAG_RATIONAL_LOCKING in self.flags:
            s += 1
        if FLAG_MOONEY_RIVLIN in self.flags:
            s += 1
        if FLAG_NESTED_TRANSCENDENTAL in self.flags:
            s -= 1
        return s


@dataclass(frozen=True)
class ParetoPoint:
    complexity: int
    train_mse: float
    holdout_mse: float | None
    expr: Expr
    audit: AuditReport


# ---------------------------------------------------------------------------
# Term decomposition: W = sum of signed terms, each (coefficient, core)
# ---------------------------------------------------------------------------

def _additive_terms(expr: Expr, sign: float = 1.0):
    """Flatten nested add/sub/neg into a list of (sign, subtree)."""
    if isinstance(expr, Op):
        if expr.kind == "add":
            return (_additive_terms(expr.args[0], sign)
                    + _additive_terms(expr.args[1], sign))
        if expr.kind == "sub":
            return (_additive_terms(expr.args[0], sign)
                    + _additive_terms(expr.args[1], -sign))
        if expr.kind == "neg":
            return _additive_terms(expr.args[0], -sign)
    return [(sign, expr)]


def _split_coefficient(expr: Expr, coeff: float = 1.0):
    """Pull multiplicative constants out of a term: returns (coeff, core).

    core is None when the whole term is constant.
    """
    if isinstance(expr, Const):
        return coeff * expr.value, None
    if isinstance(expr, Op):
        if expr.kind == "neg":
            return _split_coefficient(expr.args[0], -coeff)
        if expr.kind == "mul":
            a, b = expr.args
            ca = _try_const(a)
            if ca is not None:
                return _split_coefficient(b, coeff * ca)
            cb = _try_const(b)
            if cb is not None:
                return _split_coefficient(a, coeff * cb)
        if expr.kind == "div":
            cb = _try_const(expr.args[1])
            if cb is not None and cb != 0.0:
                return _split_coefficient(expr.args[0], coeff / cb)
    return coeff, expr


def _signed_terms(expr: Expr, coeff: float = 1.0):
    """Full decomposition into (coefficient, core) terms.

    Distributes constant multipliers over sums, so 0.031*(3.75*I1 + I2)
    yields the two scaled terms it abbreviates.  core None marks a pure
    constant contribution.
    """
    c, core = _split_coefficient(expr, coeff)
    if core is None:
        return [(c, None)]
    if isinstance(core, Op) and core.kind == "add":
        return _signed_terms(core.args[0], c) + _signed_terms(core.args[1], c)
    if isinstance(core, Op) and core.kind == "sub":
        return _signed_terms(core.args[0], c) + _signed_terms(core.args[1], -c)
    return [(c, core)]


def _try_const(expr: Expr):
    """Value of a constant subtree, else None."""
    if not exprtree.is_constant_expr(expr):
        return None
    v = exprtree.evaluate(expr, np.zeros(2))
    return float(v) if np.isfinite(v) else None


def _linear_in(expr: Expr, var_index: int):
    """Match a * Var(var_index); returns a or None (bare var gives 1)."""
    coeff, core = _split_coefficient(expr)
    if isinstance(core, Var) and core.index == var_index:
        return coeff
    return None


def _match_rational_denominator(expr: Expr):
    """Match B - C*I1 with B, C > 0 in any additive arrangement."""
    b = None
    c = None
    for sign, t in _additive_terms(expr):
        coeff, core = _split_coefficient(t, sign)
        if core is None:
            if b is not None:
                return None
            b = coeff
        elif isinstance(core, Var) and core.index == 0:
            if c is not None:
                return None
            c = -coeff
        else:
            return None
    if b is None or c is None or b <= 0 or c <= 0:
        return None
    return b, c


@dataclass(frozen=True)
class _TermMatch:
    kind: str                    # linear_i1 | linear_i2 | power_i1 | rational | exponential
    convex: bool
    limit: float | None = None   # B/C for rational terms


def _match_term(coeff: float, core: Expr | None, i1_max: float):
    """Classify one decomposed term against the convex-atom patterns."""
    if core is None:
        # a pure constant offset: exactly zero is neutral, else unmatched
        return _TermMatch("constant", convex=(coeff == 0.0))
    if isinstance(core, Var):
        kind = "linear_i1" if core.index == 0 else "linear_i2"
        return _TermMatch(kind, convex=coeff >= 0)
    if isinstance(core, Op) and core.kind == "pow":
        base, expo = core.args
        n = _try_const(expo)
        if (isinstance(base, Var) and base.index == 0 and n is not None
                and n >= 1 and float(n).is_integer()):
            return _TermMatch("power_i1", convex=coeff >= 0)
    if isinstance(core, Op) and core.kind == "exp":
        a = _linear_in(core.args[0], 0)
        if a is not None:
            return _TermMatch("exponential", convex=(coeff >= 0 and a >= 0))
    if isinstance(core, Op) and core.kind == "div":
        num_a = _linear_in(core.args[0], 0)
        den = _match_rational_denominator(core.args[1])
        if num_a is not None and den is not None:
            b, c = den
            a_total = coeff * num_a
            limit = b / c
            return _TermMatch("rational", convex=(a_total > 0 and i1_max < limit),
                              limit=limit)
    return None


def _has_nested_transcendental(expr: Expr) -> bool:
    """A transcendental applied to a non-polynomial argument."""
    inner = frozenset({"exp", "log", "sqrt", "div"})
    for node in exprtree.iter_nodes(expr):
        if isinstance(node, Op) and node.kind in ("exp", "log", "sqrt"):
            for sub in exprtree.iter_nodes(node.args[0]):
                if isinstance(sub, Op) and sub.kind in inner:
                    return True
    return False


def structural_audit(expr: Expr, grid: np.ndarray) -> AuditReport:
    """Convexity certificate plus interpretability flags for one candidate.

    grid is the (2, M) admissible sample set; it bounds the rational-term
    domain check and feeds the sampled fallback for unmatched forms.
    """
    grid = np.asarray(grid, dtype=float)
    i1_max = float(np.max(grid[0]))

    matches = []
    all_matched = True
    for coeff, core in _signed_terms(exprtree.simplify(expr)):
        m = _match_term(coeff, core, i1_max)
        if m is None:
            all_matched = False
        else:
            matches.append(m)

    flags = set()
    linear_kinds = {m.kind for m in matches if m.convex}
    if {"linear_i1", "linear_i2"} <= linear_kinds:
        flags.add(FLAG_MOONEY_RIVLIN)
    limit = None
    for m in matches:
        if m.kind == "rational":
            flags.add(FLAG_RATIONAL_LOCKING)
            limit = m.limit
    if _has_nested_transcendental(expr):
        flags.add(FLAG_NESTED_TRANSCENDENTAL)
    w0 = exprtree.evaluate(expr, np.zeros(2))
    if np.isfinite(w0) and abs(w0) <= 1e-9:
        flags.add(FLAG_ZERO_AT_REFERENCE)

    if all_matched and matches and all(m.convex for m in matches):
        convexity = CERTIFIED
    else:
        pen = hessian_penalty(expr, grid)
        convexity = GRID_PASS if pen == 0.0 else VIOLATED
    return AuditReport(convexity=convexity, flags=frozenset(flags),
                       locking_invariant_limit=limit)


# ---------------------------------------------------------------------------
# Front extraction, knee selection, ranking
# ---------------------------------------------------------------------------

def _holdout_mse(expr: Expr, holdout) -> float | None:
    if not holdout:
        return None
    sq, n = 0.0, 0
    for ds in holdout:
        pred = expr_stress(expr, ds.mode, ds.stretch)
        if not np.all(np.isfinite(pred)):
            return math.inf
        sq += float(np.sum((pred - ds.stress) ** 2))
        n += len(ds.stretch)
    return sq / n


def extract_front(hall, holdout=(), grid=None) -> list:
    """Non-dominated (complexity, train_mse) points, audited, sorted by size."""
    if not hall.entries:
        raise ValueError("hall of fame is empty; nothing to extract")
    if grid is None:
        raise ValueError("extract_front needs the admissible sample grid")
    items = sorted(hall.entries.items())            # by complexity ascending
    front = []
    best = math.inf
    for comp, (expr, report) in items:
        if report.train_mse < best:
            best = report.train_mse
            front.append(ParetoPoint(
                complexity=comp,
                train_mse=report.train_mse,
                holdout_mse=_holdout_mse(expr, holdout),
                expr=expr,
                audit=structural_audit(expr, grid)))
    return front


def knee_select(front) -> ParetoPoint:
    """Maximum perpendicular distance from the chord in normalized space.

    Complexity and log10(train_mse) are both scaled to [0,1]; the front
    spans orders of magnitude in mse, so a linear-scale knee would collapse
    onto the steepest early drop.
    """
    if len(front) < 3:
        warnings.warn("knee selection needs >= 3 front points; "
                      "returning the lowest-mse point")
        return min(front, key=lambda p: (p.train_mse, p.complexity))
    xs = np.array([p.complexity for p in front], dtype=float)
    ys = np.log10([max(p.train_mse, 1e-300) for p in front])
    xs = (xs - xs.min()) / (xs.max() - xs.min() or 1.0)
    ys = (ys - ys.min()) / (ys.max() - ys.min() or 1.0)
    x0, y0, x1, y1 = xs[0], ys[0], xs[-1], ys[-1]
    chord = math.hypot(x1 - x0, y1 - y0) or 1.0
    dist = np.abs((y1 - y0) * xs - (x1 - x0) * ys + x1 * y0 - y1 * x0) / chord
    best = int(min(range(len(front)),
                   key=lambda i: (-dist[i], front[i].complexity)))
    return front[best]


def rank_candidates(front) -> list:
    """Total order; the head of the list is the recommended model.

    Lexicographic: convexity class, then interpretability (locking term and
    linear Mooney-Rivlin part are merits, nested transcendentals a demerit),
    then holdout mse, train mse, complexity.
    """
    def key(p: ParetoPoint):
        hold = p.holdout_mse if p.holdout_mse is not None else math.inf
        return (_CONVEXITY_ORDER[p.audit.convexity],
                -p.audit.interpretability_score,
                hold, p.train_mse, p.complexity)

    ranked = sorted(front, key=key)
    if ranked and all(p.audit.convexity == VIOLATED for p in ranked):
        warnings.warn("every candidate on the front violates the convexity "
                      "constraint; ranking falls back to holdout error only")
    return ranked


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

_CSV_COLUMNS = ("complexity", "train_mse", "holdout_mse", "convexity",
                "flags", "expression")


def _point_row(p: ParetoPoint) -> dict:
    return {
        "complexity": p.complexity,
        "train_mse": p.train_mse,
        "holdout_mse": p.holdout_mse,
        "convexity": p.audit.convexity,
        "flags": sorted(p.audit.flags),
        "expression": exprtree.format_expr(p.expr),
    }


def front_to_json(front) -> list:
    out = []
    for p in front:
        row = _point_row(p)
        row["expr"] = exprtree.to_json(p.expr)
        row["locking_invariant_limit"] = p.audit.locking_invariant_limit
        out.append(row)
    return out


def write_front_json(front, path) -> None:
    with open(path, "w") as fh:
        json.dump(front_to_json(front), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_front_csv(front, path) -> None:
    """Deterministic CSV: repr floats, sorted ;-joined flags, \\n endings."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_CSV_COLUMNS)
        for p in front:
            row = _point_row(p)
            w.writerow([
                row["complexity"],
                repr(row["train_mse"]),
                "" if row["holdout_mse"] is None else repr(row["holdout_mse"]),
                row["convexity"],
                ";".join(row["flags"]),
                row["expression"],
            ])
