"""Composite physics-informed objective for candidate energies.

Loss = data misfit (MSE of nominal stress, MPa^2) + optional complexity
regularization + weighted constraint penalties.  Penalties are quadratic
rectifier means over a precomputed sample grid in invariant space; any
non-finite evaluation anywhere marks the candidate invalid (composite +inf)
rather than merely expensive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import exprtree
from .exprtree import Expr
from .mechanics import Mode, invariants
from .skills import Skill

__all__ = [
    "PenaltyConfig",
    "FitnessReport",
    "WhitelistViolation",
    "build_sample_grid",
    "default_penalty_config",
    "relu_penalty",
    "hessian_penalty",
    "reference_penalty",
    "evaluate_fitness",
    "fiber_compression_penalty",
    "fiber_convexity_penalty",
]

INVALID = math.inf


class WhitelistViolation(ValueError):
    pass


@dataclass(frozen=True)
class PenaltyConfig:
    """Weights and sample grid for the constraint penalties."""

    lam_hessian: float
    lam_reference: float
    samples: np.ndarray          # shape (2, M) points in (I1~, I2~) space
    lam_reg: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 2 or s.shape[0] != 2:
            raise ValueError("samples must have shape (2, M)")
        if s.shape[1] < 64:
            raise ValueError(f"need at least 64 sample points, got {s.shape[1]}")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        if self.lam_hessian <= 0 or self.lam_reference <= 0 or self.lam_reg < 0:
            raise ValueError("penalty weights must be positive (lam_reg >= 0)")


@dataclass(frozen=True)
class FitnessReport:
    mse_per_mode: dict
    train_mse: float
    complexity: int
    penalty_hessian: float
    penalty_reference: float
    composite: float
    valid: bool


def build_sample_grid(datasets, sampling) -> np.ndarray:
    """Admissible (I1~, I2~) sample points derived from the data range.

    Takes lam_max = margin x the largest observed stretch, lam_min = 1/lam_max,
    then combines an incompressible principal-stretch grid (pairs whose third
    stretch also lies in [lam_min, lam_max]) with points along the UT/ET/PS
    paths, each path capped so all three principal stretches stay in range.
    The compressive corner of the grid is the blind spot where tensile-only
    fits go singular, so it is deliberately included.
    """
    if sampling.auto_from_data:
        if not datasets:
            raise ValueError("auto_from_data sampling needs at least one dataset")
        lam_max = sampling.data_margin * max(float(np.max(ds.stretch)) for ds in datasets)
        lam_min = 1.0 / lam_max
    else:
        lam_min, lam_max = sampling.lambda_min, sampling.lambda_max

    axis = np.linspace(lam_min, lam_max, sampling.grid_n)
    l1, l2 = np.meshgrid(axis, axis, indexing="ij")
    l1, l2 = l1.ravel(), l2.ravel()
    l3 = 1.0 / (l1 * l2)
    ok = (l3 >= lam_min) & (l3 <= lam_max)
    l1, l2, l3 = l1[ok], l2[ok], l3[ok]
    if l1.size == 0:
        raise ValueError("empty admissible sampling domain; check lambda bounds")
    i1 = l1**2 + l2**2 + l3**2 - 3.0
    i2 = (l1 * l2)**2 + (l2 * l3)**2 + (l3 * l1)**2 - 3.0

    pieces = [np.stack([i1, i2])]
    path_caps = {Mode.UT: lam_max, Mode.ET: math.sqrt(lam_max), Mode.PS: lam_max}
    for mode, cap in path_caps.items():
        lam = np.linspace(1.0, cap, sampling.path_points)
        pi1, pi2 = invariants(mode, lam)
        pieces.append(np.stack([pi1, pi2]))
    grid = np.concatenate(pieces, axis=1)
    grid.setflags(write=False)
    return grid


def default_penalty_config(datasets, skill: Skill) -> PenaltyConfig:
    """Config with the scale-aware default weights.

    The Hessian weight is 1e3 x the training-stress variance so the penalty
    acts as a near-hard filter regardless of stress units.
    """
    grid = build_sample_grid(datasets, skill.sampling)
    stresses = np.concatenate([ds.stress for ds in datasets])
    scale = max(float(np.var(stresses)), 1e-6)
    weights = {c.kind: c.weight for c in skill.constraints}
    lam_h = weights.get("hessian_psd", 1e3) * scale
    # zero_at_reference carries weight 0 in the skill (structural); the cheap
    # |W(0)|^2 belt-and-suspenders penalty still gets a heavy default weight.
    lam_ref = (weights.get("zero_at_reference") or 1e3) * scale
    return PenaltyConfig(lam_hessian=lam_h, lam_reference=lam_ref, samples=grid)


def relu_penalty(values) -> float:
    """Mean squared rectified violation: (1/M) sum relu(-Q_j)^2.

    Zero iff every Q_j >= 0; any non-finite Q makes the penalty +inf.
    """
    q = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(q)):
        return INVALID
    v = np.minimum(q, 0.0)
    with np.errstate(all="ignore"):
        return float(np.mean(v * v))


def hessian_penalty(expr: Expr, samples: np.ndarray) -> float:
    """Rectified penalty on det and trace of the energy Hessian.

    For a symmetric 2x2 matrix, det >= 0 together with tr >= 0 is equivalent
    to positive semi-definiteness, so this is the full stability constraint.
    """
    _, _, h = exprtree.evaluate_d2_batch(expr, samples)
    with np.errstate(all="ignore"):
        det = h[0, 0] * h[1, 1] - h[0, 1] * h[1, 0]
        tr = h[0, 0] + h[1, 1]
    return relu_penalty(np.concatenate([det, tr]))


def reference_penalty(expr: Expr) -> float:
    """|W(0)|^2: catches additive constants the whitelist still permits."""
    w0 = exprtree.evaluate(expr, np.zeros(2))
    if not np.isfinite(w0):
        return INVALID
    return float(w0 * w0)


def expr_stress(expr: Expr, mode: Mode, lam) -> np.ndarray:
    """Nominal stress of a symbolic energy along a mode path (batch)."""
    lam = np.asarray(lam, dtype=float)
    i1, i2 = invariants(mode, lam)
    _, g, _ = exprtree.evaluate_d2_batch(expr, np.stack([i1, i2]))
    w1, w2 = g[0], g[1]
    with np.errstate(all="ignore"):
        if mode is Mode.UT:
            return 2 * (lam - lam**-2) * (w1 + w2 / lam)
        if mode is Mode.ET:
            return 2 * (lam - lam**-5) * (w1 + w2 * lam**2)
        return 2 * (lam - lam**-3) * (w1 + w2)


def check_whitelist(expr: Expr, skill: Skill) -> None:
    used = exprtree.operators_used(expr)
    bad = used - skill.operator_whitelist
    if bad:
        raise WhitelistViolation(
            f"expression uses operators {sorted(bad)} outside the skill whitelist")
    if skill.pow_constant_exponent_only:
        for node in exprtree.iter_nodes(expr):
            if isinstance(node, exprtree.Op) and node.kind == "pow":
                if not exprtree.is_constant_expr(node.args[1]):
                    raise WhitelistViolation(
                        "pow with a non-constant exponent is outside this skill")


def evaluate_fitness(expr: Expr, train, config: PenaltyConfig,
                     skill: Skill) -> FitnessReport:
    """Assemble the composite objective for one candidate.

    Deterministic: identical inputs produce bit-identical reports.
    """
    check_whitelist(expr, skill)
    comp = exprtree.complexity(expr)

    mse_per_mode = {}
    total_sq = 0.0
    total_n = 0
    valid = True
    for ds in train:
        pred = expr_stress(expr, ds.mode, ds.stretch)
        if not np.all(np.isfinite(pred)):
            valid = False
            mse_per_mode[ds.mode] = INVALID
            continue
        with np.errstate(all="ignore"):
            sq = (pred - ds.stress) ** 2
        mse_per_mode[ds.mode] = float(np.mean(sq))
        total_sq += float(np.sum(sq))
        total_n += len(sq)
    train_mse = total_sq / total_n if (valid and total_n) else INVALID

    pen_h = hessian_penalty(expr, config.samples)
    pen_ref = reference_penalty(expr)
    if not (math.isfinite(pen_h) and math.isfinite(pen_ref)):
        valid = False

    if valid:
        composite = (train_mse + config.lam_reg * comp
                     + config.lam_hessian * pen_h
                     + config.lam_reference * pen_ref)
    else:
        composite = INVALID
    return FitnessReport(
        mse_per_mode=mse_per_mode, train_mse=train_mse, complexity=comp,
        penalty_hessian=pen_h, penalty_reference=pen_ref,
        composite=composite, valid=valid)


# ---------------------------------------------------------------------------
# Fiber-term constraints for the anisotropic skill
# ---------------------------------------------------------------------------

def fiber_compression_penalty(fiber_expr: Expr, i4_samples) -> float:
    """Mean squared fiber energy on compressive states (I4~ <= 0).

    Fibers buckle rather than resist compression, so any nonzero energy
    there is a violation in either sign.
    """
    s = np.asarray(i4_samples, dtype=float)
    s = s[s <= 0.0]
    if s.size == 0:
        return 0.0
    w = exprtree.evaluate_batch(fiber_expr, s.reshape(1, -1))
    if not np.all(np.isfinite(w)):
        return INVALID
    return float(np.mean(w * w))


def fiber_convexity_penalty(fiber_expr: Expr, i4_samples) -> float:
    """Rectified penalty on d2W_f/dI4~^2 over tensile states (I4~ > 0)."""
    s = np.asarray(i4_samples, dtype=float)
    s = s[s > 0.0]
    if s.size == 0:
        return 0.0
    _, _, h = exprtree.evaluate_d2_batch(fiber_expr, s.reshape(1, -1))
    return relu_penalty(h[0, 0])
