"""Incompressible hyperelasticity: invariant transforms, stresses, baselines.

Stretch is dimensionless, stress is nominal (first Piola-Kirchhoff) in MPa.
Energies are functions of the shifted invariants I1~ = I1 - 3, I2~ = I2 - 3,
which vanish in the reference configuration.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import exprtree
from .exprtree import Expr
from .optim import finite_difference_jacobian, levenberg_marquardt

__all__ = [
    "Mode",
    "SymbolicW",
    "NeoHookean",
    "MooneyRivlin",
    "Yeoh3",
    "Ogden3",
    "invariants",
    "nominal_stress",
    "tangent_stiffness_ut",
    "locking_stretch",
    "calibrate_baseline",
    "ogden_forensic",
    "OgdenForensicReport",
    "CalibrationResult",
]


class Mode(enum.Enum):
    """Homogeneous deformation modes of the standard tensile protocol."""

    UT = "UT"
    ET = "ET"
    PS = "PS"


# ---------------------------------------------------------------------------
# Invariant transforms and their stretch derivatives
# ---------------------------------------------------------------------------

def invariants(mode: Mode, lam):
    """Shifted invariants (I1~, I2~) induced by stretch lam in the given mode."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0.0):
        raise ValueError("stretch must be positive")
    if mode is Mode.UT:
        return lam**2 + 2.0 / lam - 3.0, 2.0 * lam + lam**-2 - 3.0
    if mode is Mode.ET:
        return 2.0 * lam**2 + lam**-4 - 3.0, lam**4 + 2.0 * lam**-2 - 3.0
    i = lam**2 + lam**-2 - 2.0
    return i, i.copy() if isinstance(i, np.ndarray) else i


def invariant_derivatives(mode: Mode, lam):
    """d(I1~)/dlam, d(I2~)/dlam, and their second derivatives."""
    lam = np.asarray(lam, dtype=float)
    if mode is Mode.UT:
        return (2 * lam - 2 * lam**-2, 2 - 2 * lam**-3,
                2 + 4 * lam**-3, 6 * lam**-4)
    if mode is Mode.ET:
        return (4 * lam - 4 * lam**-5, 4 * lam**3 - 4 * lam**-3,
                4 + 20 * lam**-6, 12 * lam**2 + 12 * lam**-4)
    d1 = 2 * lam - 2 * lam**-3
    dd1 = 2 + 6 * lam**-4
    return d1, d1.copy(), dd1, dd1.copy()


def principal_stretches(mode: Mode, lam):
    """(lam1, lam2, lam3) with lam1*lam2*lam3 = 1 for the given mode."""
    lam = np.asarray(lam, dtype=float)
    if mode is Mode.UT:
        t = lam**-0.5
        return lam, t, t.copy() if isinstance(t, np.ndarray) else t
    if mode is Mode.ET:
        return lam, lam.copy() if isinstance(lam, np.ndarray) else lam, lam**-2
    return lam, np.ones_like(lam), 1.0 / lam


# ---------------------------------------------------------------------------
# Material models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SymbolicW:
    """Energy given by an expression tree over (I1~, I2~)."""

    expr: Expr


@dataclass(frozen=True)
class NeoHookean:
    c1: float


@dataclass(frozen=True)
class MooneyRivlin:
    c10: float
    c01: float


@dataclass(frozen=True)
class Yeoh3:
    c10: float
    c20: float
    c30: float


@dataclass(frozen=True)
class Ogden3:
    """Three-term Ogden model in principal stretches.

    mu_i * alpha_i > 0 is deliberately not enforced: fits to tensile data
    commonly land on large negative exponents, and the forensic below needs
    to represent them.
    """

    mu: tuple
    alpha: tuple

    def __post_init__(self):
        object.__setattr__(self, "mu", tuple(float(m) for m in self.mu))
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        if len(self.mu) != 3 or len(self.alpha) != 3:
            raise ValueError("Ogden3 needs exactly 3 (mu, alpha) pairs")


def energy_derivatives(model, i1, i2):
    """(W, dW/dI1~, dW/dI2~) for an invariant-based model.

    Ogden3 has no invariant representation; callers use the principal-stretch
    formulas instead.
    """
    i1 = np.asarray(i1, dtype=float)
    i2 = np.asarray(i2, dtype=float)
    if isinstance(model, SymbolicW):
        pts = np.stack([np.ravel(i1), np.ravel(i2)])
        v, g, _ = exprtree.evaluate_d2_batch(model.expr, pts)
        return (v.reshape(i1.shape), g[0].reshape(i1.shape), g[1].reshape(i1.shape))
    if isinstance(model, NeoHookean):
        return model.c1 * i1, np.full_like(i1, model.c1), np.zeros_like(i1)
    if isinstance(model, MooneyRivlin):
        return (model.c10 * i1 + model.c01 * i2,
                np.full_like(i1, model.c10), np.full_like(i1, model.c01))
    if isinstance(model, Yeoh3):
        w = model.c10 * i1 + model.c20 * i1**2 + model.c30 * i1**3
        w1 = model.c10 + 2 * model.c20 * i1 + 3 * model.c30 * i1**2
        return w, w1, np.zeros_like(i1)
    raise TypeError(f"no invariant form for {type(model).__name__}")


def energy_hessian(model, i1, i2):
    """(W11, W12, W22) second derivatives in invariant space."""
    i1 = np.asarray(i1, dtype=float)
    i2 = np.asarray(i2, dtype=float)
    if isinstance(model, SymbolicW):
        pts = np.stack([np.ravel(i1), np.ravel(i2)])
        _, _, h = exprtree.evaluate_d2_batch(model.expr, pts)
        return (h[0, 0].reshape(i1.shape), h[0, 1].reshape(i1.shape),
                h[1, 1].reshape(i1.shape))
    if isinstance(model, (NeoHookean, MooneyRivlin)):
        z = np.zeros_like(i1)
        return z, z.copy(), z.copy()
    if isinstance(model, Yeoh3):
        return (2 * model.c20 + 6 * model.c30 * i1,
                np.zeros_like(i1), np.zeros_like(i1))
    raise TypeError(f"no invariant form for {type(model).__name__}")


def energy_along_path(model, mode: Mode, lam):
    """W evaluated along a deformation-mode path."""
    lam = np.asarray(lam, dtype=float)
    if isinstance(model, Ogden3):
        with np.errstate(all="ignore"):
            w = np.zeros_like(lam)
            for mu, al in zip(model.mu, model.alpha):
                l1, l2, l3 = principal_stretches(mode, lam)
                w = w + (mu / al) * (l1**al + l2**al + l3**al - 3.0)
            return w
    i1, i2 = invariants(mode, lam)
    return energy_derivatives(model, i1, i2)[0]


def nominal_stress(model, mode: Mode, lam):
    """Nominal stress P(lam) in MPa; non-finite values propagate."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0.0):
        raise ValueError("stretch must be positive")
    with np.errstate(all="ignore"):
        if isinstance(model, Ogden3):
            p = np.zeros_like(lam)
            for mu, al in zip(model.mu, model.alpha):
                if mode is Mode.UT:
                    p = p + mu * (lam**(al - 1) - lam**(-al / 2 - 1))
                elif mode is Mode.ET:
                    p = p + mu * (lam**(al - 1) - lam**(-2 * al - 1))
                else:
                    p = p + mu * (lam**(al - 1) - lam**(-al - 1))
            return p
        i1, i2 = invariants(mode, lam)
        _, w1, w2 = energy_derivatives(model, i1, i2)
        if mode is Mode.UT:
            return 2 * (lam - lam**-2) * (w1 + w2 / lam)
        if mode is Mode.ET:
            return 2 * (lam - lam**-5) * (w1 + w2 * lam**2)
        return 2 * (lam - lam**-3) * (w1 + w2)


def tangent_stiffness_ut(model, lam):
    """Exact d^2 W / d lam^2 along the uniaxial path (chain rule, no FD)."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0.0):
        raise ValueError("stretch must be positive")
    with np.errstate(all="ignore"):
        if isinstance(model, Ogden3):
            k = np.zeros_like(lam)
            for mu, al in zip(model.mu, model.alpha):
                k = k + mu * ((al - 1) * lam**(al - 2)
                              + (al / 2 + 1) * lam**(-al / 2 - 2))
            return k
        i1, i2 = invariants(Mode.UT, lam)
        _, w1, w2 = energy_derivatives(model, i1, i2)
        w11, w12, w22 = energy_hessian(model, i1, i2)
        d1, d2, dd1, dd2 = invariant_derivatives(Mode.UT, lam)
        return (w11 * d1**2 + 2 * w12 * d1 * d2 + w22 * d2**2
                + w1 * dd1 + w2 * dd2)


def ogden_principal_hessian(model: Ogden3, l1, l2):
    """(H11, H12, H22) of W(l1, l2) with l3 = 1/(l1 l2) eliminated.

    The stability surrogate for stretch-based models, where no invariant
    Hessian exists: Drucker stability on incompressible states requires
    this reduced Hessian to be positive semi-definite.
    """
    l1 = np.asarray(l1, dtype=float)
    l2 = np.asarray(l2, dtype=float)
    with np.errstate(all="ignore"):
        h11 = np.zeros_like(l1 * l2)
        h12 = np.zeros_like(h11)
        h22 = np.zeros_like(h11)
        for mu, al in zip(model.mu, model.alpha):
            third = l1**(-al) * l2**(-al)
            h11 = h11 + mu * ((al - 1) * l1**(al - 2)
                              + (al + 1) * l1**-2 * third)
            h22 = h22 + mu * ((al - 1) * l2**(al - 2)
                              + (al + 1) * l2**-2 * third)
            h12 = h12 + mu * al * (l1 * l2)**-1 * third
        return h11, h12, h22


def locking_stretch(model, mode: Mode, lam_cap: float = 100.0, tol: float = 1e-9):
    """Smallest lam > 1 where W diverges along the mode path, or None.

    A divergence shows up either as a non-finite energy (log/sqrt domain
    ends) or as a branch jump across a rational pole, where W collapses
    below its last pre-pole value.  Scans geometrically up to lam_cap, then
    bisects on the jump.
    """
    def w_at(lam):
        return float(energy_along_path(model, mode, np.asarray([lam]))[0])

    def past_divergence(w, w_ref):
        return (not np.isfinite(w)) or w < w_ref

    lo, w_lo = 1.0, w_at(1.0)
    hi = None
    lam = 1.0
    while lam < lam_cap:
        lam = min(lam * 1.02, lam_cap)
        w = w_at(lam)
        if past_divergence(w, w_lo):
            hi = lam
            break
        lo, w_lo = lam, w
    if hi is None:
        return None
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        w = w_at(mid)
        if past_divergence(w, w_lo):
            hi = mid
        else:
            lo, w_lo = mid, w
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Baseline calibration
# ---------------------------------------------------------------------------

@dataclass
class CalibrationResult:
    model: object
    mse: float
    mse_per_mode: dict
    converged: bool
    n_restarts: int


_BASELINES = {"neo_hookean", "mooney_rivlin", "yeoh3", "ogden3"}

# Classic literature starting point for Ogden fits to vulcanized rubber;
# included among the multi-start seeds because Ogden calibration is
# notoriously multi-modal.
_OGDEN_CLASSIC_START = np.array([0.63, 0.0012, -0.01, 1.3, 5.0, -2.0])


def _params_to_model(kind: str, p: np.ndarray):
    if kind == "neo_hookean":
        return NeoHookean(p[0])
    if kind == "mooney_rivlin":
        return MooneyRivlin(p[0], p[1])
    if kind == "yeoh3":
        return Yeoh3(p[0], p[1], p[2])
    return Ogden3(tuple(p[:3]), tuple(p[3:6]))


def _n_params(kind: str) -> int:
    return {"neo_hookean": 1, "mooney_rivlin": 2, "yeoh3": 3, "ogden3": 6}[kind]


def model_from_params(kind: str, params):
    """Instantiate a baseline model from its flat parameter vector."""
    p = np.asarray(params, dtype=float)
    if kind not in _BASELINES:
        raise ValueError(f"unknown baseline kind {kind!r}")
    if len(p) != _n_params(kind):
        raise ValueError(f"{kind} needs {_n_params(kind)} parameters, got {len(p)}")
    return _params_to_model(kind, p)


def model_params(model) -> list:
    """Flat parameter vector of a baseline model (inverse of model_from_params)."""
    if isinstance(model, NeoHookean):
        return [model.c1]
    if isinstance(model, MooneyRivlin):
        return [model.c10, model.c01]
    if isinstance(model, Yeoh3):
        return [model.c10, model.c20, model.c30]
    if isinstance(model, Ogden3):
        return list(model.mu) + list(model.alpha)
    raise TypeError(f"not a baseline model: {type(model).__name__}")


def dataset_mse(model, datasets) -> tuple:
    """(overall point-weighted MSE, per-mode MSE dict) in MPa^2."""
    per_mode = {}
    sq = []
    for ds in datasets:
        pred = nominal_stress(model, ds.mode, ds.stretch)
        r = pred - ds.stress
        per_mode[ds.mode] = float(np.mean(r**2))
        sq.append(r**2)
    all_sq = np.concatenate(sq)
    return float(np.mean(all_sq)), per_mode


def calibrate_baseline(kind: str, train, initial=None, restarts: int = 16,
                       seed: int = 0) -> CalibrationResult:
    """Multi-start damped least-squares fit of a classical baseline.

    Deterministic for fixed seed and restart count.  Equal weight per data
    point across all training datasets.
    """
    if kind not in _BASELINES:
        raise ValueError(f"unknown baseline {kind!r}; choose from {sorted(_BASELINES)}")
    if not train:
        raise ValueError("no training datasets")
    n = _n_params(kind)

    lam = [np.asarray(ds.stretch) for ds in train]
    obs = [np.asarray(ds.stress) for ds in train]
    modes = [ds.mode for ds in train]

    def residuals(p):
        out = []
        for m, l, o in zip(modes, lam, obs):
            pred = nominal_stress(_params_to_model(kind, p), m, l)
            out.append(pred - o)
        r = np.concatenate(out)
        return np.where(np.isfinite(r), r, 1e6)

    starts = []
    if initial is not None:
        starts.append(np.asarray(initial, dtype=float))
    if kind == "ogden3":
        starts.append(_OGDEN_CLASSIC_START.copy())
    starts.append(np.full(n, 0.1))
    rng = np.random.default_rng(seed)
    while len(starts) < restarts:
        p = rng.normal(0.0, 1.0, size=n)
        if kind == "ogden3":
            p[3:] = rng.uniform(-5.0, 5.0, size=3)
        starts.append(p)

    jac = finite_difference_jacobian(residuals)
    best_p, best_cost = None, np.inf
    converged = False
    for p0 in starts[:restarts]:
        sol = levenberg_marquardt(residuals, jac, p0, max_iters=500)
        if not np.all(np.isfinite(sol)):
            continue
        r = residuals(sol)
        cost = float(r @ r)
        if cost < best_cost:
            best_p, best_cost = sol, cost
            converged = True
    if best_p is None:
        raise RuntimeError(f"calibration of {kind} failed on every restart")
    model = _params_to_model(kind, best_p)
    mse, per_mode = dataset_mse(model, train)
    return CalibrationResult(model=model, mse=mse, mse_per_mode=per_mode,
                             converged=converged, n_restarts=restarts)


# ---------------------------------------------------------------------------
# Ogden compressive-singularity forensic
# ---------------------------------------------------------------------------

@dataclass
class OgdenForensicTerm:
    mu: float
    alpha: float
    stretch_power: float        # lam**alpha
    stiffness_power: float      # lam**(alpha - 2)
    ill_conditioned: bool


@dataclass
class OgdenForensicReport:
    lam_transverse: float
    threshold: float
    terms: list = field(default_factory=list)
    max_amplification: float = 0.0

    @property
    def any_ill_conditioned(self) -> bool:
        return any(t.ill_conditioned for t in self.terms)


def ogden_forensic(model: Ogden3, lam_transverse: float,
                   threshold: float = 100.0) -> OgdenForensicReport:
    """Per-term amplification factors under severe transverse compression.

    Both lam**alpha and lam**(alpha-2) are reported for every term; which of
    the two a given solver's stiffness assembly amplifies depends on the
    implementation, so neither is privileged here.
    """
    if not (0.0 < lam_transverse < 1.0):
        raise ValueError("lam_transverse must lie in (0, 1)")
    report = OgdenForensicReport(lam_transverse=lam_transverse, threshold=threshold)
    for mu, al in zip(model.mu, model.alpha):
        sp = lam_transverse**al
        kp = lam_transverse**(al - 2.0)
        report.terms.append(OgdenForensicTerm(
            mu=mu, alpha=al, stretch_power=sp, stiffness_power=kp,
            ill_conditioned=max(abs(sp), abs(kp)) > threshold))
        report.max_amplification = max(report.max_amplification, abs(sp), abs(kp))
    return report
