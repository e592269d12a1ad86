"""Deterministic damped least squares (Levenberg-Marquardt).

Hand-rolled rather than delegated: library LM backends showed run-order
dependent results at this problem scale (the first call in a process can
disagree with later identical calls), and bit-reproducibility under a fixed
seed is a contract of both calibration and discovery.
"""

from __future__ import annotations

import numpy as np

__all__ = ["levenberg_marquardt", "finite_difference_jacobian"]


def finite_difference_jacobian(residuals, step: float = 1e-7):
    """Central-difference Jacobian factory for a residual function."""

    def jac(x):
        x = np.asarray(x, dtype=float)
        r0 = residuals(x)
        out = np.empty((r0.size, x.size))
        for i in range(x.size):
            h = step * max(abs(x[i]), 1.0)
            hi, lo = x.copy(), x.copy()
            hi[i] += h
            lo[i] -= h
            out[:, i] = (residuals(hi) - residuals(lo)) / (2.0 * h)
        return out

    return jac


def levenberg_marquardt(residuals, jacobian, x0, max_iters: int = 100):
    """Minimize sum of squared residuals; returns the parameter vector.

    Standard damping schedule on the scaled normal equations; any non-finite
    trial is treated as a rejected step.  Bit-deterministic: identical
    inputs take identical paths.
    """
    x = np.asarray(x0, dtype=float).copy()
    with np.errstate(all="ignore"):
        return _lm_loop(residuals, jacobian, x, max_iters)


def _lm_loop(residuals, jacobian, x, max_iters):
    r = residuals(x)
    cost = float(r @ r)
    if not np.isfinite(cost):
        return x
    damping = 1e-3
    for _ in range(max_iters):
        jac = jacobian(x)
        jac = np.nan_to_num(jac, nan=0.0, posinf=0.0, neginf=0.0)
        grad = jac.T @ r
        if not np.all(np.isfinite(grad)):
            break
        normal = jac.T @ jac
        scale = np.diag(np.maximum(np.diag(normal), 1e-12))
        step = None
        for _ in range(12):
            try:
                step = np.linalg.solve(normal + damping * scale, -grad)
            except np.linalg.LinAlgError:
                damping *= 10.0
                continue
            trial = x + step
            r_trial = residuals(trial)
            c_trial = float(r_trial @ r_trial)
            if np.isfinite(c_trial) and c_trial < cost:
                x, r, cost = trial, r_trial, c_trial
                damping = max(damping * 0.3, 1e-12)
                break
            damping *= 10.0
            step = None
        if step is None:
            break
        if np.linalg.norm(step) <= 1e-12 * (np.linalg.norm(x) + 1e-12):
            break
    return x
