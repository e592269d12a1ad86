"""Why a good tensile fit can be a dangerous material model.

An Ogden fit to tension-only data often lands on a large negative exponent.
In tension nothing looks wrong; but any deformation with a compressive
principal stretch raises that stretch to the negative exponent, and the
term explodes.  The forensic below makes the mechanism explicit, term by
term, at a transverse stretch representative of a notch root.
"""

import numpy as np

from hypersr import data
from hypersr.mechanics import (Mode, calibrate_baseline, model_params,
                               ogden_forensic, ogden_principal_hessian)

split = data.default_split(data.treloar_datasets())
result = calibrate_baseline("ogden3", split.train)
params = model_params(result.model)
print("calibrated Ogden (3 terms) on tensile data:")
for mu, al in zip(params[:3], params[3:]):
    print(f"  mu = {mu:9.5f} MPa   alpha = {al:8.4f}")
print("train mse:", round(result.mse, 5), "MPa^2")
print("negative exponent present:", any(a < 0 for a in params[3:]))

# Severe but realistic compressive state: transverse stretch 0.157.
lam_t = 0.157
report = ogden_forensic(result.model, lam_t)
print(f"\nterm amplification at transverse stretch {lam_t}:")
print(f"  {'mu':>10} {'alpha':>8} {'lam^alpha':>12} {'lam^(alpha-2)':>14}")
for t in report.terms:
    marker = "  <-- explodes" if t.ill_conditioned else ""
    print(f"  {t.mu:10.5f} {t.alpha:8.3f} {t.stretch_power:12.4g} "
          f"{t.stiffness_power:14.4g}{marker}")
print("max amplification:", f"{report.max_amplification:.4g}")

# The same pathology, seen through the stability surrogate: the reduced
# principal-stretch Hessian loses positive semi-definiteness in the
# compressive corner of the admissible domain.
axis = np.linspace(0.2, 2.0, 10)
l1, l2 = np.meshgrid(axis, axis)
h11, h12, h22 = ogden_principal_hessian(result.model, l1, l2)
min_eig = 0.5 * ((h11 + h22) - np.sqrt((h11 - h22) ** 2 + 4 * h12**2))
print("\nmin Hessian eigenvalue over the stretch grid:",
      f"{float(np.nanmin(min_eig)):.4g}")
print("negative-curvature cells:",
      int(np.sum(min_eig < 0)), "of", min_eig.size)

# Contrast: in pure tension the fit itself is excellent.
for mode in (Mode.UT, Mode.ET):
    mse = result.mse_per_mode[mode]
    print(f"tensile {mode.value} mse: {mse:.5f} MPa^2")
