"""Incompressible hyperelasticity: invariants, stresses, baseline fits.

Loads the bundled rubber tensile data (uniaxial + equibiaxial for training,
pure shear held out) and calibrates the classical models against it.  The
cross-mode pattern is the point: polynomial I1-only models that look fine
in uniaxial tension miss the equibiaxial response badly.
"""

import numpy as np

from hypersr import data
from hypersr.mechanics import (Mode, calibrate_baseline, dataset_mse,
                               invariants, model_params, nominal_stress)

# The three homogeneous test modes and their invariant paths.
lam = np.array([1.0, 2.0, 4.0])
for mode in Mode:
    i1, i2 = invariants(mode, lam)
    print(f"{mode.value}: stretch {lam} -> I1-3 {np.round(i1, 3)}  "
          f"I2-3 {np.round(i2, 3)}")

split = data.default_split(data.treloar_datasets())
print("\ntrain:", [f"{d.mode.value}({len(d.stretch)} pts)" for d in split.train])
print("holdout:", [f"{d.mode.value}({len(d.stretch)} pts)" for d in split.holdout])

for kind in ("neo_hookean", "mooney_rivlin", "yeoh3", "ogden3"):
    result = calibrate_baseline(kind, split.train)
    hold, _ = dataset_mse(result.model, split.holdout)
    per_mode = {m.value: round(v, 4) for m, v in result.mse_per_mode.items()}
    print(f"\n{kind}")
    print("  params:      ", [round(p, 5) for p in model_params(result.model)])
    print("  train mse:   ", round(result.mse, 4), "per mode:", per_mode)
    print("  holdout mse: ", round(hold, 4), "(pure shear, never fitted)")

# The Yeoh model ignores I2 entirely; its equibiaxial error dwarfs its
# uniaxial one, which is the classic symptom.
yeoh = calibrate_baseline("yeoh3", split.train)
print("\nYeoh ET/UT error ratio:",
      round(yeoh.mse_per_mode[Mode.ET] / yeoh.mse_per_mode[Mode.UT], 2))

# Stress predictions are exact derivatives of the energy, not tables.
mr = calibrate_baseline("mooney_rivlin", split.train).model
print("\nMooney-Rivlin uniaxial stress at stretch 2:",
      round(float(nominal_stress(mr, Mode.UT, np.array([2.0]))[0]), 4), "MPa")
