"""
Bias-pulse plateaus
===================

Sweeping the amplitude of a single bias pulse, each applied to a freshly
reset DAC, gives a staircase of flux increments. Trapped flux in the loop
shifts the positive and negative thresholds apart.
"""

import numpy as np

from fluxdac import harness
from fluxdac.config import config_from_dict

for trap in (0.0, 0.2):
    cfg = config_from_dict({"device_overrides": {"phi_trap_phi0": trap}})
    rec = harness.run_plateau_scan(cfg)
    print(f"phi_trap = {trap} Phi0")
    for name, th in rec.metadata["thresholds"].items():
        print(f"  {name:8s} first step at {th['first_step_mA']:.2f} mA "
              f"(predicted {th['predicted_mA']:.3f}), plateau {th['plateau_height_mPhi0']:.2f} mPhi0")

# The staircase itself, positive polarity, symmetric loop
rec = harness.run_plateau_scan(config_from_dict({}))
pos = rec.column("polarity") == 1
amps, flux = rec.column("amplitude")[pos], rec.column("delta_flux")[pos]
edges = np.nonzero(np.diff(flux))[0] + 1
for i in edges:
    print(f"  {amps[i]:.2f} mA -> {flux[i]:.2f} mPhi0")
