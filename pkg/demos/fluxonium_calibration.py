"""
Calibrating a fluxonium against a flux DAC
==========================================

Synthetic spectroscopy with 100 kHz readout noise, taken once with the bias
line alone and once through the DAC, is fitted back to the qubit energies
and the DAC step. Coherence data then gives the 1/f flux-noise amplitudes.
Takes about half a minute.
"""

from fluxdac import harness
from fluxdac.config import config_from_dict
from fluxdac.fluxonium import FluxoniumParams, f01, flux_sensitivity

qubit = FluxoniumParams(1.3, 5.08, 0.806)
print(f"sweet spot f01 = {f01(qubit, 0.5) * 1e3:.2f} MHz, "
      f"sensitivity at 0.49 Phi0 = {flux_sensitivity(qubit, 0.49):.3f} GHz/Phi0")

cfg = config_from_dict({"noise": {"seed": 1, "frequency_sigma_GHz": 1e-4}})
record = harness.run_spectroscopy(cfg)
fits = harness.calibrate(record)
for name, p in fits["fluxonium"].parameters.items():
    print(f"{name} = {p.value:.4f} +- {p.stderr:.4f} GHz")
step = fits["dac_step"].parameters["step"]
print(f"DAC step = {step.value:.4f} +- {step.stderr:.4f} mPhi0")

coh = harness.run_coherence(config_from_dict({"noise": {"seed": 2, "rate_sigma_rel": 0.05}}))
for name, fit in harness.calibrate(coh).items():
    a = fit.parameters["a_phi"]
    print(f"{name}: A_phi = {a.value:.2f} +- {a.stderr:.2f} uPhi0")
