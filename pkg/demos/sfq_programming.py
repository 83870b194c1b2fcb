"""
Programming a DAC with SFQ pulses
=================================

A trigger train is converted to SFQ pulses, carried down a JTL and counted
into the storage loop one flux quantum at a time. The output is linear in
the pulse count until the usable window runs out.
"""

from fluxdac import harness
from fluxdac.config import config_from_dict

cfg = config_from_dict({"sfq": {"start_digits": [-20, 0, 33], "max_pulses": 6}})
rec = harness.run_sfq_program(cfg)
for line in rec.metadata["lines"]:
    print(f"start {line['start_digit']:+3d}, polarity {line['polarity']:+d}: "
          f"slope {line['slope_mPhi0_per_pulse']:+.4f} mPhi0/pulse, residual {line['residual_rms_Phi0']:.1e} Phi0")

# Starting near the top of the window, the extra pulses are dropped
sel = (rec.column("start_digit") == 33) & (rec.column("polarity") == 1)
for n, digit, dropped in zip(rec.column("pulse_count")[sel], rec.column("digit")[sel], rec.column("dropped")[sel]):
    print(f"  {int(n)} pulses -> digit {int(digit)}, dropped {int(dropped)}")

# Remaining margin falls one-for-one as the starting digit rises
m = harness.run_margin_sweep(config_from_dict({"sweeps": {"margins": {"digits": [-36, -18, 0, 18, 36]}}}))
for d, p, n in zip(m.column("digit"), m.column("positive_margin"), m.column("negative_margin")):
    print(f"digit {int(d):+3d}: +{int(p)} / -{int(n)} pulses")
