"""
The storage loop as a tilted washboard
======================================

A large screening parameter gives the rf-SQUID dozens of metastable wells.
This walks through the wells of the C4R1 cell and what a bias pulse does
to one of them.
"""

import numpy as np

from fluxdac.squid import critical_tilt, find_minima, potential, rcsj_transient
from fluxdac.units import derive, get_preset
from fluxdac.waveform import PulseWaveform

dev = get_preset("C4R1-DAC1")
d = derive(dev)
print(f"beta_L = {d.beta_l:.2f}, beta_c = {d.beta_c:.3f} (overdamped)")

# Every local minimum of U/E_J = (phi - phi_ext)^2 / (2 beta_L) - cos(phi)
# is a stored digit. At zero external flux the wells reach +-38.
wells = find_minima(0.0, d.beta_l)
print(f"{len(wells)} wells, digits {wells[0].index_n}..{wells[-1].index_n}")
for w in wells[36:41]:
    print(f"  digit {w.index_n:+d}: phi = {w.phi_min:8.4f} rad, U = {potential(w.phi_min, 0.0, d.beta_l):8.4f}")

# A well disappears once the external phase passes its critical tilt.
# Successive wells are spaced by exactly 2 pi.
c0 = critical_tilt(d.beta_l, 0, +1)
print(f"well 0 vanishes at phi_ext = {c0:.4f} rad; well 1 at {critical_tilt(d.beta_l, 1, +1):.4f}")

# Integrate the damped loop equation through a square pulse just over the
# threshold. The phase slips one period and settles in the next well.
start = next(w for w in wells if w.index_n == 0)
for extra in (-0.5, 0.5, 0.5 + 2 * np.pi):
    wf = PulseWaveform.square(c0 + extra, rise=1000.0, hold=1000.0, fall=1000.0)
    traj = rcsj_transient(start.phi_min, wf, d)
    print(f"pulse {c0 + extra:8.3f} rad -> digit {traj.final_state.index_n:+d} after tau = {traj.times[-1]:.0f}")
