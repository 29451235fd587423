"""Chlorine isotopologues at room temperature.

Three species with revival periods in the ratio of their reduced masses
start in phase and drift apart within the first revival. Centrifugal
distortion adds a slow J-dependent dephasing on top.

Run: python demos/cl2_dephasing.py
"""

# %%
import numpy as np

from rotsel import Pulse, load_species_database, revival_time, simulate_mixture
from rotsel.signal import mixture_signal, peak_groups

db = load_species_database()
names = ["Cl2-35", "Cl-35-37", "Cl2-37"]
species = [db[n] for n in names]
for sp in species:
    print(f"{sp.name:9s} B={sp.B:.5f} cm^-1  T_rev={revival_time(sp):7.3f} ps")

# %% equal weights, P = 2
times = np.arange(0.0, 160.0, 0.01)
trace = simulate_mixture(species, [Pulse(0.0, 2.0)], times, temperature=295)
signal = mixture_signal(trace, {n: 1 / 3 for n in names})

# %% peak groups around the first full revival
T35 = revival_time(species[0])
for g in peak_groups(signal, 0.9 * T35, 1.15 * T35):
    print(f"group {g.start:8.2f}..{g.end:8.2f} ps  peak {g.peak_time:8.2f} ps  height {g.peak_value:.3e}")
