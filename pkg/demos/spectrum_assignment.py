"""Fourier lines of a weakly kicked 15N2 trace.

The intensity is the square of the alignment response, so its spectrum
holds sums and differences of the Raman coherence frequencies. Lines
whose index is even come from two coherences of the same parity manifold;
odd indices mix the two manifolds.

Run: python demos/spectrum_assignment.py
"""

# %%
import numpy as np

from rotsel import Pulse, load_species_database, revival_time, simulate_mixture
from rotsel.signal import mixture_signal
from rotsel.spectral import classify_peaks, compute_spectrum, parity_purity, predict_lines

sp = load_species_database()["N2-15"].replace(D=0.0)
T = revival_time(sp)
times = np.arange(0.0, 8 * T, 0.005)
trace = simulate_mixture([sp], [Pulse(0.0, 0.01)], times, temperature=295)
signal = mixture_signal(trace, {sp.name: 1.0})

# %%
spec = compute_spectrum(signal, revival_period=T)
catalog = predict_lines(sp, trace.jmax[sp.name], trace.moments[sp.name])
spec = classify_peaks(spec, catalog)
print(f"resolution {spec.resolution:.4f} cm^-1, {len(spec.peaks)} peaks")

# %% strongest assigned lines
top = sorted((p for p in spec.peaks if p.assigned), key=lambda p: -p.magnitude)[:12]
for p in sorted(top, key=lambda p: p.frequency):
    print(f"{p.frequency:8.3f} cm^-1  {p.kind:10s} {p.index:3d}  {p.parity_class:5s}  {p.magnitude:.3e}")
print(f"parity purity {parity_purity(spec):.3f}")
