"""Two nitrogen isotopologues kicked together.

The 15/14 ratio of their revival periods makes the combined FWM signal
beat: the revival peaks of the two species drift apart, cancel, and line
up again. The planner lists the delays where one species is fully revived
while the other sits at a half revival.

Run: python demos/mixture_interference.py
"""

# %%
import numpy as np

from rotsel import Pulse, load_species_database, revival_time, simulate_mixture
from rotsel.planner import plan_timing
from rotsel.signal import envelope_extremum, mixture_signal, revival_envelope

db = load_species_database()
n14, n15 = db["N2-14"].replace(D=0.0), db["N2-15"].replace(D=0.0)
T14, T15 = revival_time(n14), revival_time(n15)
print(f"T_rev: N2-14 {T14:.4f} ps, N2-15 {T15:.4f} ps")

# %% single kick, 1:1 mixture
times = np.arange(0.0, 140.0, 0.005)
trace = simulate_mixture([n14, n15], [Pulse(0.0, 1.0)], times, temperature=295)
signal = mixture_signal(trace, {n14.name: 0.5, n15.name: 0.5})

# %% full/half revival coincidences
plan = plan_timing([n15, n14], count=3)
print("period ratio", plan.ratio)
for s in plan.solutions:
    print(f"  {s.form:9s} p={s.p:3d} q={s.q:3d} t={s.time:8.3f} ps  full: {s.full_species}")

# %% revival envelope, one point per eighth of a period
# destructive beating at the first contrast time, rephasing at 15 T14 = 14 T15
t_env, h_env = revival_envelope(signal, T14 / 8, t_min=1.0)
t_min, h_min, _ = envelope_extremum(t_env, h_env, plan.solutions[0].time, "min")
t_max, h_max, _ = envelope_extremum(t_env, h_env, 15 * T14, "max")
print(f"envelope minimum {h_min:.3e} at {t_min:.2f} ps")
print(f"envelope maximum {h_max:.3e} at {t_max:.2f} ps")
