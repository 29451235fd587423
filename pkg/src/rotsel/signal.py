"""Homodyne four-wave-mixing signal of a (mixed) aligned gas.

The signal is the square of the summed, mole-fraction weighted deviations
of ``<cos^2 theta>`` from its isotropic value. Summing before squaring is
what produces the inter-species interference.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.signal import find_peaks

from .rotor import ISOTROPIC, AlignmentTrace


@dataclass(frozen=True)
class ResponseComponent:
    name: str
    times: np.ndarray
    values: np.ndarray


@dataclass
class FwmSignal:
    times: np.ndarray
    response: np.ndarray
    intensity: np.ndarray
    decay_tau: float = np.inf
    components: Dict[str, np.ndarray] = field(default_factory=dict)
    #: time of the first pulse; spectra discard everything before it
    origin: float = 0.0

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


def species_response(trace: AlignmentTrace, weight: float, name: Optional[str] = None) -> ResponseComponent:
    """Signed response ``w (<cos^2> - 1/3)`` of one species."""
    if name is None:
        if len(trace.values) != 1:
            raise ValueError("trace holds several species; pass name=")
        name = next(iter(trace.values))
    return ResponseComponent(name, trace.times, weight * (trace.values[name] - ISOTROPIC))


def fwm_signal(responses: Sequence[ResponseComponent], decay_tau: float = np.inf, origin: float = 0.0) -> FwmSignal:
    """Sum the components, apply ``exp(-t/decay_tau)`` and square."""
    if not responses:
        raise ValueError("need at least one response component")
    times = responses[0].times
    for r in responses[1:]:
        if len(r.times) != len(times) or not np.array_equal(r.times, times):
            raise ValueError(f"response {r.name!r} is on a different time grid")
    if not decay_tau > 0:
        raise ValueError("decay_tau must be positive (use inf for no decay)")
    total = np.zeros(len(times))
    for r in responses:
        total = total + r.values
    if np.isfinite(decay_tau):
        total = total * np.exp(-times / decay_tau)
    return FwmSignal(
        times=times,
        response=total,
        intensity=total * total,
        decay_tau=float(decay_tau),
        components={r.name: r.values for r in responses},
        origin=origin,
    )


def mixture_signal(trace: AlignmentTrace, weights: Dict[str, float], decay_tau: float = np.inf) -> FwmSignal:
    comps = [species_response(trace, weights[name], name) for name in trace.values]
    origin = trace.pulses[0].time if trace.pulses else float(trace.times[0])
    return fwm_signal(comps, decay_tau, origin)


def revival_envelope(signal: FwmSignal, spacing: float, t_min: float = None, t_max: float = None):
    """Tallest intensity maxima separated by at least ``spacing`` ps.

    Returns ``(times, heights)`` of the envelope points.
    """
    t, y = signal.times, signal.intensity
    sel = np.ones(len(t), dtype=bool)
    if t_min is not None:
        sel &= t >= t_min
    if t_max is not None:
        sel &= t <= t_max
    idx = np.flatnonzero(sel)
    distance = max(1, int(round(spacing / signal.dt)))
    peaks, _ = find_peaks(y[idx], distance=distance)
    return t[idx][peaks], y[idx][peaks]


def envelope_extremum(times, heights, near: float, kind: str = "min", search: float = 5.0):
    """Envelope point with the extreme height within ``near +/- search`` ps.

    Returns ``(time, height, is_local)`` where ``is_local`` tells whether the
    point is a strict local extremum of the envelope sequence.
    """
    times, heights = np.asarray(times), np.asarray(heights)
    cand = np.flatnonzero(np.abs(times - near) <= search)
    if len(cand) == 0:
        raise ValueError(f"no envelope points within {search} ps of {near} ps")
    pick = cand[np.argmin(heights[cand])] if kind == "min" else cand[np.argmax(heights[cand])]
    local = 0 < pick < len(heights) - 1
    if local:
        lo, hi = heights[pick - 1], heights[pick + 1]
        here = heights[pick]
        local = (here < lo and here < hi) if kind == "min" else (here > lo and here > hi)
    return float(times[pick]), float(heights[pick]), bool(local)


@dataclass(frozen=True)
class PeakGroup:
    start: float
    end: float
    peak_time: float
    peak_value: float


def peak_groups(
    signal: FwmSignal,
    t_min: float,
    t_max: float,
    rel_threshold: float = 0.1,
    merge_gap: float = 0.5,
) -> List[PeakGroup]:
    """Temporally resolved groups of intensity features inside a window.

    A group is a run of samples above ``rel_threshold`` of the window
    maximum; runs closer than ``merge_gap`` ps belong to the same group.
    """
    t, y = signal.times, signal.intensity
    sel = (t >= t_min) & (t <= t_max)
    tt, yy = t[sel], y[sel]
    if len(tt) == 0:
        return []
    above = yy > rel_threshold * yy.max()
    edges = np.diff(np.r_[0, above.astype(int), 0])
    starts, stops = np.flatnonzero(edges == 1), np.flatnonzero(edges == -1)
    runs = [[a, b] for a, b in zip(starts, stops)]
    merged = []
    for a, b in runs:
        if merged and tt[a] - tt[merged[-1][1] - 1] < merge_gap:
            merged[-1][1] = b
        else:
            merged.append([a, b])
    groups = []
    for a, b in merged:
        k = a + int(np.argmax(yy[a:b]))
        groups.append(PeakGroup(float(tt[a]), float(tt[b - 1]), float(tt[k]), float(yy[k])))
    return groups
