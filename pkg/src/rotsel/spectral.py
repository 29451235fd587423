"""Fourier analysis of FWM intensity traces and rotational line assignment.

Squaring the response turns every pair of Raman coherences ``J, J'`` into
lines at the sum ``f_J + f_J'`` (index ``s = J + J'``) and at the difference
``|f_J - f_J'|`` (index ``d = |J - J'|``). The cross term between the static
alignment offset and each coherence adds weak lines at the fundamentals
``f_J`` themselves (kind ``"single"``).

For a rigid rotor the sum line ``s`` and the difference line ``d = s + 3``
fall on the same frequency while carrying opposite parity classes.
Assignment therefore needs either predicted line strengths or an explicit
frequency that splits the two families.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.signal import find_peaks, get_window

from .physcore import C_CM_PER_PS, MolecularSpecies, energy_level
from .rotor import ISOTROPIC, Moments
from .signal import FwmSignal

KINDS = ("sum", "difference", "single")


class AssignmentAmbiguityError(ValueError):
    """Two catalog lines of different labels lie within the assignment tolerance."""


@dataclass(frozen=True)
class Line:
    kind: str
    index: int
    frequency: float  # cm^-1
    parity_class: str  # "same" | "mixed" | "none"
    #: magnitude of the positive-frequency amplitude, same units as Spectrum.magnitudes
    strength: Optional[float] = None

    @property
    def label(self) -> Tuple[str, int]:
        return (self.kind, self.index)


@dataclass(frozen=True)
class LineCatalog:
    entries: Tuple[Line, ...]
    B: float

    def __len__(self):
        return len(self.entries)

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([e.frequency for e in self.entries])

    @property
    def has_strengths(self) -> bool:
        return all(e.strength is not None for e in self.entries)

    def lines(self, kind: str, index: int) -> List[Line]:
        return [e for e in self.entries if e.kind == kind and e.index == index]


def _parity_class(index: int) -> str:
    return "same" if index % 2 == 0 else "mixed"


def coherence_frequencies(species: MolecularSpecies, jmax: int) -> np.ndarray:
    """``f_J = E_{J+2} - E_J`` for ``J = 0..jmax-2`` in cm^-1."""
    if jmax < 2:
        raise ValueError("jmax must be >= 2")
    E = energy_level(species, np.arange(jmax + 1))
    return E[2:] - E[:-2]


def predict_lines(
    species: MolecularSpecies,
    jmax: int,
    moments: Optional[Moments] = None,
    weight: float = 1.0,
) -> LineCatalog:
    """Enumerate the sum, difference and fundamental lines up to ``jmax``.

    With ``moments`` (post-pulse ensemble moments of this species) each line
    also carries its predicted strength for a response scaled by ``weight``.
    Lines sharing a label and a frequency are merged, amplitudes added
    coherently; with distortion the labels split into separate lines.
    """
    f = coherence_frequencies(species, jmax)
    n = len(f)
    G = None
    c0 = 0.0
    if moments is not None:
        G = np.zeros(n, dtype=complex)
        k = min(n, len(moments.coherence))
        G[:k] = weight * moments.coherence[:k] / moments.weight
        c0 = weight * (moments.static / moments.weight - ISOTROPIC)

    acc: Dict[Tuple[str, int, float], complex] = {}

    def add(kind, index, freq, amp):
        key = (kind, index, round(float(freq), 9))
        acc[key] = acc.get(key, 0.0) + amp

    for J in range(n):
        for Jp in range(J, n):
            a_sum = a_diff = 0.0
            if G is not None:
                a_sum = (1.0 if J == Jp else 2.0) * G[J] * G[Jp]
                a_diff = (2.0 * G[Jp] * np.conj(G[J])) if Jp != J else 2.0 * abs(G[J]) ** 2
            add("sum", J + Jp, f[J] + f[Jp], a_sum)
            add("difference", Jp - J, f[Jp] - f[J], a_diff)
        add("single", J, f[J], 2.0 * c0 * G[J] if G is not None else 0.0)
    if G is not None:
        add("difference", 0, 0.0, c0 * c0)

    entries = []
    for (kind, index, freq), amp in acc.items():
        pc = "none" if kind == "single" else _parity_class(index)
        entries.append(Line(kind, index, freq, pc, float(abs(amp)) if G is not None else None))
    entries.sort(key=lambda e: (e.frequency, KINDS.index(e.kind), e.index))
    return LineCatalog(tuple(entries), species.B)


@dataclass(frozen=True)
class Peak:
    bin: int
    bin_frequency: float  # cm^-1, on the grid
    frequency: float  # cm^-1, parabolic refinement
    magnitude: float
    kind: Optional[str] = None
    index: Optional[int] = None
    parity_class: Optional[str] = None
    line_frequency: Optional[float] = None

    @property
    def assigned(self) -> bool:
        return self.kind is not None


@dataclass
class Spectrum:
    frequencies: np.ndarray  # cm^-1
    magnitudes: np.ndarray
    peaks: List[Peak]
    metadata: Dict[str, object] = field(default_factory=dict)

    @property
    def frequencies_thz(self) -> np.ndarray:
        return self.frequencies * C_CM_PER_PS

    @property
    def resolution(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0])


def _segment(signal: FwmSignal, start: Optional[float]):
    t = np.asarray(signal.times, dtype=float)
    if len(t) < 4:
        raise ValueError("time grid too short for a spectrum")
    steps = np.diff(t)
    dt = steps.mean()
    if np.max(np.abs(steps - dt)) > 1e-6 * dt:
        raise ValueError("spectra need a uniform time grid")
    start = signal.origin if start is None else start
    sel = t >= start - 1e-9 * dt
    if sel.sum() < 4:
        raise ValueError(f"fewer than 4 samples after t={start} ps")
    return t[sel], signal.intensity[sel], dt


def _detect_peaks(mag: np.ndarray, rel_threshold: float):
    if mag.max() <= 0:
        return []
    padded = np.r_[-1.0, mag, -1.0]
    idx, _ = find_peaks(padded, height=rel_threshold * mag.max())
    out = []
    for k in idx - 1:
        shift = 0.0
        if 0 < k < len(mag) - 1:
            a, b, c = mag[k - 1], mag[k], mag[k + 1]
            den = a - 2 * b + c
            if den != 0:
                shift = float(np.clip(0.5 * (a - c) / den, -0.5, 0.5))
        out.append((int(k), shift))
    return out


def compute_spectrum(
    signal: FwmSignal,
    window: str = "blackmanharris",
    start: Optional[float] = None,
    rel_threshold: float = 1e-3,
    revival_period: Optional[float] = None,
) -> Spectrum:
    """Windowed Fourier magnitude of the intensity after ``start``.

    ``start`` defaults to the first pulse. Magnitudes are normalized by the
    window sum, so a component ``A exp(-i w t) + c.c.`` shows up as ``|A|``
    and the DC bin as the window-weighted mean.
    """
    t, y, dt = _segment(signal, start)
    duration = len(t) * dt
    if revival_period is not None and duration < 2 * revival_period * (1 - 1e-9):
        raise ValueError(
            f"trace spans {duration:.4g} ps after the pulse; need at least two revival periods ({2 * revival_period:.4g} ps)"
        )
    w = get_window(window, len(t))
    spec = np.fft.rfft(w * y)
    mag = np.abs(spec) / w.sum()
    freqs_thz = np.fft.rfftfreq(len(t), dt)
    freqs = freqs_thz / C_CM_PER_PS
    df = freqs[1] - freqs[0]
    peaks = [
        Peak(k, float(freqs[k]), float(freqs[k] + shift * df), float(mag[k]))
        for k, shift in _detect_peaks(mag, rel_threshold)
    ]
    meta = {
        "window": window,
        "start_ps": float(t[0]),
        "samples": int(len(t)),
        "dt_ps": float(dt),
        "resolution_cm1": float(df),
        "rel_threshold": rel_threshold,
    }
    return Spectrum(freqs, mag, peaks, meta)


def parseval_check(signal: FwmSignal, window: str = "blackmanharris", start: Optional[float] = None):
    """Spectral power from the one-sided transform against the time-domain mean square.

    Both refer to the windowed intensity series analysed by ``compute_spectrum``.
    """
    _, y, _ = _segment(signal, start)
    x = get_window(window, len(y)) * y
    n = len(x)
    X = np.fft.rfft(x)
    p = np.abs(X) ** 2
    p[1 : (n + 1) // 2] *= 2.0  # every bin except DC (and Nyquist for even n) has a mirror
    return float(p.sum() / n**2), float(np.mean(x * x))


def classify_peaks(
    spectrum: Spectrum,
    catalog: LineCatalog,
    tol: Optional[float] = None,
    split: Optional[float] = None,
) -> Spectrum:
    """Assign each peak to the nearest catalog line within ``tol`` (default 0.8 B).

    When lines of different labels lie within ``tol`` of a peak, the label
    with the larger predicted strength wins; without strengths, ``split``
    (cm^-1) assigns difference lines below it and sum lines above it.
    Anything still ambiguous raises :class:`AssignmentAmbiguityError`.
    """
    tol = 0.8 * catalog.B if tol is None else float(tol)
    if not tol < 2.0 * catalog.B:
        raise ValueError(f"tolerance {tol} must be below half the line spacing (2B = {2 * catalog.B})")
    freqs = catalog.frequencies
    order = np.argsort(freqs, kind="stable")
    sorted_f = freqs[order]
    out = []
    for pk in spectrum.peaks:
        lo = np.searchsorted(sorted_f, pk.frequency - tol, side="left")
        hi = np.searchsorted(sorted_f, pk.frequency + tol, side="right")
        cands = [catalog.entries[i] for i in order[lo:hi]]
        if not cands:
            out.append(pk)
            continue
        by_label: Dict[Tuple[str, int], List[Line]] = {}
        for c in cands:
            by_label.setdefault(c.label, []).append(c)
        if len(by_label) > 1:
            by_label = _resolve(pk, by_label, catalog.has_strengths, split)
        (label, lines), = by_label.items()
        best = min(lines, key=lambda e: abs(e.frequency - pk.frequency))
        out.append(replace(pk, kind=best.kind, index=best.index, parity_class=best.parity_class, line_frequency=best.frequency))
    return Spectrum(spectrum.frequencies, spectrum.magnitudes, out, dict(spectrum.metadata))


def _resolve(pk: Peak, by_label, has_strengths: bool, split: Optional[float]):
    if has_strengths:
        label = max(by_label, key=lambda lab: (sum(e.strength for e in by_label[lab]), lab))
        return {label: by_label[label]}
    kinds = {lab[0] for lab in by_label}
    if split is not None and len(by_label) == 2 and kinds == {"sum", "difference"}:
        want = "difference" if pk.frequency < split else "sum"
        return {lab: v for lab, v in by_label.items() if lab[0] == want}
    listing = ", ".join(
        f"{k} {i} at {min(e.frequency for e in v):.6g} cm^-1" for (k, i), v in sorted(by_label.items())
    )
    raise AssignmentAmbiguityError(f"peak at {pk.frequency:.6g} cm^-1 matches several lines: {listing}")


def parity_purity(spectrum: Spectrum) -> float:
    """``(same - mixed) / (same + mixed)`` over assigned sum/difference peak power.

    The DC line and fundamental (``single``) lines carry no pair parity and
    are left out.
    """
    same = mixed = 0.0
    for pk in spectrum.peaks:
        if pk.kind not in ("sum", "difference") or (pk.kind == "difference" and pk.index == 0):
            continue
        power = pk.magnitude**2
        if pk.parity_class == "same":
            same += power
        else:
            mixed += power
    if same + mixed == 0:
        raise ValueError("parity purity is undefined without assigned sum/difference peaks")
    return (same - mixed) / (same + mixed)


def assigned_peaks(spectrum: Spectrum, kind: str) -> Dict[int, Peak]:
    """Strongest peak per index of one line kind."""
    best: Dict[int, Peak] = {}
    for pk in spectrum.peaks:
        if pk.kind == kind and (pk.index not in best or pk.magnitude > best[pk.index].magnitude):
            best[pk.index] = pk
    return dict(sorted(best.items()))
