"""Pulse timing for isotope and spin-isomer selective alignment.

Two ideas drive the timing. A rational period ratio ``T1/T2 = n1/n2`` gives
times when one species is at a full revival and the other at a half
revival, so a second kick acts on them with opposite sign. Near quarter
revivals the even-J and odd-J manifolds of one species sit at opposite
alignment, which lets a second kick pick one nuclear-spin isomer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .physcore import MolecularSpecies, revival_time, thermal_ensemble
from .rotor import (
    ISOTROPIC,
    Pulse,
    _map,
    apply_pulses,
    ensemble_moments,
    kick_ensemble,
    prepare_ensemble,
    propagate_ensemble,
    rotational_energy,
    simulate_trace,
)
from .signal import ResponseComponent, fwm_signal
from .spectral import classify_peaks, compute_spectrum, parity_purity, predict_lines

PARITY_NAMES = ("even", "odd")


def rationalize_ratio(T1: float, T2: float, max_den: int = 50) -> Tuple[int, int]:
    """Closest fraction ``n1/n2`` to ``T1/T2`` with ``n2 <= max_den``."""
    if not (T1 > 0 and T2 > 0):
        raise ValueError("periods must be positive")
    if max_den < 2:
        raise ValueError("max_den must be >= 2")
    frac = Fraction(T1 / T2).limit_denominator(max_den)
    return frac.numerator, frac.denominator


@dataclass(frozen=True)
class ContrastSolution:
    p: int
    q: int
    #: "full-half": p T1 = (q + 1/2) T2; "half-full": (p + 1/2) T1 = q T2
    form: str
    time: float
    full_species: str
    half_species: str
    refined_time: Optional[float] = None
    verified: Optional[bool] = None


def _check_relation(n1: int, n2: int, sol: ContrastSolution) -> bool:
    if sol.form == "full-half":
        return 2 * sol.p * n1 == (2 * sol.q + 1) * n2
    return (2 * sol.p + 1) * n1 == 2 * sol.q * n2


def contrast_times(
    n1: int, n2: int, T1: float, count: int, names: Tuple[str, str] = ("species 1", "species 2")
) -> List[ContrastSolution]:
    """First ``count`` positive-integer solutions of the full/half revival conditions.

    Only one of the two forms can be solvable for coprime ``n1, n2``: the
    full-half form needs ``n2`` even, the half-full form needs ``n1`` even.
    """
    n1, n2, count = int(n1), int(n2), int(count)
    if n1 < 1 or n2 < 1:
        raise ValueError("ratio terms must be positive integers")
    if math.gcd(n1, n2) != 1:
        raise ValueError(f"ratio ({n1}, {n2}) is not reduced; gcd = {math.gcd(n1, n2)}")
    if count < 1:
        raise ValueError("count must be >= 1")
    out: List[ContrastSolution] = []
    k = 1
    while len(out) < count:
        if n2 % 2 == 0:
            # p n1 = (2q + 1) n2/2 with gcd(n1, n2/2) = 1 forces p = k n2/2, 2q + 1 = k n1
            p, q = k * n2 // 2, (k * n1 - 1) // 2
            sol = ContrastSolution(p, q, "full-half", p * T1, names[0], names[1])
        elif n1 % 2 == 0:
            p, q = (k * n2 - 1) // 2, k * n1 // 2
            sol = ContrastSolution(p, q, "half-full", (p + 0.5) * T1, names[1], names[0])
        else:
            return []
        if sol.p >= 1 and sol.q >= 1:
            assert _check_relation(n1, n2, sol)
            out.append(sol)
        k += 2
    return out


@dataclass(frozen=True)
class IsomerWindow:
    k: int
    fraction: float  # 0.25 or 0.75
    delay: float  # ps after the first pulse
    aligned_parity: str
    anti_aligned_parity: str


def parity_alignment_sign(fraction: float, parity: int) -> float:
    """Sign of the weak-kick alignment of one J manifold at ``fraction`` of T_rev.

    A weak kick gives ``<cos^2> - static`` proportional to ``sin(w_J t)`` per
    coherence, and ``w_J T_rev = pi (4J + 6)``. At quarter fractions the sign
    is the same for every J of a given parity.
    """
    return float(np.sign(np.round(np.sin(np.pi * (4 * parity + 6) * fraction), 12)))


def isomer_windows(T_rev: float, count: int, origin: float = 0.0) -> List[IsomerWindow]:
    """Quarter and three-quarter revival delays tagged by the aligned manifold."""
    if count < 1:
        raise ValueError("count must be >= 1")
    out = []
    for k in range(count):
        for frac in (0.25, 0.75):
            signs = [parity_alignment_sign(frac, par) for par in (0, 1)]
            aligned = PARITY_NAMES[int(np.argmax(signs))]
            anti = PARITY_NAMES[int(np.argmin(signs))]
            out.append(IsomerWindow(k, frac, origin + (k + frac) * T_rev, aligned, anti))
    return out


@dataclass
class TimingPlan:
    ratio: Tuple[int, int]
    periods: Tuple[float, float]
    names: Tuple[str, str]
    solutions: List[ContrastSolution]
    windows: List[IsomerWindow] = field(default_factory=list)


def verify_contrast(
    species: Sequence[MolecularSpecies],
    solution: ContrastSolution,
    temperature: float,
    strength: float = 1.0,
    tail_eps: float = 1e-6,
    samples_per_period: int = 1000,
) -> ContrastSolution:
    """Simulate both species after one kick at t=0 around a planned time.

    The refined time maximizes the anti-correlation ``-d1 d2`` of the two
    alignment deviations within a quarter period. The solution counts as
    verified when, at the strongest alignment extremum of the species at
    its full revival, the other species has the opposite sign.
    """
    s1, s2 = species
    by_name = {s.name: s for s in species}
    full = by_name.get(solution.full_species, s1)
    T = revival_time(full)
    dt = T / samples_per_period
    times = np.arange(solution.time - T / 4, solution.time + T / 4 + dt / 2, dt)
    times = times[times > 0]
    devs = {}
    for sp in species:
        ens = thermal_ensemble(sp, temperature, tail_eps, total_kick=strength * sp.kick_scale)
        tr = simulate_trace(sp, [Pulse(0.0, strength)], np.r_[0.0, times], ens)
        devs[sp.name] = tr.values[sp.name][1:] - ISOTROPIC
    d_full = devs[full.name]
    d_other = devs[s2.name if full is s1 else s1.name]
    refined = float(times[np.argmin(d_full * d_other)])
    k = int(np.argmax(np.abs(d_full)))
    verified = bool(np.sign(d_full[k]) == -np.sign(d_other[k]))
    return ContrastSolution(**{**solution.__dict__, "refined_time": refined, "verified": verified})


def plan_timing(
    species: Sequence[MolecularSpecies],
    count: int = 3,
    max_den: int = 50,
    windows: int = 1,
    temperature: Optional[float] = None,
    strength: float = 1.0,
) -> TimingPlan:
    """Contrast times for a species pair plus isomer windows of the first species.

    With a temperature the planned times are refined and checked by simulation.
    """
    if len(species) != 2:
        raise ValueError("contrast planning needs exactly two species")
    s1, s2 = species
    T1, T2 = revival_time(s1), revival_time(s2)
    n1, n2 = rationalize_ratio(T1, T2, max_den)
    sols = contrast_times(n1, n2, T1, count, (s1.name, s2.name))
    if temperature is not None:
        sols = [verify_contrast(species, s, temperature, strength) for s in sols]
    return TimingPlan((n1, n2), (T1, T2), (s1.name, s2.name), sols, isomer_windows(T1, windows))


# ---------------------------------------------------------------------------
# second-pulse selectivity


def _coherence_norm(moments) -> float:
    return float(np.linalg.norm(moments.coherence / moments.weight))


def _post_pulse_purity(species, state, moments, start, periods, samples_per_period, window):
    T = revival_time(species)
    n = int(round(periods * samples_per_period))
    rel = np.arange(n) * (T / samples_per_period)
    values = moments.evaluate(rel)
    comp = ResponseComponent(species.name, start + rel, values - ISOTROPIC)
    sig = fwm_signal([comp], origin=start)
    spec = compute_spectrum(sig, window=window)
    cat = predict_lines(species, state.jmax, moments)
    spec = classify_peaks(spec, cat)
    return parity_purity(spec), spec, float(np.mean(sig.intensity))


@dataclass(frozen=True)
class SpeciesSelectivity:
    name: str
    gain_single: float
    gain_double: float
    ratio: float
    coherence_ratio: float
    #: double/single gain ratios of the even and odd J manifolds
    parity_ratios: Tuple[float, float]
    flag: str
    purity: Optional[float] = None


@dataclass
class SelectivityReport:
    pulses: Tuple[Pulse, Pulse]
    species: List[SpeciesSelectivity]

    def by_name(self) -> Dict[str, SpeciesSelectivity]:
        return {s.name: s for s in self.species}


def _parity_gains(before, after) -> Tuple[float, float]:
    return tuple(rotational_energy(after, par) - rotational_energy(before, par) for par in (0, 1))


def selectivity(
    species: Sequence[MolecularSpecies],
    pulses: Sequence[Pulse],
    temperature: float,
    tail_eps: float = 1e-8,
    purity: bool = False,
    threads: int = 1,
) -> SelectivityReport:
    """Energy gains after both kicks relative to the first kick alone, per species."""
    if len(pulses) != 2:
        raise ValueError("selectivity needs exactly two pulses")
    first, second = sorted(pulses, key=lambda p: p.time)
    rows = []
    for sp in species:
        total = (first.strength + second.strength) * sp.kick_scale
        ens = thermal_ensemble(sp, temperature, tail_eps, total_kick=total)
        thermal = prepare_ensemble(sp, ens)
        single = apply_pulses(thermal, [first], until=second.time, threads=threads)
        double = kick_ensemble(single, second.strength * sp.kick_scale, threads)
        e0 = rotational_energy(thermal)
        g1, g2 = rotational_energy(single) - e0, rotational_energy(double) - e0
        if not g1 > 0:
            raise ValueError(f"{sp.name}: first kick deposits no energy")
        p1, p2 = _parity_gains(thermal, single), _parity_gains(thermal, double)
        par_ratios = tuple(b / a if a > 0 else float("nan") for a, b in zip(p1, p2))
        m1, m2 = ensemble_moments(single, threads=threads), ensemble_moments(double, threads=threads)
        ratio = g2 / g1
        flag = "enhanced" if ratio > 1 else "suppressed" if ratio < 1 else "neutral"
        pi = None
        if purity:
            pi = _post_pulse_purity(sp, double, m2, second.time, 4, 400, "blackmanharris")[0]
        rows.append(SpeciesSelectivity(sp.name, g1, g2, ratio, _coherence_norm(m2) / _coherence_norm(m1), par_ratios, flag, pi))
    return SelectivityReport((first, second), rows)


@dataclass(frozen=True)
class ScanPoint:
    delay: float  # absolute time of the second pulse, ps
    purity: float
    gain_even: float
    gain_odd: float
    #: (r_even - r_odd) / (r_even + r_odd) with r the gain relative to the first kick alone
    selectivity: float
    mean_intensity: float

    @property
    def gain_total(self) -> float:
        return self.gain_even + self.gain_odd


@dataclass
class ScanResult:
    species: str
    revival_time: float
    points: List[ScanPoint]
    frequencies: np.ndarray
    spectra: np.ndarray  # (delays, frequencies)
    even_selective: ScanPoint
    odd_selective: ScanPoint
    settings: Dict[str, object] = field(default_factory=dict)

    @property
    def delays(self) -> np.ndarray:
        return np.array([p.delay for p in self.points])


def scan_delays(center: float, half_width: float, step: float) -> np.ndarray:
    if not step > 0:
        raise ValueError("scan step must be positive")
    if half_width < 0:
        raise ValueError("half_width must be >= 0")
    n = int(math.floor(half_width / step + 1e-9))
    return center + step * np.arange(-n, n + 1)


def scan_second_pulse(
    species: MolecularSpecies,
    temperature: float,
    first: Pulse,
    second_strength: float,
    center: float,
    half_width: Optional[float] = None,
    step: Optional[float] = None,
    probe_periods: float = 4.0,
    samples_per_period: int = 400,
    window: str = "blackmanharris",
    tail_eps: float = 1e-8,
    threads: int = 1,
) -> ScanResult:
    """Second-pulse delay scan with post-pulse spectra, purity and manifold gains.

    ``center`` is the absolute second-pulse time in ps; ``half_width`` and
    ``step`` default to 5% and 1/800 of the revival period. The even- and
    odd-selective delays maximize and minimize the signed manifold
    selectivity; the purity at each is reported alongside.
    """
    T = revival_time(species)
    half_width = 0.05 * T if half_width is None else float(half_width)
    step = T / 800 if step is None else float(step)
    delays = scan_delays(center, half_width, step)
    if delays[0] <= first.time:
        raise ValueError(
            f"scan window starts at {delays[0]:.6g} ps, not after the first pulse at {first.time:.6g} ps"
        )
    total = (first.strength + second_strength) * species.kick_scale
    ens = thermal_ensemble(species, temperature, tail_eps, total_kick=total)
    thermal = prepare_ensemble(species, ens)
    after_first = apply_pulses(thermal, [first])
    e_thermal = [rotational_energy(thermal, par) for par in (0, 1)]
    single = [rotational_energy(after_first, par) - e for par, e in zip((0, 1), e_thermal)]

    def point(delay):
        state = propagate_ensemble(after_first, delay - after_first.time)
        state = kick_ensemble(state, second_strength * species.kick_scale)
        gains = [rotational_energy(state, par) - e for par, e in zip((0, 1), e_thermal)]
        moments = ensemble_moments(state)
        pi, spec, mean_i = _post_pulse_purity(species, state, moments, delay, probe_periods, samples_per_period, window)
        r = [g / s for g, s in zip(gains, single)]
        sel = (r[0] - r[1]) / (r[0] + r[1]) if r[0] + r[1] > 0 else 0.0
        return ScanPoint(float(delay), float(pi), gains[0], gains[1], float(sel), mean_i), spec

    results = _map(point, list(delays), threads)
    points = [p for p, _ in results]
    spectra = np.array([s.magnitudes for _, s in results])
    sel = np.array([p.selectivity for p in points])
    settings = {
        "half_width_ps": half_width,
        "step_ps": step,
        "probe_periods": probe_periods,
        "samples_per_period": samples_per_period,
        "window": window,
        "jmax": ens.jmax,
    }
    return ScanResult(
        species.name,
        T,
        points,
        results[0][1].frequencies,
        spectra,
        points[int(np.argmax(sel))],
        points[int(np.argmin(sel))],
        settings,
    )
