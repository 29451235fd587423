"""Impulsive-kick propagation of rotational wave packets.

The interaction of a non-resonant pulse with a linear rotor is a unitary
``exp(i P cos^2 theta)`` acting within a block of fixed ``m`` and J-parity.
Free evolution is applied analytically through the phases
``exp(-i 2 pi c E_J t)``, so there is no time-stepping error anywhere.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Sequence

import numpy as np

from .physcore import (
    C_CM_PER_PS,
    MolecularSpecies,
    ThermalEnsemble,
    energy_ladder,
    revival_time,
    thermal_ensemble,
)

ISOTROPIC = 1.0 / 3.0
LEAKAGE_LIMIT = 1e-6
TWO_PI_C = 2.0 * math.pi * C_CM_PER_PS


class BasisTooSmallError(RuntimeError):
    """Population reached the top rows of a truncated J block."""


@dataclass(frozen=True)
class Pulse:
    time: float
    strength: float

    def __post_init__(self):
        if self.strength < 0:
            raise ValueError(f"pulse strength must be >= 0, got {self.strength}")
        if self.time < 0:
            raise ValueError(f"pulse time must be >= 0, got {self.time}")


def cos2_diagonal(J, m):
    J = np.asarray(J, dtype=float)
    m2 = float(m) ** 2
    return ISOTROPIC + (2.0 / 3.0) * (J * (J + 1) - 3 * m2) / ((2 * J - 1) * (2 * J + 3))


def cos2_offdiagonal(J, m):
    """``<J+2, m| cos^2 theta |J, m>``."""
    J = np.asarray(J, dtype=float)
    m2 = float(m) ** 2
    num = np.sqrt(np.clip(((J + 1) ** 2 - m2) * ((J + 2) ** 2 - m2), 0.0, None))
    return num / ((2 * J + 3) * np.sqrt((2 * J + 1) * (2 * J + 5)))


def cos2_matrix(jmax: int, m: int) -> np.ndarray:
    """Matrix of cos^2 theta over ``J = |m| .. jmax`` at fixed ``m``.

    Only the diagonal and the ``|dJ| = 2`` bands are non-zero.
    """
    if abs(m) > jmax:
        raise ValueError(f"|m|={abs(m)} exceeds jmax={jmax}")
    js = np.arange(abs(m), jmax + 1)
    mat = np.diag(cos2_diagonal(js, m))
    if len(js) > 2:
        off = cos2_offdiagonal(js[:-2], m)
        mat += np.diag(off, 2) + np.diag(off, -2)
    return mat


@dataclass(frozen=True)
class _Block:
    js: np.ndarray
    diag: np.ndarray
    off: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray

    def propagator(self, P: float) -> np.ndarray:
        return (self.eigvecs * np.exp(1j * P * self.eigvals)) @ self.eigvecs.T


@lru_cache(maxsize=4096)
def operator_block(jmax: int, m_abs: int, parity: int) -> _Block:
    """cos^2 theta restricted to one (|m|, parity) block, diagonalized once."""
    if m_abs > jmax:
        raise ValueError(f"|m|={m_abs} exceeds jmax={jmax}")
    start = m_abs if m_abs % 2 == parity else m_abs + 1
    js = np.arange(start, jmax + 1, 2)
    diag = cos2_diagonal(js, m_abs)
    off = cos2_offdiagonal(js[:-1], m_abs)
    mat = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    w, v = np.linalg.eigh(mat)
    for arr in (js, diag, off, w, v):
        arr.setflags(write=False)
    return _Block(js, diag, off, w, v)


@dataclass(frozen=True)
class RotorState:
    """Amplitudes over the parity-consistent J ladder of one ``(m, parity)`` block."""

    m: int
    parity: int
    jmax: int
    amplitudes: np.ndarray

    @property
    def js(self) -> np.ndarray:
        return operator_block(self.jmax, abs(self.m), self.parity).js

    @classmethod
    def basis(cls, J: int, m: int, jmax: int) -> "RotorState":
        block = operator_block(jmax, abs(m), J % 2)
        amps = np.zeros(len(block.js), dtype=complex)
        amps[np.searchsorted(block.js, J)] = 1.0
        return cls(m, J % 2, jmax, amps)

    @property
    def norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def population(self) -> Dict[int, float]:
        return dict(zip(self.js.tolist(), (np.abs(self.amplitudes) ** 2).tolist()))


def _check_leakage(amps: np.ndarray, m: int, parity: int, jmax: int, labels=None):
    top = np.sum(np.abs(amps[..., -2:]) ** 2, axis=-1)
    bad = np.atleast_1d(top > LEAKAGE_LIMIT)
    if bad.any():
        worst = float(np.max(top))
        which = "" if labels is None else f", initial J0={labels[int(np.argmax(bad))]}"
        raise BasisTooSmallError(
            f"basis too small: block m={m}, parity={'odd' if parity else 'even'}, "
            f"jmax={jmax}{which}: population {worst:.3g} in the top two J rows"
        )


def kick(state: RotorState, P: float) -> RotorState:
    """Apply ``exp(i P cos^2 theta)``."""
    if P < 0:
        raise ValueError("kick strength must be >= 0")
    if P == 0:
        return state
    block = operator_block(state.jmax, abs(state.m), state.parity)
    amps = block.propagator(P) @ state.amplitudes
    _check_leakage(amps, state.m, state.parity, state.jmax)
    return RotorState(state.m, state.parity, state.jmax, amps)


def propagate(state: RotorState, dt: float, species: MolecularSpecies) -> RotorState:
    """Field-free evolution by ``dt`` ps."""
    if dt < 0:
        raise ValueError("dt must be >= 0")
    E = energy_ladder(species, state.jmax)[state.js]
    return RotorState(state.m, state.parity, state.jmax, state.amplitudes * np.exp(-1j * TWO_PI_C * E * dt))


def expect_cos2(state: RotorState) -> float:
    block = operator_block(state.jmax, abs(state.m), state.parity)
    a = state.amplitudes
    val = np.sum(np.abs(a) ** 2 * block.diag) + 2.0 * np.sum((np.conj(a[:-1]) * a[1:]).real * block.off)
    return float(val)


# ---------------------------------------------------------------------------
# ensembles


@dataclass
class _MemberBatch:
    m_abs: int
    parity: int
    block: _Block
    J0: np.ndarray
    m: np.ndarray
    weights: np.ndarray
    amps: np.ndarray  # (members, block size)


@dataclass
class EnsembleState:
    """All members of a thermal ensemble, batched by ``(|m|, parity)`` block.

    Batches are ordered by ``(|m|, parity)`` and members inside a batch by
    ``(J0, m)``; every reduction sums in this order.
    """

    species: MolecularSpecies
    jmax: int
    time: float
    batches: List[_MemberBatch]

    def copy(self) -> "EnsembleState":
        return EnsembleState(
            self.species,
            self.jmax,
            self.time,
            [_MemberBatch(b.m_abs, b.parity, b.block, b.J0, b.m, b.weights, b.amps.copy()) for b in self.batches],
        )

    def total_weight(self) -> float:
        return float(sum(b.weights.sum() for b in self.batches))


def prepare_ensemble(species: MolecularSpecies, ensemble: ThermalEnsemble) -> EnsembleState:
    J0, m, w = ensemble.J0, ensemble.m, ensemble.weights
    batches = []
    for m_abs in range(0, int(np.max(np.abs(m))) + 1):
        for parity in (0, 1):
            sel = (np.abs(m) == m_abs) & (J0 % 2 == parity)
            if not sel.any():
                continue
            block = operator_block(ensemble.jmax, m_abs, parity)
            idx = np.searchsorted(block.js, J0[sel])
            amps = np.zeros((int(sel.sum()), len(block.js)), dtype=complex)
            amps[np.arange(len(idx)), idx] = 1.0
            batches.append(_MemberBatch(m_abs, parity, block, J0[sel], m[sel], w[sel], amps))
    return EnsembleState(species, ensemble.jmax, 0.0, batches)


def _map(func, items, threads: int):
    # executor.map preserves input order, so reductions stay deterministic
    if threads and threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(func, items))
    return [func(x) for x in items]


def kick_ensemble(state: EnsembleState, P: float, threads: int = 1) -> EnsembleState:
    """Kick every member with effective strength ``P`` (kick_scale already applied)."""
    if P < 0:
        raise ValueError("kick strength must be >= 0")
    if P == 0:
        return state

    def one(b: _MemberBatch):
        amps = b.amps @ b.block.propagator(P).T
        _check_leakage(amps, b.m_abs, b.parity, state.jmax, labels=b.J0)
        return _MemberBatch(b.m_abs, b.parity, b.block, b.J0, b.m, b.weights, amps)

    return EnsembleState(state.species, state.jmax, state.time, _map(one, state.batches, threads))


def propagate_ensemble(state: EnsembleState, dt: float) -> EnsembleState:
    if dt < 0:
        raise ValueError("dt must be >= 0")
    if dt == 0:
        return state
    E = energy_ladder(state.species, state.jmax)
    batches = [
        _MemberBatch(b.m_abs, b.parity, b.block, b.J0, b.m, b.weights, b.amps * np.exp(-1j * TWO_PI_C * E[b.block.js] * dt))
        for b in state.batches
    ]
    return EnsembleState(state.species, state.jmax, state.time + dt, batches)


def apply_pulses(
    state: EnsembleState, pulses: Sequence[Pulse], until: Optional[float] = None, threads: int = 1
) -> EnsembleState:
    """Propagate through a pulse sequence, ending at ``until`` (default: last pulse)."""
    for p in sorted(pulses, key=lambda p: p.time):
        if p.time < state.time:
            raise ValueError("pulse precedes the current ensemble time")
        state = propagate_ensemble(state, p.time - state.time)
        state = kick_ensemble(state, p.strength * state.species.kick_scale, threads)
    if until is not None:
        state = propagate_ensemble(state, until - state.time)
    return state


@dataclass(frozen=True)
class Moments:
    """Weighted ensemble moments that fix ``<cos^2>(t)`` for all later field-free times.

    ``static`` is the time-independent part, ``coherence[k]`` the weighted
    ``sum w conj(a_J) a_{J+2} <J+2|cos^2|J>`` for ``J = k``, oscillating at
    ``omega[k]`` rad/ps.
    """

    static: float
    coherence: np.ndarray
    omega: np.ndarray
    weight: float

    def evaluate(self, dt) -> np.ndarray:
        dt = np.atleast_1d(np.asarray(dt, dtype=float))
        out = np.empty(len(dt))
        keep = np.flatnonzero(self.coherence)
        coh, om = self.coherence[keep], self.omega[keep]
        for s in range(0, len(dt), 4096):
            chunk = dt[s : s + 4096]
            phase = np.exp(-1j * np.outer(chunk, om))
            out[s : s + 4096] = self.static + 2.0 * (phase @ coh).real
        return out / self.weight


def _batch_moments(b: _MemberBatch, jmax: int):
    pop = np.abs(b.amps) ** 2
    static = float(b.weights @ (pop @ b.block.diag))
    coh = np.zeros(jmax + 1, dtype=complex)
    if b.amps.shape[1] > 1:
        cross = np.conj(b.amps[:, :-1]) * b.amps[:, 1:] * b.block.off
        coh[b.block.js[:-1]] = b.weights @ cross
    return static, coh


def ensemble_moments(state: EnsembleState, parity: Optional[int] = None, threads: int = 1) -> Moments:
    batches = [b for b in state.batches if parity is None or b.parity == parity]
    parts = _map(lambda b: _batch_moments(b, state.jmax), batches, threads)
    static = 0.0
    coh = np.zeros(state.jmax + 1, dtype=complex)
    for s, c in parts:
        static += s
        coh += c
    E = energy_ladder(state.species, state.jmax)
    omega = np.zeros(state.jmax + 1)
    omega[:-2] = TWO_PI_C * (E[2:] - E[:-2])
    weight = float(sum(b.weights.sum() for b in batches))
    return Moments(static, coh[:-2], omega[:-2], weight)


def populations(state: EnsembleState) -> np.ndarray:
    """Weighted population of each J = 0..jmax."""
    pop = np.zeros(state.jmax + 1)
    for b in state.batches:
        np.add.at(pop, b.block.js, b.weights @ (np.abs(b.amps) ** 2))
    return pop


def rotational_energy(state: EnsembleState, parity: Optional[int] = None) -> float:
    """Weighted mean rotational energy in cm^-1.

    With ``parity`` only that J manifold contributes, still divided by the
    total weight, so the two manifolds add up to the full value.
    """
    E = energy_ladder(state.species, state.jmax)
    pop = populations(state)
    if parity is not None:
        pop[np.arange(len(pop)) % 2 != parity] = 0.0
    return float(pop @ E) / state.total_weight()


def excitation_energy(
    species: MolecularSpecies, ensemble: ThermalEnsemble, pulses: Sequence[Pulse], threads: int = 1
) -> float:
    """Rotational energy gained from a pulse sequence (cm^-1)."""
    state = prepare_ensemble(species, ensemble)
    before = rotational_energy(state)
    after = rotational_energy(apply_pulses(state, pulses, threads=threads))
    return after - before


# ---------------------------------------------------------------------------
# traces


@dataclass
class AlignmentTrace:
    """``<cos^2 theta>(t)`` per species on a common time grid.

    ``even``/``odd`` hold the parity-resolved averages (each normalized to its
    own manifold) when requested. ``moments`` keeps the post-last-pulse
    ensemble moments per species, and ``jmax`` the basis cutoffs used.
    """

    times: np.ndarray
    values: Dict[str, np.ndarray]
    even: Dict[str, np.ndarray] = field(default_factory=dict)
    odd: Dict[str, np.ndarray] = field(default_factory=dict)
    moments: Dict[str, Moments] = field(default_factory=dict)
    jmax: Dict[str, int] = field(default_factory=dict)
    pulses: tuple = ()

    @property
    def species(self) -> List[str]:
        return list(self.values)

    def merge(self, other: "AlignmentTrace") -> "AlignmentTrace":
        if not np.array_equal(self.times, other.times):
            raise ValueError("cannot merge traces on different grids")
        return AlignmentTrace(
            self.times,
            {**self.values, **other.values},
            {**self.even, **other.even},
            {**self.odd, **other.odd},
            {**self.moments, **other.moments},
            {**self.jmax, **other.jmax},
            self.pulses,
        )


def _check_grid(times: np.ndarray):
    if times.ndim != 1 or len(times) == 0:
        raise ValueError("time grid must be a non-empty 1-D array")
    if np.any(np.diff(times) <= 0):
        raise ValueError("time grid must be strictly increasing")


def simulate_trace(
    species: MolecularSpecies,
    pulses: Sequence[Pulse],
    times,
    ensemble: ThermalEnsemble,
    parity_resolved: bool = False,
    threads: int = 1,
) -> AlignmentTrace:
    """Thermally averaged ``<cos^2 theta>`` on ``times`` for one species.

    Between pulses the ensemble moments are evaluated with exact phases at
    every requested sample time.
    """
    times = np.asarray(times, dtype=float)
    _check_grid(times)
    pulses = sorted(pulses, key=lambda p: p.time)
    if pulses and pulses[-1].time > times[-1]:
        raise ValueError("pulses must lie within the time grid span")

    state = prepare_ensemble(species, ensemble)
    groups = [None] + ([0, 1] if parity_resolved else [])
    out = {g: np.empty(len(times)) for g in groups}
    edges = [p.time for p in pulses]
    # segment k covers [edges[k-1], edges[k]); samples at a pulse time belong to the later segment
    seg_index = np.searchsorted(edges, times, side="right")
    last_moments = None
    for k in range(len(pulses) + 1):
        if k > 0:
            p = pulses[k - 1]
            state = propagate_ensemble(state, p.time - state.time)
            state = kick_ensemble(state, p.strength * species.kick_scale, threads)
        sel = seg_index == k
        moments = {g: ensemble_moments(state, g, threads) for g in groups}
        last_moments = moments[None]
        if sel.any():
            for g in groups:
                out[g][sel] = moments[g].evaluate(times[sel] - state.time)
    name = species.name
    return AlignmentTrace(
        times=times,
        values={name: out[None]},
        even={name: out[0]} if parity_resolved else {},
        odd={name: out[1]} if parity_resolved else {},
        moments={name: last_moments},
        jmax={name: ensemble.jmax},
        pulses=tuple(pulses),
    )


def simulate_mixture(
    species_list: Sequence[MolecularSpecies],
    pulses: Sequence[Pulse],
    times,
    temperature: float,
    tail_eps: float = 1e-8,
    parity_resolved: bool = False,
    threads: int = 1,
) -> AlignmentTrace:
    """Per-species traces for a mixture sharing one pulse sequence."""
    trace = None
    for sp in species_list:
        total = sum(p.strength for p in pulses) * sp.kick_scale
        ens = thermal_ensemble(sp, temperature, tail_eps, total_kick=total)
        t = simulate_trace(sp, pulses, times, ens, parity_resolved, threads)
        trace = t if trace is None else trace.merge(t)
    return trace


def revival_grid(species: MolecularSpecies, periods: float, samples_per_period: int = 2000, start: float = 0.0):
    T = revival_time(species)
    n = int(round(periods * samples_per_period))
    return start + np.arange(n + 1) * (periods * T / n)


@dataclass(frozen=True)
class Calibration:
    strength: float
    peak: float
    minimum: float
    evaluations: tuple  # (P, peak, minimum) in evaluation order


def alignment_extrema(
    species: MolecularSpecies,
    strength: float,
    temperature: float,
    tail_eps: float = 1e-6,
    samples_per_period: int = 2000,
):
    """Peak and minimum of ``<cos^2>`` over one revival period after a single kick at t=0."""
    ens = thermal_ensemble(species, temperature, tail_eps, total_kick=strength * species.kick_scale)
    trace = simulate_trace(species, [Pulse(0.0, strength)], revival_grid(species, 1.0, samples_per_period), ens)
    v = trace.values[species.name]
    return float(v.max()), float(v.min())


def calibrate_strength(
    species: MolecularSpecies,
    temperature: float,
    target: float = 0.5,
    bracket=(0.1, 20.0),
    tail_eps: float = 1e-6,
    samples_per_period: int = 2000,
    xtol: float = 1e-4,
) -> Calibration:
    """Kick strength whose single-kick trace peaks at ``target``."""
    from scipy.optimize import brentq

    if not ISOTROPIC < target < 1.0:
        raise ValueError(f"target peak must lie in (1/3, 1), got {target}")
    log = []

    def f(P):
        hi, lo = alignment_extrema(species, P, temperature, tail_eps, samples_per_period)
        log.append((float(P), hi, lo))
        return hi - target

    a, b = bracket
    fa, fb = f(a), f(b)
    if fa > 0 or fb < 0:
        raise ValueError(f"target {target} not bracketed by strengths {a}..{b} (peaks {log[0][1]:.4g}, {log[1][1]:.4g})")
    P = brentq(f, a, b, xtol=xtol)
    peak, minimum = alignment_extrema(species, P, temperature, tail_eps, samples_per_period)
    return Calibration(float(P), peak, minimum, tuple(log))
