"""Species, rotational energy ladders, revival arithmetic and thermal ensembles.

Units follow spectroscopic convention: energies and rotational constants in
cm^-1, times in ps, temperatures in K.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np
import yaml
from scipy import constants as _sc

#: speed of light in cm/ps
C_CM_PER_PS = _sc.c * 1e2 * 1e-12
#: hc/k_B in cm K
HC_OVER_K = _sc.physical_constants["second radiation constant"][0] * 1e2

STATISTICS = ("fermi", "bose", "none")

DATABASE_PATH = Path(__file__).with_name("data") / "species.yaml"


class ConfigurationError(ValueError):
    """Raised for physically inconsistent species or ensemble parameters."""


Spin = Union[Fraction, None]


def _as_spin(value) -> Spin:
    if value is None or (isinstance(value, str) and value.lower() == "none"):
        return None
    spin = Fraction(str(value)) if not isinstance(value, Fraction) else value
    if spin < 0 or (2 * spin).denominator != 1:
        raise ConfigurationError(f"nuclear spin must be a non-negative half-integer, got {value!r}")
    return spin


@dataclass(frozen=True)
class MolecularSpecies:
    """A linear rotor with its exchange symmetry and mixture fraction.

    ``B`` and ``D`` are in cm^-1. ``nuclear_spin`` is the per-atom spin ``I``
    (``None`` for heteronuclear species, which carry no exchange symmetry).
    """

    name: str
    B: float
    D: float = 0.0
    kick_scale: float = 1.0
    nuclear_spin: Spin = None
    statistics: str = "none"
    weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "nuclear_spin", _as_spin(self.nuclear_spin))
        object.__setattr__(self, "statistics", str(self.statistics).lower())
        if not self.B > 0:
            raise ConfigurationError(f"{self.name}: rotational constant B must be positive, got {self.B}")
        if self.D < 0:
            raise ConfigurationError(f"{self.name}: centrifugal distortion D must be >= 0, got {self.D}")
        if self.D >= self.B / 10:
            raise ConfigurationError(f"{self.name}: D={self.D} is not small compared to B={self.B}")
        if self.kick_scale < 0:
            raise ConfigurationError(f"{self.name}: kick_scale must be >= 0")
        if self.weight < 0:
            raise ConfigurationError(f"{self.name}: weight must be >= 0")
        if self.statistics not in STATISTICS:
            raise ConfigurationError(f"{self.name}: statistics must be one of {STATISTICS}")
        if (self.statistics == "none") != (self.nuclear_spin is None):
            raise ConfigurationError(
                f"{self.name}: statistics 'none' requires nuclear_spin none and vice versa"
            )
        if self.nuclear_spin is not None:
            # validates the spin/statistics pairing
            spin_parity_weights(self.nuclear_spin, self.statistics)

    def replace(self, **changes) -> "MolecularSpecies":
        from dataclasses import replace

        return replace(self, **changes)

    @property
    def revival_time(self) -> float:
        return revival_time(self)


@dataclass(frozen=True)
class SpinWeights:
    g_even: float
    g_odd: float

    def __post_init__(self):
        if not (self.g_even > 0 and self.g_odd > 0):
            raise ConfigurationError("spin weights must be positive")

    def of(self, J: int) -> float:
        return self.g_odd if J % 2 else self.g_even


@dataclass(frozen=True)
class ThermalEnsemble:
    """Weighted initial ``(J0, m)`` members of a Boltzmann ensemble.

    ``members`` is an ``(n, 3)`` array of ``(J0, m, w)`` rows ordered by J0
    then m; ``jmax`` is the basis cutoff including kick headroom and
    ``thermal_jmax`` the largest retained J0.
    """

    members: np.ndarray
    temperature: float
    jmax: int
    thermal_jmax: int
    retained_mass: float = 1.0

    @property
    def J0(self) -> np.ndarray:
        return self.members[:, 0].astype(int)

    @property
    def m(self) -> np.ndarray:
        return self.members[:, 1].astype(int)

    @property
    def weights(self) -> np.ndarray:
        return self.members[:, 2]

    def __len__(self) -> int:
        return len(self.members)

    def parity_weight(self, parity: int) -> float:
        return float(self.weights[self.J0 % 2 == parity].sum())


def revival_time(species: MolecularSpecies) -> float:
    """Full revival period ``1/(2Bc)`` in ps (distortion ignored)."""
    B = species.B if isinstance(species, MolecularSpecies) else float(species)
    if not B > 0:
        raise ConfigurationError(f"rotational constant must be positive, got {B}")
    return 1.0 / (2.0 * B * C_CM_PER_PS)


def energy_level(species: MolecularSpecies, J):
    """Rotational term value ``B J(J+1) - D J^2 (J+1)^2`` in cm^-1.

    Accepts scalar or array ``J``.
    """
    J = np.asarray(J)
    if np.any(J < 0):
        raise ValueError("J must be non-negative")
    x = J * (J + 1.0)
    E = species.B * x - species.D * x * x
    return float(E) if E.ndim == 0 else E


def energy_ladder(species: MolecularSpecies, jmax: int) -> np.ndarray:
    return energy_level(species, np.arange(jmax + 1))


def spin_parity_weights(I, statistics: str) -> SpinWeights:
    """Nuclear-spin statistical weights of the even-J and odd-J manifolds.

    Symmetric spin states number ``(I+1)(2I+1)``, antisymmetric ``I(2I+1)``.
    Fermions pair symmetric spin states with odd J, bosons with even J.
    """
    statistics = str(statistics).lower()
    I = _as_spin(I)
    if statistics == "none" or I is None:
        if (statistics == "none") != (I is None):
            raise ConfigurationError("statistics 'none' goes with nuclear spin none")
        return SpinWeights(1.0, 1.0)
    half_integer = (2 * I) % 2 == 1
    if statistics == "fermi" and not half_integer:
        raise ConfigurationError(f"Fermi statistics needs a half-integer spin, got I={I}")
    if statistics == "bose" and half_integer:
        raise ConfigurationError(f"Bose statistics needs an integer spin, got I={I}")
    if statistics not in ("fermi", "bose"):
        raise ConfigurationError(f"unknown statistics {statistics!r}")
    sym = float((I + 1) * (2 * I + 1))
    anti = float(I * (2 * I + 1))
    if anti == 0:
        raise ConfigurationError("I = 0 homonuclear species have no odd-J states; model them with statistics 'none'")
    if statistics == "fermi":
        return SpinWeights(g_even=anti, g_odd=sym)
    return SpinWeights(g_even=sym, g_odd=anti)


def species_spin_weights(species: MolecularSpecies) -> SpinWeights:
    return spin_parity_weights(species.nuclear_spin, species.statistics)


def kick_headroom(total_kick: float) -> int:
    """Extra J rows reserved above the thermal cutoff for a summed kick strength."""
    return int(math.ceil(8.0 * total_kick)) + 6


def thermal_ensemble(
    species: MolecularSpecies,
    temperature: float,
    tail_eps: float = 1e-8,
    total_kick: float = 0.0,
    spin_weights: Optional[SpinWeights] = None,
) -> ThermalEnsemble:
    """Boltzmann x spin-statistics ensemble of ``(J0, m)`` members.

    The thermal cutoff is the smallest J such that the discarded Boltzmann
    mass is below ``tail_eps``; the basis cutoff adds ``kick_headroom``.
    """
    if not temperature > 0:
        raise ConfigurationError(f"temperature must be positive, got {temperature}")
    if not 0 < tail_eps < 1e-3:
        raise ConfigurationError(f"tail_eps must lie in (0, 1e-3), got {tail_eps}")
    gw = spin_weights or species_spin_weights(species)
    beta = HC_OVER_K / temperature

    # Boltzmann factors relative to the lowest allowed level; grow the table until
    # the terms are far below tail_eps (monotonic decay past the thermal maximum).
    def level_mass(J):
        return gw.of(J) * (2 * J + 1) * math.exp(-beta * energy_level(species, J))

    masses = []
    J = 0
    while True:
        masses.append(level_mass(J))
        total = sum(masses)
        if J > 4 and masses[-1] < 1e-3 * tail_eps * total and masses[-2] >= masses[-1]:
            break
        J += 1
        if J > 5000:
            raise ConfigurationError("thermal distribution does not converge; check B and temperature")
    masses = np.array(masses)
    total = masses.sum()
    # tail[k] = mass strictly above J=k
    tail = total - np.cumsum(masses)
    jcut = int(np.argmax(tail / total < tail_eps))
    retained = float(masses[: jcut + 1].sum() / total)

    rows = []
    for J0 in range(jcut + 1):
        w = masses[J0] / (2 * J0 + 1)
        if w == 0.0:
            continue
        for m in range(-J0, J0 + 1):
            rows.append((J0, m, w))
    members = np.array(rows, dtype=float)
    members[:, 2] /= members[:, 2].sum()
    return ThermalEnsemble(
        members=members,
        temperature=float(temperature),
        jmax=jcut + kick_headroom(total_kick),
        thermal_jmax=jcut,
        retained_mass=retained,
    )


def pure_ensemble(J0: int, m: int, jmax: int) -> ThermalEnsemble:
    """Single-member ensemble in ``|J0, m>`` (used for zero temperature and tests)."""
    if abs(m) > J0 or J0 > jmax:
        raise ConfigurationError("need |m| <= J0 <= jmax")
    return ThermalEnsemble(np.array([[J0, m, 1.0]]), 0.0, jmax, J0)


def binomial_weights(light_fraction: float) -> tuple:
    """Homonuclear isotopologue fractions ``(a^2, 2a(1-a), (1-a)^2)``."""
    a = float(light_fraction)
    if not 0.0 <= a <= 1.0:
        raise ConfigurationError("isotope fraction must lie in [0, 1]")
    return (a * a, 2 * a * (1 - a), (1 - a) ** 2)


def normalize_weights(species: Iterable[MolecularSpecies]) -> list:
    species = list(species)
    total = sum(s.weight for s in species)
    if not total > 0:
        raise ConfigurationError("mixture weights must not all vanish")
    return [s.replace(weight=s.weight / total) for s in species]


def load_species_database(path=None) -> dict:
    """Read a species database (YAML mapping name -> fields)."""
    path = Path(path) if path is not None else DATABASE_PATH
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    db = {}
    for name, fields in raw.items():
        fields = dict(fields)
        unknown = set(fields) - {"B", "D", "kick_scale", "nuclear_spin", "statistics", "weight"}
        if unknown:
            raise ConfigurationError(f"species {name!r}: unknown keys {sorted(unknown)}")
        db[name] = MolecularSpecies(name=name, **fields)
    return db
