"""Isotope and spin-isomer selective rotational alignment of linear molecules."""

__version__ = "0.1.0"

from .physcore import (
    ConfigurationError,
    MolecularSpecies,
    load_species_database,
    revival_time,
    thermal_ensemble,
)
from .rotor import BasisTooSmallError, Pulse, simulate_mixture, simulate_trace

__all__ = [
    "BasisTooSmallError",
    "ConfigurationError",
    "MolecularSpecies",
    "Pulse",
    "load_species_database",
    "revival_time",
    "simulate_mixture",
    "simulate_trace",
    "thermal_ensemble",
]
