import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rotsel.physcore import (
    C_CM_PER_PS,
    HC_OVER_K,
    ConfigurationError,
    MolecularSpecies,
    binomial_weights,
    energy_ladder,
    energy_level,
    kick_headroom,
    load_species_database,
    normalize_weights,
    pure_ensemble,
    revival_time,
    spin_parity_weights,
    thermal_ensemble,
)


@pytest.fixture(scope="module")
def db():
    return load_species_database()


def test_constants():
    assert C_CM_PER_PS == pytest.approx(2.99792458e-2, rel=1e-12)
    assert HC_OVER_K == pytest.approx(1.438776877, rel=1e-9)


def test_revival_time_n2(db):
    assert revival_time(db["N2-14"]) == pytest.approx(8.38, abs=0.01)
    assert revival_time(db["N2-15"]) == pytest.approx(8.98, abs=0.01)
    assert revival_time(1.0) == pytest.approx(1 / (2 * C_CM_PER_PS))


def test_revival_time_rejects_nonpositive_B():
    with pytest.raises(ConfigurationError):
        revival_time(0.0)


def test_cl2_periods_follow_reduced_mass(db):
    t35, tmix, t37 = (revival_time(db[n]) for n in ("Cl2-35", "Cl-35-37", "Cl2-37"))
    assert t35 == pytest.approx(68.35, abs=0.05)
    # mu = m1 m2/(m1 + m2); T proportional to mu
    assert t37 / t35 == pytest.approx(37 / 35, rel=1e-12)
    assert tmix / t35 == pytest.approx((35 * 37 / 72) / 17.5, rel=1e-12)
    assert revival_time(db["N2-15"]) / revival_time(db["N2-14"]) == pytest.approx(15 / 14, rel=1e-12)


@given(st.integers(0, 200), st.floats(0.05, 20.0))
def test_rigid_spacing_is_B_times_4J_plus_6(J, B):
    sp = MolecularSpecies("x", B)
    assert energy_level(sp, J + 2) - energy_level(sp, J) == pytest.approx(B * (4 * J + 6), rel=1e-12)


def test_distortion_lowers_levels():
    rigid = MolecularSpecies("r", 2.0)
    dist = MolecularSpecies("d", 2.0, D=1e-5)
    assert np.all(energy_ladder(dist, 30)[1:] < energy_ladder(rigid, 30)[1:])
    assert energy_level(dist, 3) == pytest.approx(2.0 * 12 - 1e-5 * 144)


def test_energy_level_rejects_negative_J():
    with pytest.raises(ValueError):
        energy_level(MolecularSpecies("x", 1.0), -1)


@pytest.mark.parametrize(
    "I, stats, even, odd",
    [(1, "bose", 6, 3), ("1/2", "fermi", 1, 3), ("3/2", "fermi", 6, 10), (None, "none", 1, 1)],
)
def test_spin_weights(I, stats, even, odd):
    w = spin_parity_weights(I, stats)
    assert (w.g_even, w.g_odd) == (even, odd)


def test_n2_isomer_ratios():
    w14 = spin_parity_weights(1, "bose")
    w15 = spin_parity_weights(Fraction(1, 2), "fermi")
    assert w14.g_even / w14.g_odd == 2
    assert w15.g_odd / w15.g_even == 3


@pytest.mark.parametrize("I, stats", [(0, "bose"), ("1/2", "bose"), (1, "fermi"), (1, "none"), (None, "bose")])
def test_spin_weight_errors(I, stats):
    with pytest.raises(ConfigurationError):
        spin_parity_weights(I, stats)


@pytest.mark.parametrize(
    "kwargs",
    [dict(B=-1.0), dict(B=1.0, D=-1e-6), dict(B=1.0, D=0.2), dict(B=1.0, nuclear_spin=1, statistics="none"), dict(B=1.0, weight=-1)],
)
def test_species_validation(kwargs):
    with pytest.raises(ConfigurationError):
        MolecularSpecies("bad", **kwargs)


def test_thermal_ensemble_normalized_and_truncated(db):
    ens = thermal_ensemble(db["N2-14"], 295, tail_eps=1e-8)
    assert ens.weights.sum() == pytest.approx(1.0, abs=1e-14)
    assert 1 - ens.retained_mass < 1e-8
    assert ens.jmax == ens.thermal_jmax + kick_headroom(0.0)
    # every m counted separately: (J0, m) pairs
    assert len(ens) == sum(2 * J + 1 for J in range(ens.thermal_jmax + 1))
    assert ens.thermal_jmax <= 50


def test_thermal_parity_weights_follow_spin_statistics(db):
    # at high temperature the manifold populations approach the spin weight ratio
    ens = thermal_ensemble(db["N2-15"], 2000, tail_eps=1e-8)
    assert ens.parity_weight(1) / ens.parity_weight(0) == pytest.approx(3.0, rel=1e-3)
    ens14 = thermal_ensemble(db["N2-14"], 2000, tail_eps=1e-8)
    assert ens14.parity_weight(0) / ens14.parity_weight(1) == pytest.approx(2.0, rel=1e-3)


def test_thermal_ensemble_boltzmann_ratio():
    sp = MolecularSpecies("x", 2.0)
    ens = thermal_ensemble(sp, 100, tail_eps=1e-9)
    w = {(J, m): wt for J, m, wt in zip(ens.J0, ens.m, ens.weights)}
    assert w[(1, 0)] / w[(0, 0)] == pytest.approx(math.exp(-HC_OVER_K * 4.0 / 100), rel=1e-12)


def test_thermal_ensemble_errors():
    sp = MolecularSpecies("x", 2.0)
    with pytest.raises(ConfigurationError):
        thermal_ensemble(sp, 0.0)
    with pytest.raises(ConfigurationError):
        thermal_ensemble(sp, 100, tail_eps=0.1)


def test_kick_headroom_grows_with_strength():
    assert kick_headroom(0) == 6
    assert kick_headroom(3) == 30


def test_pure_ensemble():
    ens = pure_ensemble(2, 1, 10)
    assert len(ens) == 1 and ens.jmax == 10
    with pytest.raises(ConfigurationError):
        pure_ensemble(1, 2, 10)


def test_binomial_weights():
    assert binomial_weights(0.5) == (0.25, 0.5, 0.25)
    assert sum(binomial_weights(0.758)) == pytest.approx(1.0)


def test_normalize_weights():
    out = normalize_weights([MolecularSpecies("a", 1.0, weight=2), MolecularSpecies("b", 1.0, weight=2)])
    assert [s.weight for s in out] == [0.5, 0.5]


def test_database_rejects_unknown_keys(tmp_path):
    p = tmp_path / "db.yaml"
    p.write_text("X:\n  B: 1.0\n  colour: red\n")
    with pytest.raises(ConfigurationError, match="colour"):
        load_species_database(p)
