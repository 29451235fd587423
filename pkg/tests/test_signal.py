import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rotsel.physcore import load_species_database, thermal_ensemble
from rotsel.rotor import AlignmentTrace, Pulse, revival_grid, simulate_mixture, simulate_trace
from rotsel.signal import (
    ResponseComponent,
    envelope_extremum,
    fwm_signal,
    mixture_signal,
    peak_groups,
    revival_envelope,
    species_response,
)

T = np.linspace(0, 1, 11)


def _trace(values, name="x"):
    return AlignmentTrace(T, {name: np.asarray(values, dtype=float)})


def test_unkicked_response_is_zero():
    r = species_response(_trace(np.full(11, 1 / 3)), 1.0)
    assert np.allclose(r.values, 0.0, atol=1e-16)


def test_response_sign_follows_alignment():
    r = species_response(_trace([0.5] * 5 + [0.2] * 6), 1.0)
    assert r.values[0] == pytest.approx(1 / 6)
    assert r.values[-1] == pytest.approx(-2 / 15)


def test_destructive_interference():
    a = ResponseComponent("a", T, np.sin(T))
    b = ResponseComponent("b", T, -np.sin(T))
    sig = fwm_signal([a, b])
    assert np.allclose(sig.intensity, 0.0)


def test_mismatched_grids_rejected():
    a = ResponseComponent("a", T, np.zeros(11))
    b = ResponseComponent("b", T + 0.1, np.zeros(11))
    with pytest.raises(ValueError, match="different time grid"):
        fwm_signal([a, b])


def test_decay_must_be_positive():
    with pytest.raises(ValueError):
        fwm_signal([ResponseComponent("a", T, np.zeros(11))], decay_tau=0.0)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=11, max_size=11), st.floats(0.1, 10))
def test_intensity_nonnegative_and_scales_quadratically(values, lam):
    comp = ResponseComponent("a", T, np.array(values))
    sig = fwm_signal([comp])
    scaled = fwm_signal([ResponseComponent("a", T, lam * np.array(values))])
    assert np.all(sig.intensity >= 0)
    assert np.allclose(scaled.intensity, lam**2 * sig.intensity, rtol=1e-12, atol=1e-300)
    assert np.all(sig.intensity[np.array(values) == 0] == 0)


@pytest.fixture(scope="module")
def n2_pair():
    db = load_species_database()
    species = [db["N2-14"].replace(D=0.0), db["N2-15"].replace(D=0.0)]
    times = np.arange(0, 3000) * 0.005
    return simulate_mixture(species, [Pulse(0.0, 1.0)], times, 295)


def test_interference_witness(n2_pair):
    mix = mixture_signal(n2_pair, {"N2-14": 0.5, "N2-15": 0.5})
    s14 = fwm_signal([species_response(n2_pair, 0.5, "N2-14")])
    s15 = fwm_signal([species_response(n2_pair, 0.5, "N2-15")])
    assert np.any((mix.intensity < s14.intensity) & (mix.intensity < s15.intensity))


def test_single_species_periodic_and_decay_factorizes():
    sp = load_species_database()["N2-15"].replace(D=0.0)
    ens = thermal_ensemble(sp, 295, total_kick=1.0)
    times = revival_grid(sp, 2, 500)
    tr = simulate_trace(sp, [Pulse(0.0, 1.0)], times, ens)
    sig = fwm_signal([species_response(tr, 1.0)])
    assert np.max(np.abs(sig.intensity[:500] - sig.intensity[500:1000])) < 1e-12 * sig.intensity.max()
    tau = 20.0
    dec = fwm_signal([species_response(tr, 1.0)], decay_tau=tau)
    restored = dec.intensity * np.exp(2 * times / tau)
    assert np.allclose(restored[:500], restored[500:1000], rtol=1e-9, atol=1e-15)


def test_envelope_helpers():
    t = np.arange(0, 20, 0.01)
    y = (np.cos(2 * np.pi * t) ** 2) * (1.5 + np.cos(2 * np.pi * t / 10))
    sig = fwm_signal([ResponseComponent("a", t, np.sqrt(y))])
    et, eh = revival_envelope(sig, spacing=0.3)
    tmin, _, local = envelope_extremum(et, eh, near=5.0, kind="min", search=2.0)
    assert tmin == pytest.approx(5.0, abs=0.6) and local
    with pytest.raises(ValueError):
        envelope_extremum(et, eh, near=100.0)


def test_peak_groups_split_and_merge():
    t = np.arange(0, 20, 0.01)
    y = sum(np.exp(-((t - c) / 0.2) ** 2) for c in (5.0, 9.0, 13.0))
    sig = fwm_signal([ResponseComponent("a", t, np.sqrt(y))])
    groups = peak_groups(sig, 0, 20)
    assert [round(g.peak_time, 2) for g in groups] == [5.0, 9.0, 13.0]
    assert len(peak_groups(sig, 0, 20, merge_gap=5.0)) == 1
