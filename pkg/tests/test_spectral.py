import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rotsel.physcore import C_CM_PER_PS, MolecularSpecies, load_species_database, pure_ensemble, thermal_ensemble
from rotsel.rotor import Pulse, revival_grid, simulate_trace
from rotsel.signal import FwmSignal, fwm_signal, species_response
from rotsel.spectral import (
    AssignmentAmbiguityError,
    Peak,
    Spectrum,
    assigned_peaks,
    classify_peaks,
    coherence_frequencies,
    compute_spectrum,
    parity_purity,
    parseval_check,
    predict_lines,
)

RIGID = MolecularSpecies("rigid", 2.0)


def _signal(times, intensity):
    return FwmSignal(times, np.sqrt(intensity), intensity)


def test_rigid_catalog_sits_on_combs():
    cat = predict_lines(RIGID, 12)
    B = RIGID.B
    for line in cat.entries:
        if line.kind == "difference":
            assert line.frequency == pytest.approx(4 * B * line.index, abs=1e-9)
        elif line.kind == "sum":
            assert line.frequency == pytest.approx(B * (4 * line.index + 12), abs=1e-9)
        else:
            assert line.frequency == pytest.approx(B * (4 * line.index + 6), abs=1e-9)
        if line.kind != "single":
            assert line.parity_class == ("same" if line.index % 2 == 0 else "mixed")


def test_catalog_small_cases():
    cat = predict_lines(RIGID, 2)
    assert [(e.kind, e.index, e.frequency) for e in cat.entries if e.kind != "single"] == [
        ("difference", 0, 0.0),
        ("sum", 0, 12 * RIGID.B),
    ]
    cat = predict_lines(RIGID, 5)
    assert cat.lines("difference", 1)[0].frequency == pytest.approx(4 * RIGID.B)
    assert cat.lines("difference", 2)[0].frequency == pytest.approx(8 * RIGID.B)
    with pytest.raises(ValueError):
        predict_lines(RIGID, 1)


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 25), st.floats(1e-7, 1e-4))
def test_catalog_matches_brute_force(jmax, D):
    sp = MolecularSpecies("d", 1.0, D=D)
    cat = predict_lines(sp, jmax)
    E = [sp.B * J * (J + 1) - sp.D * (J * (J + 1)) ** 2 for J in range(jmax + 1)]
    f = [E[J + 2] - E[J] for J in range(jmax - 1)]
    expected = set()
    for a in range(len(f)):
        for b in range(a, len(f)):
            expected.add(("sum", a + b, round(f[a] + f[b], 9)))
            expected.add(("difference", b - a, round(abs(f[b] - f[a]), 9)))
    got = {(e.kind, e.index, round(e.frequency, 9)) for e in cat.entries if e.kind != "single"}
    assert got == expected


def test_distortion_splits_lines():
    sp = MolecularSpecies("d", 2.0, D=1e-4)
    assert len(predict_lines(sp, 10).lines("difference", 2)) > 1
    assert len(predict_lines(RIGID, 10).lines("difference", 2)) == 1


def test_constant_signal_has_only_dc_peak():
    t = np.arange(1000) * 0.01
    spec = compute_spectrum(_signal(t, np.full(1000, 2.0)))
    assert len(spec.peaks) == 1
    assert spec.peaks[0].bin == 0
    assert spec.peaks[0].magnitude == pytest.approx(2.0)
    assert np.all(spec.magnitudes >= 0)


def test_nonuniform_grid_rejected():
    t = np.cumsum(np.r_[0, np.full(99, 0.01)])
    t[50] += 0.003
    with pytest.raises(ValueError, match="uniform"):
        compute_spectrum(_signal(t, np.ones(100)))


def test_duration_precondition():
    t = np.arange(100) * 0.01
    with pytest.raises(ValueError, match="two revival periods"):
        compute_spectrum(_signal(t, np.ones(100)), revival_period=1.0)


def test_pre_pulse_segment_discarded():
    t = np.arange(2000) * 0.01
    y = np.where(t < 5, 100.0, 1.0)
    sig = FwmSignal(t, np.sqrt(y), y, origin=5.0)
    spec = compute_spectrum(sig)
    assert spec.metadata["start_ps"] == pytest.approx(5.0)
    assert spec.peaks[0].magnitude == pytest.approx(1.0)


def _two_line_spectrum():
    B = RIGID.B
    dt = 0.01
    t = np.arange(40000) * dt
    fr = np.array([4 * B, 8 * B]) * C_CM_PER_PS  # 1/ps
    y = 1.0 + 0.3 * np.cos(2 * np.pi * fr[0] * t) + 0.2 * np.cos(2 * np.pi * fr[1] * t)
    return compute_spectrum(_signal(t, y))


def test_synthetic_two_line_assignment():
    spec = classify_peaks(_two_line_spectrum(), predict_lines(RIGID, 10))
    assigned = [(p.kind, p.index) for p in spec.peaks if p.bin > 0]
    assert assigned == [("difference", 1), ("difference", 2)]
    mags = {p.index: p.magnitude for p in spec.peaks if p.bin > 0}
    # window scalloping costs a fraction of a percent off-bin
    assert mags[1] == pytest.approx(0.15, rel=2e-2)
    assert mags[2] == pytest.approx(0.10, rel=2e-2)


def test_peak_refinement_is_subbin():
    spec = _two_line_spectrum()
    for p in spec.peaks[1:]:
        assert abs(p.frequency - p.bin_frequency) <= 0.5 * spec.resolution
        assert p.bin_frequency == spec.frequencies[p.bin]


def test_empty_peak_list():
    spec = Spectrum(np.array([0.0, 1.0]), np.zeros(2), [])
    assert classify_peaks(spec, predict_lines(RIGID, 5)).peaks == []


def test_coincident_sum_and_difference_need_disambiguation():
    # sum s=0 and difference d=3 share 12B on a rigid comb
    peak = Peak(0, 12 * RIGID.B, 12 * RIGID.B, 1.0)
    spec = Spectrum(np.array([0.0]), np.zeros(1), [peak])
    with pytest.raises(AssignmentAmbiguityError, match="sum 0.*|difference 3"):
        classify_peaks(spec, predict_lines(RIGID, 6))
    lo = classify_peaks(spec, predict_lines(RIGID, 6), split=20 * RIGID.B).peaks[0]
    hi = classify_peaks(spec, predict_lines(RIGID, 6), split=5 * RIGID.B).peaks[0]
    assert (lo.kind, lo.index) == ("difference", 3)
    assert (hi.kind, hi.index) == ("sum", 0)


def test_tolerance_precondition():
    spec = Spectrum(np.array([0.0]), np.zeros(1), [])
    with pytest.raises(ValueError):
        classify_peaks(spec, predict_lines(RIGID, 5), tol=2.5 * RIGID.B)


def test_parity_purity_examples():
    def pk(kind, index, pc, mag):
        return Peak(0, 0.0, 0.0, mag, kind, index, pc, 0.0)

    spec = Spectrum(np.zeros(1), np.zeros(1), [pk("sum", 2, "same", 1.0), pk("difference", 4, "same", 2.0)])
    assert parity_purity(spec) == 1.0
    spec = Spectrum(np.zeros(1), np.zeros(1), [pk("sum", 2, "same", 1.0), pk("sum", 3, "mixed", 1.0)])
    assert parity_purity(spec) == 0.0
    with pytest.raises(ValueError):
        parity_purity(Spectrum(np.zeros(1), np.zeros(1), [pk("difference", 0, "same", 1.0)]))


@pytest.fixture(scope="module")
def n2_15_spectrum():
    sp = load_species_database()["N2-15"].replace(D=0.0)
    P = 1.0
    ens = thermal_ensemble(sp, 295, total_kick=P)
    tr = simulate_trace(sp, [Pulse(0.0, P)], revival_grid(sp, 20, 400), ens)
    sig = fwm_signal([species_response(tr, 1.0)])
    spec = compute_spectrum(sig, revival_period=sp.revival_time)
    cat = predict_lines(sp, ens.jmax, tr.moments[sp.name])
    return sig, classify_peaks(spec, cat), cat


def test_parseval(n2_15_spectrum):
    sig = n2_15_spectrum[0]
    spectral, temporal = parseval_check(sig)
    assert spectral == pytest.approx(temporal, rel=1e-6)


def test_predicted_strengths_match_measured_peaks(n2_15_spectrum):
    # below 12B no sum line shares a frequency with a difference line
    _, spec, cat = n2_15_spectrum
    diff = assigned_peaks(spec, "difference")
    for d in (0, 1, 2):
        assert diff[d].magnitude == pytest.approx(cat.lines("difference", d)[0].strength, rel=1e-4)


def test_thermal_n2_15_purity_regression(n2_15_spectrum):
    _, spec, _ = n2_15_spectrum
    pi = parity_purity(spec)
    assert 0 < pi < 1
    assert pi == pytest.approx(0.44174, abs=2e-4)
    assert all(p.assigned for p in spec.peaks)


def test_single_parity_initial_state_gives_same_parity_lines():
    sp = MolecularSpecies("p", 2.0)
    ens = pure_ensemble(3, 1, 40)
    times = revival_grid(sp, 6, 400)
    pulses = [Pulse(0.0, 1.5), Pulse(float(times[53]), 1.0)]
    tr = simulate_trace(sp, pulses, times, ens)
    sig = fwm_signal([species_response(tr, 1.0)], origin=pulses[1].time)
    spec = classify_peaks(compute_spectrum(sig), predict_lines(sp, 40, tr.moments["p"]))
    pairs = [p for p in spec.peaks if p.kind in ("sum", "difference")]
    assert pairs and all(p.parity_class == "same" for p in pairs)
    assert parity_purity(spec) == 1.0


def test_assigned_peaks_keeps_strongest():
    a = Peak(1, 0.0, 0.0, 1.0, "sum", 2, "same", 0.0)
    b = Peak(2, 0.0, 0.0, 3.0, "sum", 2, "same", 0.0)
    spec = Spectrum(np.zeros(3), np.zeros(3), [a, b])
    assert assigned_peaks(spec, "sum")[2] is b


def test_coherence_frequencies_rigid():
    f = coherence_frequencies(RIGID, 6)
    assert np.allclose(f, RIGID.B * (4 * np.arange(5) + 6))
