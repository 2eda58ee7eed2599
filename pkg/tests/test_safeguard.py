import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.errors import DegenerateInputError, DimensionError, FloorViolationError, ParameterError
from src.models import SdrState, Spectrum, ThresholdProfile, is_hermitian_compatible
from src.safeguard import (
    apply_safeguard,
    check_floor,
    constant_profile,
    deviation_sdr,
    safeguard_report,
    smoothed_profile,
    split_sdr,
)
from src.spectral import forward
from src.testsignals import sinusoid, sparse_spectrum
from tests.helpers import dft_matrix, make_signal


def flat_spectrum(length: int, magnitude: float = 1.0) -> Spectrum:
    return Spectrum(np.full(length, magnitude, dtype=complex), 8, hermitian=True)


def constant_floor(length: int, value: float, constant_params) -> ThresholdProfile:
    return ThresholdProfile(np.full(length, value), constant_params)


# Profiles
@pytest.mark.parametrize(
    ("peak", "level_db", "expected"),
    [(1.0, -20.0, 0.1), (1.0, 0.0, 1.0), (0.5, -40.0, 0.005)],
)
def test_constant_profile(peak, level_db, expected):
    spectrum = Spectrum(np.array([peak, 0.3 * peak, 0.1 * peak, 0.3 * peak]), 8)
    profile = constant_profile(level_db, spectrum)
    np.testing.assert_allclose(profile.floor, expected, rtol=1e-12)
    assert profile.params.kind == "constant"


def test_constant_profile_all_zero():
    with pytest.raises(DegenerateInputError):
        constant_profile(-20.0, flat_spectrum(4, 0.0))


@pytest.mark.parametrize("window", [1, 3, 7])
def test_smoothed_profile_flat_relative_term_dominates(window):
    profile = smoothed_profile(flat_spectrum(16), window, -20.0, -60.0)
    np.testing.assert_allclose(profile.floor, 0.1, rtol=1e-12)


def test_smoothed_profile_absolute_term_dominates():
    profile = smoothed_profile(flat_spectrum(16), 5, -80.0, -60.0)
    np.testing.assert_allclose(profile.floor, 0.001, rtol=1e-12)


def test_smoothed_profile_matches_moving_average(rng):
    spectrum = forward(make_signal(rng.normal(size=16)))
    mag2 = spectrum.magnitude() ** 2
    smoothed = np.array([(mag2[m - 1] + mag2[m] + mag2[(m + 1) % 16]) / 3 for m in range(16)])
    envelope = np.sqrt(smoothed)
    expected = np.maximum(envelope * 0.1, envelope.max() * 1e-3)
    profile = smoothed_profile(spectrum, 3, -20.0, -60.0)
    np.testing.assert_allclose(profile.floor, expected, rtol=1e-12)
    assert is_hermitian_compatible(profile.floor)


@pytest.mark.parametrize("window", [0, 2, 4])
def test_smoothed_profile_rejects_even_window(window):
    with pytest.raises(ParameterError):
        smoothed_profile(flat_spectrum(16), window, -20.0, -60.0)


def test_smoothed_profile_rejects_window_longer_than_frame():
    with pytest.raises(ParameterError):
        smoothed_profile(flat_spectrum(4), 5, -20.0, -60.0)


def test_smoothed_profile_of_silence_uses_full_scale():
    profile = smoothed_profile(flat_spectrum(8, 0.0), 3, -20.0, -60.0)
    np.testing.assert_allclose(profile.floor, 1e-3, rtol=1e-12)


def test_profile_from_half_mirrors(constant_params):
    profile = ThresholdProfile.from_half(np.array([1.0, 2.0, 3.0]), 5, constant_params)
    np.testing.assert_array_equal(profile.floor, [1.0, 2.0, 3.0, 3.0, 2.0])
    with pytest.raises(ParameterError):
        ThresholdProfile.from_half(np.ones(2), 5, constant_params)


@pytest.mark.parametrize("length", [7, 8])
def test_profile_rejects_asymmetric_floor(length, constant_params):
    floor = np.full(length, 0.1)
    floor[length - 2] = 0.5
    assert not is_hermitian_compatible(floor)
    with pytest.raises(ParameterError, match="mirror-symmetric"):
        ThresholdProfile(floor, constant_params)


def test_symmetric_floor_guarantee_holds_on_every_bin(constant_params):
    floor = np.full(8, 0.1)
    floor[[2, 6]] = 0.5
    sg = apply_safeguard(make_signal(np.zeros(8)), ThresholdProfile(floor, constant_params))
    mags = forward(sg.stimulus).magnitude()
    assert np.all(mags >= floor - 1e-9)
    np.testing.assert_allclose(mags[[2, 6]], 0.5, rtol=1e-9)


# Safeguarding transform
def test_spectrum_above_floor_is_untouched(rng, constant_params):
    x = make_signal(rng.normal(size=32))
    floor = 0.5 * forward(x).magnitude().min()
    sg = apply_safeguard(x, constant_floor(32, floor, constant_params))
    np.testing.assert_array_equal(sg.stimulus.samples, x.samples)
    assert sg.modified_bins == 0
    assert sg.sdr_db == np.inf


def test_zero_input_becomes_scaled_impulse(constant_params):
    sg = apply_safeguard(make_signal(np.zeros(4)), constant_floor(4, 0.1, constant_params))
    np.testing.assert_allclose(sg.stimulus.samples, [0.2, 0.0, 0.0, 0.0], atol=1e-15)
    assert sg.sdr_db == -np.inf
    assert split_sdr(sg.sdr_db) == (None, SdrState.all_deviation)


def test_zero_input_deviation_energy(constant_params):
    original = make_signal(np.zeros(4))
    sg = apply_safeguard(original, constant_floor(4, 0.1, constant_params))
    assert np.sum(sg.stimulus.samples**2) == pytest.approx(0.04, rel=1e-12)
    assert safeguard_report(original, sg) == -np.inf


def test_sinusoid_bins_lifted_to_floor():
    x = sinusoid(16, 2, sample_rate=8)
    spectrum = forward(x)
    profile = constant_profile(-40.0, spectrum)
    sg = apply_safeguard(x, profile)
    mags = np.abs(dft_matrix(16) @ sg.stimulus.samples)
    floor = profile.floor[0]
    assert np.all(mags >= floor - 1e-9)
    off_peak = np.setdiff1d(np.arange(16), [2, 14])
    np.testing.assert_allclose(mags[off_peak], floor, atol=1e-9)
    np.testing.assert_allclose(mags[[2, 14]], spectrum.magnitude()[[2, 14]], atol=1e-9)


def test_sinusoid_sdr_matches_energy_ratio():
    x = sinusoid(16, 2, sample_rate=8)
    sg = apply_safeguard(x, constant_profile(-40.0, forward(x)))
    deviation = np.sum((sg.stimulus.samples - x.samples) ** 2)
    expected = 10 * np.log10(np.sum(x.samples**2) / deviation)
    assert safeguard_report(x, sg) == pytest.approx(expected, rel=1e-9)
    assert sg.sdr_db == pytest.approx(expected, rel=1e-9)


def test_profile_length_must_match_padded_frame(constant_params):
    with pytest.raises(DimensionError):
        apply_safeguard(make_signal(np.ones(8)), constant_floor(8, 0.1, constant_params), 4)


def test_padding_is_applied_before_safeguarding(rng, constant_params):
    x = make_signal(rng.normal(size=12))
    sg = apply_safeguard(x, constant_floor(16, 0.05, constant_params), pad_len=4)
    assert sg.frame_length == 16
    assert sg.pad_len == 4
    check_floor(sg.stimulus, sg.profile.floor)


def test_random_phase_for_zero_bins(constant_params):
    profile = constant_floor(8, 0.1, constant_params)
    sg = apply_safeguard(make_signal(np.zeros(8)), profile, random_phase_seed=7)
    spectrum = forward(sg.stimulus)
    np.testing.assert_allclose(spectrum.magnitude(), 0.1, atol=1e-12)
    assert not np.allclose(sg.stimulus.samples, [0.1 * np.sqrt(8)] + [0.0] * 7)
    again = apply_safeguard(make_signal(np.zeros(8)), profile, random_phase_seed=7)
    np.testing.assert_array_equal(again.stimulus.samples, sg.stimulus.samples)


def test_tolerance_lets_quantized_stimulus_pass(constant_params):
    x = sinusoid(64, 5, sample_rate=8)
    sg = apply_safeguard(x, constant_profile(-40.0, forward(x)))
    stored = make_signal(sg.stimulus.samples.astype(np.float32), 8)
    again = apply_safeguard(stored, sg.profile, tolerance=1e-6)
    np.testing.assert_array_equal(again.stimulus.samples, stored.samples)


@settings(max_examples=500, deadline=None)
@given(
    length=st.integers(2, 256),
    pad_len=st.integers(0, 32),
    level_db=st.floats(-80.0, 0.0),
    smoothed=st.booleans(),
    seed=st.integers(0, 2**32 - 1),
)
def test_floor_guarantee_and_idempotence(length, pad_len, level_db, smoothed, seed):
    r = np.random.default_rng(seed)
    samples = r.normal(size=length) * (r.random(length) < 0.5)
    x = make_signal(samples)
    spectrum = forward(x.padded(pad_len))
    frame = length + pad_len
    if smoothed or not samples.any():
        window = min(2 * int(r.integers(0, 8)) + 1, frame if frame % 2 else frame - 1)
        profile = smoothed_profile(spectrum, window, level_db, level_db - 40.0)
    else:
        profile = constant_profile(level_db, spectrum)
    sg = apply_safeguard(x, profile, pad_len)

    mags = forward(sg.stimulus).magnitude()
    assert np.all(mags >= profile.floor - 1e-9)

    again = apply_safeguard(sg.stimulus, profile, 0)
    np.testing.assert_allclose(again.stimulus.samples, sg.stimulus.samples, rtol=0, atol=1e-9)


def test_phase_is_preserved(rng):
    x = make_signal(rng.normal(size=64) * np.hanning(64))
    spectrum = forward(x)
    sg = apply_safeguard(x, smoothed_profile(spectrum, 9, -10.0, -30.0))
    kept = spectrum.magnitude() >= 1e-12
    turn = np.angle(forward(sg.stimulus).bins[kept] * np.conj(spectrum.bins[kept]))
    assert np.max(np.abs(turn)) < 1e-9


def test_raising_relative_floor_never_reduces_deviation(rng):
    x = make_signal(rng.normal(size=128) * np.exp(-np.arange(128) / 10))
    spectrum = forward(x)
    deviations = []
    for rel_db in (-40.0, -30.0, -20.0, -10.0, 0.0):
        sg = apply_safeguard(x, smoothed_profile(spectrum, 5, rel_db, -80.0))
        deviations.append(np.sum((sg.stimulus.samples - x.samples) ** 2))
    assert all(b >= a - 1e-15 for a, b in zip(deviations, deviations[1:]))


# Floor checks and SDR bookkeeping
def test_check_floor_reports_margin(rng, constant_params):
    x = make_signal(rng.normal(size=16))
    sg = apply_safeguard(x, constant_floor(16, 0.3, constant_params))
    margin, worst = check_floor(sg.stimulus, sg.profile.floor)
    assert margin >= -1e-9
    assert 0 <= worst < 16


def test_check_floor_flags_raw_sparse_signal():
    x = sparse_spectrum(64, sample_rate=8)
    profile = constant_profile(-40.0, forward(x))
    with pytest.raises(FloorViolationError) as exc_info:
        check_floor(x, profile.floor)
    assert exc_info.value.exit_code == 5


def test_deviation_sdr_states():
    ref = np.array([1.0, 0.0])
    assert deviation_sdr(ref, ref) == (None, SdrState.no_deviation)
    assert deviation_sdr(np.zeros(2), ref) == (None, SdrState.all_deviation)
    value, state = deviation_sdr(ref, np.array([1.0, 0.1]))
    assert state == SdrState.finite
    assert value == pytest.approx(20.0)
    assert split_sdr(np.inf) == (None, SdrState.no_deviation)
    assert split_sdr(3.5) == (3.5, SdrState.finite)
