import numpy as np
import pytest

from mimic_audit.audio_io import AudioClip
from mimic_audit.config import StftParams
from mimic_audit.dsp import (
    bin_frequencies,
    dct2_ortho,
    fft,
    fft_real,
    frame_signal,
    hann_window,
    hz_to_mel,
    mel_filterbank,
    mel_to_hz,
    power_spectrogram,
    power_to_db,
)
from mimic_audit.errors import DimensionError, DomainError, EmptyInputError, FftSizeError, ParameterError


def naive_dft(x: np.ndarray) -> np.ndarray:
    n = x.shape[-1]
    k = np.arange(n)
    phase = (np.outer(k, k) % n) / n
    return x @ np.exp(-2j * np.pi * phase).T


def test_hz_to_mel_values():
    assert hz_to_mel(0.0) == 0.0
    assert hz_to_mel(700.0) == pytest.approx(781.17, abs=0.01)
    assert mel_to_hz(0.0) == 0.0
    assert mel_to_hz(781.17) == pytest.approx(700.0, abs=0.01)


@pytest.mark.parametrize("m", [100.0, 1000.0, 3000.0])
def test_mel_round_trip(m):
    assert hz_to_mel(mel_to_hz(m)) == pytest.approx(m, abs=1e-9)


def test_mel_to_hz_is_increasing():
    f = mel_to_hz(np.linspace(0.0, 4000.0, 50))
    assert np.all(np.diff(f) > 0)


def test_negative_mel_inputs_are_domain_errors():
    with pytest.raises(DomainError):
        hz_to_mel(-1.0)
    with pytest.raises(DomainError):
        mel_to_hz(-0.5)


def test_fft_impulse_and_constant():
    np.testing.assert_allclose(fft_real(np.array([1.0, 0.0, 0.0, 0.0])), np.ones(3), atol=1e-15)
    np.testing.assert_allclose(fft_real(np.ones(4)), [4.0, 0.0, 0.0], atol=1e-15)


def test_fft_matches_naive_dft(rng):
    x = rng.uniform(-1.0, 1.0, size=(100, 2048))
    assert np.max(np.abs(fft(x) - naive_dft(x))) < 1e-9


def test_fft_is_linear(rng):
    x, y = rng.standard_normal((2, 512))
    np.testing.assert_allclose(fft(2.5 * x - 0.7 * y), 2.5 * fft(x) - 0.7 * fft(y), atol=1e-9)


@pytest.mark.parametrize("n", [3, 6, 1000])
def test_fft_rejects_non_power_of_two(n):
    with pytest.raises(FftSizeError):
        fft(np.zeros(n))


def test_hann_window_is_periodic():
    w = hann_window(8)
    assert w[0] == 0.0
    assert w[4] == pytest.approx(1.0)
    np.testing.assert_allclose(w[1:], w[1:][::-1], atol=1e-15)


def test_frame_count_when_centered():
    params = StftParams()
    for length in (1, 511, 512, 2048, 22050):
        frames = frame_signal(np.zeros(length), params)
        assert frames.shape == (1 + length // 512, 2048)


def test_uncentered_short_signal_is_zero_padded_to_one_frame():
    frames = frame_signal(np.ones(10), StftParams(frame_length=16, hop_length=4, centered=False))
    assert frames.shape == (1, 16)
    assert frames[0, :10].sum() == 10 and frames[0, 10:].sum() == 0


def test_stft_params_validation():
    with pytest.raises(ValueError):
        StftParams(frame_length=1000)
    with pytest.raises(ValueError):
        StftParams(frame_length=256, hop_length=512)


def test_spectrogram_of_1khz_tone_peaks_at_bin_93(tone_clip):
    spec = power_spectrogram(tone_clip)
    assert spec.n_bins == 1025
    assert spec.bin_freqs[-1] == pytest.approx(11025.0)
    peaks = np.argmax(spec.power, axis=0)
    assert np.all(peaks[2:-2] == 93)


def test_spectrogram_of_silence_is_zero():
    spec = power_spectrogram(AudioClip(np.zeros(4096), 22050))
    assert np.all(spec.power == 0.0)


def test_spectrogram_rejects_empty_clip():
    with pytest.raises(EmptyInputError):
        power_spectrogram(AudioClip(np.zeros(0), 22050))


def test_windowed_parseval(rng):
    n = 2048
    wx = hann_window(n) * rng.uniform(-1.0, 1.0, n)
    spectrum = np.abs(fft_real(wx)) ** 2
    rhs = (spectrum[0] + 2.0 * spectrum[1:-1].sum() + spectrum[-1]) / n
    assert np.sum(wx ** 2) == pytest.approx(rhs, rel=1e-8)


def test_filterbank_shape_and_rows():
    fb = mel_filterbank(128, 1025, 22050)
    assert fb.weights.shape == (128, 1025)
    assert np.all(fb.weights >= 0.0)
    assert np.all(fb.weights.sum(axis=1) > 0.0)
    for row in fb.weights:
        support = np.flatnonzero(row > 0)
        assert np.all(np.diff(support) == 1)


def test_filterbank_peaks_are_mel_equidistant():
    fb = mel_filterbank(128, 1025, 22050)
    steps = np.diff(hz_to_mel(fb.center_freqs))
    assert np.all(steps > 0)
    np.testing.assert_allclose(steps, steps[0], atol=1e-6)


def test_filterbank_on_flat_spectrum_is_positive():
    fb = mel_filterbank()
    assert np.all(fb.apply(np.ones((1025, 3))) > 0.0)


def test_filterbank_parameter_errors():
    with pytest.raises(ParameterError):
        mel_filterbank(0, 1025, 22050)
    with pytest.raises(ParameterError):
        mel_filterbank(128, 1025, 22050, f_min=100.0, f_max=20000.0)
    with pytest.raises(ParameterError):
        mel_filterbank(128, 1025, 22050, f_min=5000.0, f_max=4000.0)


def test_filterbank_apply_checks_bins():
    with pytest.raises(DimensionError):
        mel_filterbank().apply(np.ones((513, 2)))


def test_power_to_db():
    assert power_to_db(1.0) == 0.0
    assert power_to_db(0.0) == pytest.approx(-100.0)
    assert power_to_db(100.0) == pytest.approx(20.0)


def test_dct_of_constant():
    np.testing.assert_allclose(dct2_ortho(np.ones(4)), [2.0, 0.0, 0.0, 0.0], atol=1e-12)


def test_dct_preserves_energy_and_matches_direct_sum(rng):
    v = rng.standard_normal(128)
    c = dct2_ortho(v)
    assert np.linalg.norm(c) == pytest.approx(np.linalg.norm(v), abs=1e-10)

    n = len(v)
    direct = np.empty(n)
    for k in range(n):
        s = np.sqrt(1.0 / n) if k == 0 else np.sqrt(2.0 / n)
        direct[k] = s * sum(v[t] * np.cos(np.pi * k * (2 * t + 1) / (2 * n)) for t in range(n))
    assert np.max(np.abs(c - direct)) < 1e-10


def test_dct_along_axis_zero(rng):
    m = rng.standard_normal((16, 3))
    np.testing.assert_allclose(dct2_ortho(m, axis=0)[:, 1], dct2_ortho(m[:, 1]), atol=1e-12)


def test_bin_frequencies():
    f = bin_frequencies(22050, 2048)
    assert len(f) == 1025
    assert f[1] == pytest.approx(22050 / 2048)
