import numpy as np
import pytest

from binauralize.dsp import (
    ComplexMask,
    ComplexSpectrogram,
    StftParams,
    Waveform,
    apply_mask,
    istft,
    stft,
    valid_interior,
)

SR = 16000
P = StftParams()


def rand_wave(seed, seconds=1.0):
    rng = np.random.default_rng(seed)
    return Waveform(rng.standard_normal(int(SR * seconds)), SR)


def test_zero_waveform_gives_zero_spectrogram():
    s = stft(Waveform(np.zeros(SR), SR), P)
    assert s.bins.shape == (1 + (SR - 400) // 160, 257)
    assert np.all(s.bins == 0)


def test_sine_peaks_at_expected_bin():
    # 1 kHz at 16 kHz with fft 512 -> bin 32
    t = np.arange(SR) / SR
    s = stft(Waveform(np.sin(2 * np.pi * 1000 * t), SR), P)
    mags = np.abs(s.bins)
    assert np.all(np.argmax(mags, axis=1) == 32)


def test_frame_matches_direct_dft():
    # oracle: direct DFT of one windowed frame
    w = rand_wave(0)
    s = stft(w, P)
    frame_idx = 7
    seg = w.samples[frame_idx * P.hop: frame_idx * P.hop + P.window_size]
    windowed = np.zeros(P.fft_size)
    windowed[:P.window_size] = seg * P.window_array()
    n = np.arange(P.fft_size)
    direct = np.array([
        np.sum(windowed * np.exp(-2j * np.pi * k * n / P.fft_size))
        for k in range(P.n_bins)
    ])
    np.testing.assert_allclose(s.bins[frame_idx], direct, atol=1e-9)


def test_linearity():
    x, y = rand_wave(1), rand_wave(2)
    both = Waveform(x.samples + y.samples, SR)
    np.testing.assert_allclose(
        stft(both, P).bins, stft(x, P).bins + stft(y, P).bins, atol=1e-9)


def test_empty_waveform_rejected():
    with pytest.raises(ValueError, match="empty waveform"):
        stft(Waveform(np.array([]), SR), P)


def test_invalid_params_rejected():
    with pytest.raises(ValueError):
        StftParams(fft_size=256, window_size=400)
    with pytest.raises(ValueError):
        StftParams(hop=0)
    with pytest.raises(ValueError):
        StftParams(hop=512, window_size=400)


def test_round_trip_interior_many_seeds():
    for seed in range(20):
        w = rand_wave(seed)
        r = istft(stft(w, P))
        lo, hi = valid_interior(P.n_frames(len(w)), P)
        ref = w.samples[lo:hi]
        err = np.linalg.norm(r.samples[lo:hi] - ref) / np.linalg.norm(ref)
        assert err < 1e-6


def test_istft_zero_and_linearity():
    s = stft(rand_wave(3), P)
    zero = ComplexSpectrogram(np.zeros_like(s.bins), P, SR)
    assert np.all(istft(zero).samples == 0)
    np.testing.assert_allclose(
        istft(ComplexSpectrogram(2 * s.bins, P, SR)).samples,
        2 * istft(s).samples, atol=1e-9)


def test_apply_mask_identity_zero_rotation():
    s = stft(rand_wave(4), P)
    ones = ComplexMask(np.ones_like(s.bins))
    np.testing.assert_array_equal(apply_mask(ones, s).bins, s.bins)

    zeros = ComplexMask(np.zeros_like(s.bins))
    assert np.all(apply_mask(zeros, s).bins == 0)

    rot = apply_mask(ComplexMask(np.full_like(s.bins, 1j)), s)
    np.testing.assert_allclose(np.abs(rot.bins), np.abs(s.bins), atol=1e-12)
    nz = np.abs(s.bins) > 1e-9
    dphase = np.angle(rot.bins[nz] / s.bins[nz])
    np.testing.assert_allclose(dphase, np.pi / 2, atol=1e-9)


def test_apply_mask_shape_mismatch():
    s = stft(rand_wave(5), P)
    with pytest.raises(ValueError, match="shape"):
        apply_mask(ComplexMask(np.ones((2, 257))), s)


def test_mask_distributes_over_addition():
    s1, s2 = stft(rand_wave(6), P), stft(rand_wave(7), P)
    rng = np.random.default_rng(8)
    m = ComplexMask(rng.standard_normal(s1.bins.shape)
                    + 1j * rng.standard_normal(s1.bins.shape))
    lhs = apply_mask(m, ComplexSpectrogram(s1.bins + s2.bins, P, SR)).bins
    rhs = apply_mask(m, s1).bins + apply_mask(m, s2).bins
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)
