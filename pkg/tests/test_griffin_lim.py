import numpy as np

from binauralize.dsp import MagnitudeSpectrogram, StftParams, Waveform, griffin_lim, stft

SR = 16000
P = StftParams()


def chirp(seconds=1.0):
    t = np.arange(int(SR * seconds)) / SR
    f0, f1 = 200.0, 4000.0
    phase = 2 * np.pi * (f0 * t + (f1 - f0) * t ** 2 / (2 * seconds))
    return Waveform(np.sin(phase), SR)


def test_zero_magnitude_gives_zero_waveform():
    mag = MagnitudeSpectrogram(np.zeros((40, 257)), P, SR)
    wave, errors = griffin_lim(mag, iters=3, seed=0)
    assert np.all(wave.samples == 0)
    assert errors == [0.0, 0.0, 0.0]


def test_chirp_reconstruction_converges_10db():
    target = stft(chirp(), P).magnitude()
    _, errors = griffin_lim(target, iters=60, seed=1)
    # at least 10 dB below the first-iteration error
    assert 20 * np.log10(errors[-1] / errors[0]) <= -10.0


def test_error_sequence_non_increasing():
    rng = np.random.default_rng(2)
    corpus = [
        stft(chirp(0.5), P).magnitude(),
        stft(Waveform(rng.standard_normal(SR // 2), SR), P).magnitude(),
        MagnitudeSpectrogram(rng.random((30, 257)), P, SR),
    ]
    for mag in corpus:
        _, errors = griffin_lim(mag, iters=30, seed=3)
        diffs = np.diff(errors)
        assert np.all(diffs <= 1e-12)


def test_more_iterations_not_worse():
    target = stft(chirp(0.5), P).magnitude()
    _, e1 = griffin_lim(target, iters=1, seed=4)
    _, e30 = griffin_lim(target, iters=30, seed=4)
    assert e30[-1] <= e1[-1]
