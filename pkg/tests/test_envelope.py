import numpy as np
import pytest

from binauralize.dsp import Waveform, envelope

SR = 16000


def test_sine_envelope_near_amplitude():
    amp, freq = 0.7, 500.0
    t = np.arange(SR) / SR
    env = envelope(Waveform(amp * np.sin(2 * np.pi * freq * t), SR))
    interior = env[SR // 10: -SR // 10]
    assert np.max(np.abs(interior - amp)) < 0.01 * amp


def test_zero_signal_zero_envelope():
    env = envelope(Waveform(np.zeros(1000), SR))
    assert np.all(env == 0)


def test_envelope_tracks_modulator():
    t = np.arange(2 * SR) / SR
    modulator = 1.0 + 0.5 * np.sin(2 * np.pi * 4.0 * t)
    x = modulator * np.sin(2 * np.pi * 1000.0 * t)
    env = envelope(Waveform(x, SR))
    interior = slice(SR // 8, -SR // 8)
    assert np.max(np.abs(env[interior] - modulator[interior])) < 0.02


def test_envelope_basic_contracts():
    rng = np.random.default_rng(0)
    w = Waveform(rng.standard_normal(5000), SR)
    env = envelope(w)
    assert env.shape == w.samples.shape
    assert np.all(env >= 0)
    with pytest.raises(ValueError):
        envelope(Waveform(np.array([]), SR))
