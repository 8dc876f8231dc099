"""Built-in anechoic source bank plus external WAV loading.

Three synthesis families cover the categories: plucked strings from a
feedback-delay (Karplus-Strong) loop, band-limited pulse trains, and
amplitude-modulated noise. All clips are deterministic given the seed,
16 kHz, at least 10 s, peak-normalized below 1.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .. import wavio
from ..dsp.types import DEFAULT_SAMPLE_RATE, Waveform
from .config import SceneGenConfig

SR = DEFAULT_SAMPLE_RATE

# category -> (family, fundamental or modulator Hz)
_CATEGORIES = {
    "pluck_a3": ("pluck", 220.0),
    "pluck_d4": ("pluck", 293.66),
    "pluck_g4": ("pluck", 392.0),
    "pulse_60": ("pulse", 60.0),
    "pulse_90": ("pulse", 90.0),
    "pulse_140": ("pulse", 140.0),
    "am_noise_slow": ("am_noise", 2.0),
    "am_noise_fast": ("am_noise", 5.0),
}

# every clip gets a quiet broadband layer (string/bow noise, breath): purely
# line-spectrum sources otherwise sample the room transfer at a handful of
# frequencies and their interaural levels are interference noise
_NOISE_MIX = 0.8


def pluck_fundamental(category: str) -> float:
    """Exact fundamental of the feedback-delay loop for a pluck category."""
    family, f0 = _CATEGORIES[category]
    if family != "pluck":
        raise ValueError(f"{category} is not a pluck category")
    n = _pluck_delay(f0)
    return SR / (n + 0.5)


def _pluck_delay(f0: float) -> int:
    return int(round(SR / f0 - 0.5))


def anechoic_bank(cfg: SceneGenConfig = SceneGenConfig(), seed: int = 0
                  ) -> dict[str, Waveform]:
    """clip_id -> waveform; built-in synthetic categories plus external WAVs."""
    bank: dict[str, Waveform] = {}
    for idx, cat in enumerate(cfg.bank_categories):
        if cat not in _CATEGORIES:
            raise ValueError(f"unknown source category {cat!r}")
        rng = np.random.default_rng(np.random.SeedSequence([0xba9c, seed, idx]))
        family, param = _CATEGORIES[cat]
        n = int(cfg.clip_seconds * SR)
        if family == "pluck":
            x = _pluck_clip(rng, n, param)
        elif family == "pulse":
            x = _pulse_train(rng, n, param)
        else:
            x = _am_noise(rng, n, param)
        x = _normalize(x)
        if family != "am_noise":
            x = _normalize(x + _NOISE_MIX * _broadband_layer(rng, n, x))
        bank[cat] = Waveform(x, SR)
    if cfg.external_dir is not None:
        bank.update(_load_external(Path(cfg.external_dir)))
    return bank


def _pluck_clip(rng, n, f0, damping=0.988):
    delay = _pluck_delay(f0)
    out = np.zeros(n + delay + 1)
    interval = int(1.2 * SR)
    for start in range(0, n, interval):
        velocity = rng.uniform(0.6, 1.0)
        burst = rng.uniform(-1, 1, delay)
        burst -= burst.mean()  # the loop has unity gain at DC
        out[start:start + delay] += velocity * burst
    # y[i] = d * 0.5 (y[i-delay] + y[i-delay-1]), block-processed per delay span
    fb = damping * 0.5
    for lo in range(delay + 1, len(out), delay):
        hi = min(lo + delay, len(out))
        out[lo:hi] += fb * (out[lo - delay:hi - delay]
                            + out[lo - delay - 1:hi - delay - 1])
    return out[:n]


def _pulse_train(rng, n, f0):
    t = np.arange(n) / SR
    k_max = int(4000.0 / f0)
    x = np.zeros(n)
    for k in range(1, k_max + 1):
        x += math.cos(k * 0.7) * np.cos(2 * np.pi * k * f0 * t)
    x /= k_max
    wobble = 0.7 + 0.3 * np.sin(2 * np.pi * rng.uniform(0.2, 0.5) * t)
    return x * wobble


def _am_noise(rng, n, f_mod):
    noise = rng.standard_normal(n)
    # brickwall to 6 kHz for a softer texture
    spec = np.fft.rfft(noise)
    cut = int(6000.0 / SR * n)
    spec[cut:] = 0.0
    noise = np.fft.irfft(spec, n=n)
    t = np.arange(n) / SR
    return noise * (0.55 + 0.45 * np.sin(2 * np.pi * f_mod * t))


def _broadband_layer(rng, n, carrier):
    """Noise layer that follows the carrier's envelope (500 Hz - 6 kHz)."""
    noise = rng.standard_normal(n)
    spec = np.fft.rfft(noise)
    f = np.fft.rfftfreq(n, 1.0 / SR)
    spec[(f < 500.0) | (f > 6000.0)] = 0.0
    noise = np.fft.irfft(spec, n=n)
    noise /= max(np.sqrt(np.mean(noise ** 2)), 1e-12)
    # coarse envelope follower so the layer breathes with the source
    hop = SR // 50
    frames = np.sqrt(np.add.reduceat(carrier ** 2, np.arange(0, n, hop)) /
                     np.minimum(hop, n - np.arange(0, n, hop)))
    env = np.repeat(frames, hop)[:n]
    return noise * env


def _normalize(x, peak=0.95):
    m = np.max(np.abs(x))
    return x * (peak / m) if m > 0 else x


def _load_external(root: Path) -> dict[str, Waveform]:
    if not root.is_dir():
        raise ValueError(f"external source directory not found: {root}")
    bank: dict[str, Waveform] = {}
    for path in sorted(root.glob("*.wav")):
        try:
            data, sr = wavio.read_wav(path)
        except (ValueError, OSError) as exc:
            raise ValueError(f"unreadable source clip {path}: {exc}") from exc
        if data.ndim == 2:
            data = data.mean(axis=1)
        if sr != SR:
            if sr % SR == 0:
                data = _decimate(data, sr // SR)
            else:
                raise ValueError(
                    f"unreadable source clip {path}: sample rate {sr} is not "
                    f"an integer multiple of {SR}")
        bank[path.stem] = Waveform(_normalize(data), SR)
    return bank


def _decimate(x: np.ndarray, factor: int) -> np.ndarray:
    n_out = len(x) // factor
    spec = np.fft.rfft(x[:n_out * factor])
    return np.fft.irfft(spec[:n_out // 2 + 1], n=n_out) / factor
