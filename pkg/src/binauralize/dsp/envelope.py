"""Amplitude envelope via the analytic signal."""

from __future__ import annotations

import numpy as np

from .types import Waveform


def envelope(w: Waveform) -> np.ndarray:
    """Magnitude of the analytic signal (frequency-domain Hilbert construction).

    Same length as the input, non-negative everywhere.
    """
    x = w.samples
    if x.size == 0:
        raise ValueError("empty waveform")
    n = x.size
    spec = np.fft.fft(x)
    h = np.zeros(n)
    if n % 2 == 0:
        h[0] = h[n // 2] = 1.0
        h[1:n // 2] = 2.0
    else:
        h[0] = 1.0
        h[1:(n + 1) // 2] = 2.0
    return np.abs(np.fft.ifft(spec * h))
