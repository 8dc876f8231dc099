"""Uniformly partitioned overlap-save FFT convolution."""

from __future__ import annotations

import numpy as np

from ..dsp.types import BinauralClip, Waveform
from .shoebox import BinauralRIR


def _next_pow2(n: int) -> int:
    return 1 if n <= 1 else 1 << (n - 1).bit_length()


def fft_convolve(x: np.ndarray, h: np.ndarray, block: int = 4096) -> np.ndarray:
    """Full linear convolution (length len(x)+len(h)-1).

    The impulse response is split into uniform partitions of `block` samples;
    input blocks stream through a frequency-domain delay line, so peak memory
    stays proportional to the partition size rather than the signal length.
    """
    x = np.asarray(x, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if x.size == 0 or h.size == 0:
        return np.zeros(max(x.size + h.size - 1, 0))
    block = min(_next_pow2(block), _next_pow2(max(h.size, 1)))
    nfft = 2 * block
    n_parts = (h.size + block - 1) // block
    h_pad = np.zeros(n_parts * block)
    h_pad[:h.size] = h
    H = np.fft.rfft(h_pad.reshape(n_parts, block), n=nfft, axis=1)

    out_len = x.size + h.size - 1
    n_blocks = (out_len + block - 1) // block
    fdl = np.zeros((n_parts, nfft // 2 + 1), dtype=np.complex128)
    buf = np.zeros(nfft)
    out = np.zeros(n_blocks * block)
    for b in range(n_blocks):
        lo = b * block
        seg = x[lo:lo + block]
        buf[:block] = buf[block:]
        buf[block:] = 0.0
        buf[block:block + seg.size] = seg
        fdl = np.roll(fdl, 1, axis=0)
        fdl[0] = np.fft.rfft(buf)
        acc = np.sum(fdl * H, axis=0)
        y = np.fft.irfft(acc, n=nfft)
        out[lo:lo + block] = y[block:]
    return out[:out_len]


def convolve_rir(src_audio: Waveform, rir: BinauralRIR) -> BinauralClip:
    """Render binaural audio; output truncated to len(src) for clip assembly."""
    if src_audio.sample_rate != rir.sample_rate:
        raise ValueError(
            f"sample-rate mismatch: source {src_audio.sample_rate} Hz "
            f"vs RIR {rir.sample_rate} Hz")
    n = len(src_audio)
    left = fft_convolve(src_audio.samples, rir.left.samples)[:n]
    right = fft_convolve(src_audio.samples, rir.right.samples)[:n]
    return BinauralClip(Waveform(left, src_audio.sample_rate),
                        Waveform(right, src_audio.sample_rate))
