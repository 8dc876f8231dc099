"""Minimal RIFF/WAVE reader and writer.

Supports PCM16 (format 1) and IEEE float32 (format 3), mono or stereo.
Arrays are float64 in [-1, 1] on the Python side; shape (n,) for mono and
(n, channels) otherwise.
"""

from __future__ import annotations

import struct

import numpy as np

_FMT_PCM = 1
_FMT_FLOAT = 3


def write_wav(path, data: np.ndarray, sample_rate: int, fmt: str = "pcm16") -> None:
    data = np.asarray(data, dtype=np.float64)
    if data.ndim == 1:
        data = data[:, None]
    if data.ndim != 2:
        raise ValueError(f"audio must be 1-D or 2-D, got shape {data.shape}")
    n, channels = data.shape
    if fmt == "pcm16":
        code, width = _FMT_PCM, 2
        payload = quantize_pcm16(data).tobytes()
    elif fmt == "float32":
        code, width = _FMT_FLOAT, 4
        payload = data.astype("<f4").tobytes()
    else:
        raise ValueError(f"unsupported wav format {fmt!r}")

    byte_rate = sample_rate * channels * width
    block_align = channels * width
    with open(path, "wb") as fh:
        fh.write(b"RIFF")
        fh.write(struct.pack("<I", 4 + 8 + 16 + 8 + len(payload)))
        fh.write(b"WAVE")
        fh.write(b"fmt ")
        fh.write(struct.pack("<IHHIIHH", 16, code, channels, sample_rate,
                             byte_rate, block_align, 8 * width))
        fh.write(b"data")
        fh.write(struct.pack("<I", len(payload)))
        fh.write(payload)


def read_wav(path) -> tuple[np.ndarray, int]:
    with open(path, "rb") as fh:
        riff, _, wave = struct.unpack("<4sI4s", fh.read(12))
        if riff != b"RIFF" or wave != b"WAVE":
            raise ValueError(f"{path}: not a RIFF/WAVE file")
        code = channels = sample_rate = width = None
        data = None
        while True:
            head = fh.read(8)
            if len(head) < 8:
                break
            chunk, size = struct.unpack("<4sI", head)
            if chunk == b"fmt ":
                fmt = fh.read(size)
                code, channels, sample_rate, _, _, bits = struct.unpack("<HHIIHH", fmt[:16])
                width = bits // 8
            elif chunk == b"data":
                data = fh.read(size)
            else:
                fh.seek(size + (size & 1), 1)
    if code is None or data is None:
        raise ValueError(f"{path}: missing fmt or data chunk")
    if code == _FMT_PCM and width == 2:
        arr = np.frombuffer(data, dtype="<i2").astype(np.float64) / 32768.0
    elif code == _FMT_FLOAT and width == 4:
        arr = np.frombuffer(data, dtype="<f4").astype(np.float64)
    else:
        raise ValueError(f"{path}: unsupported wav encoding (format {code}, {8*width} bit)")
    if channels > 1:
        arr = arr.reshape(-1, channels)
    return arr, sample_rate


def quantize_pcm16(data: np.ndarray) -> np.ndarray:
    """Round to int16 the way write_wav does (clip, then banker's rounding)."""
    x = np.clip(np.asarray(data, dtype=np.float64), -1.0, 32767.0 / 32768.0)
    return np.round(x * 32768.0).astype("<i2")
