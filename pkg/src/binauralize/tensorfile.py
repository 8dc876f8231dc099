"""BNT1 binary tensor format and the checkpoint archive built on it.

A BNT1 blob is:

    magic   4 bytes  b"BNT1"
    rank    uint64 little-endian
    dims    rank x uint64 little-endian
    dtype   1 byte tag (see DTYPE_TAGS)
    payload row-major little-endian array data

An archive (used for checkpoints) is a structured-text header followed by
named BNT1 blobs:

    #%BNT-ARCHIVE 1\n
    key = value\n          (any number of lines; values are plain strings)
    #%TENSORS <count>\n
    repeated <count> times:
        uint64 name length, name utf-8 bytes, BNT1 blob
"""

from __future__ import annotations

import struct
from typing import BinaryIO

import numpy as np

MAGIC = b"BNT1"
ARCHIVE_MAGIC = "#%BNT-ARCHIVE 1"

DTYPE_TAGS = {
    np.dtype(np.float32): 1,
    np.dtype(np.float64): 2,
    np.dtype(np.complex64): 3,
    np.dtype(np.complex128): 4,
    np.dtype(np.int64): 5,
    np.dtype(np.uint8): 6,
}
TAG_DTYPES = {v: k for k, v in DTYPE_TAGS.items()}


def write_tensor(fh: BinaryIO, arr: np.ndarray) -> None:
    arr = np.asarray(arr)
    if arr.ndim and not arr.flags.c_contiguous:
        arr = np.ascontiguousarray(arr)
    if arr.dtype not in DTYPE_TAGS:
        raise ValueError(f"unsupported dtype for BNT1: {arr.dtype}")
    fh.write(MAGIC)
    fh.write(struct.pack("<Q", arr.ndim))
    for d in arr.shape:
        fh.write(struct.pack("<Q", d))
    fh.write(struct.pack("<B", DTYPE_TAGS[arr.dtype]))
    data = arr if arr.dtype.byteorder in ("<", "=", "|") else arr.astype(arr.dtype.newbyteorder("<"))
    fh.write(data.tobytes())


def read_tensor(fh: BinaryIO) -> np.ndarray:
    magic = fh.read(4)
    if magic != MAGIC:
        raise ValueError(f"bad BNT1 magic: {magic!r}")
    (rank,) = struct.unpack("<Q", _read_exact(fh, 8))
    if rank > 32:
        raise ValueError(f"implausible tensor rank {rank}")
    dims = tuple(struct.unpack("<Q", _read_exact(fh, 8))[0] for _ in range(rank))
    (tag,) = struct.unpack("<B", _read_exact(fh, 1))
    if tag not in TAG_DTYPES:
        raise ValueError(f"unknown BNT1 dtype tag {tag}")
    dtype = TAG_DTYPES[tag]
    count = int(np.prod(dims, dtype=np.int64)) if dims else 1
    raw = _read_exact(fh, count * dtype.itemsize)
    return np.frombuffer(raw, dtype=dtype).copy().reshape(dims)


def save_tensor(path, arr: np.ndarray) -> None:
    with open(path, "wb") as fh:
        write_tensor(fh, arr)


def load_tensor(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return read_tensor(fh)


def save_archive(path, header: dict[str, str], tensors: dict[str, np.ndarray]) -> None:
    with open(path, "wb") as fh:
        lines = [ARCHIVE_MAGIC]
        for k, v in header.items():
            if "\n" in k or "\n" in str(v) or "=" in k:
                raise ValueError(f"bad header entry {k!r}")
            lines.append(f"{k} = {v}")
        lines.append(f"#%TENSORS {len(tensors)}")
        fh.write(("\n".join(lines) + "\n").encode("utf-8"))
        for name, arr in tensors.items():
            nb = name.encode("utf-8")
            fh.write(struct.pack("<Q", len(nb)))
            fh.write(nb)
            write_tensor(fh, arr)


def load_archive(path) -> tuple[dict[str, str], dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        first = _read_line(fh)
        if first != ARCHIVE_MAGIC:
            raise ValueError(f"not a BNT archive: {first!r}")
        header: dict[str, str] = {}
        while True:
            line = _read_line(fh)
            if line.startswith("#%TENSORS"):
                count = int(line.split()[1])
                break
            if " = " not in line:
                raise ValueError(f"malformed archive header line: {line!r}")
            k, v = line.split(" = ", 1)
            header[k] = v
        tensors: dict[str, np.ndarray] = {}
        for _ in range(count):
            (nlen,) = struct.unpack("<Q", _read_exact(fh, 8))
            name = _read_exact(fh, nlen).decode("utf-8")
            tensors[name] = read_tensor(fh)
        return header, tensors


def _read_exact(fh: BinaryIO, n: int) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise ValueError(f"truncated BNT1 data: wanted {n} bytes, got {len(buf)}")
    return buf


def _read_line(fh: BinaryIO) -> str:
    chars = bytearray()
    while True:
        c = fh.read(1)
        if not c:
            raise ValueError("truncated archive header")
        if c == b"\n":
            return chars.decode("utf-8")
        chars.extend(c)
