"""Checkpoint files: BNT1 tensor archive with a structured-text header."""

from __future__ import annotations

import json
from dataclasses import asdict

import numpy as np

from .. import tensorfile
from .model import ArchConfig


def save_checkpoint(path, params: dict[str, np.ndarray], arch: ArchConfig,
                    extra: dict[str, str] | None = None) -> None:
    header = {
        "format": "binauralize-checkpoint-1",
        "arch": json.dumps(asdict(arch), sort_keys=True),
    }
    if extra:
        header.update({k: str(v) for k, v in extra.items()})
    tensorfile.save_archive(path, header, params)


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], ArchConfig, dict[str, str]]:
    header, tensors = tensorfile.load_archive(path)
    if header.get("format") != "binauralize-checkpoint-1":
        raise ValueError(f"{path}: not a model checkpoint")
    arch_dict = json.loads(header["arch"])
    for key in ("visual_channels", "unet_channels", "coh_channels",
                "rir_channels", "rir_seed_hw"):
        arch_dict[key] = tuple(arch_dict[key])
    arch = ArchConfig(**arch_dict)
    return tensors, arch, header
