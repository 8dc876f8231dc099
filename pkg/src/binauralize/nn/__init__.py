from .autodiff import Tensor
from .model import (
    ArchConfig,
    REDUCED_ARCH,
    coherence_classify,
    init_params,
    mask_head,
    param_count,
    rir_decode,
    visual_encode,
)
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "Tensor", "ArchConfig", "REDUCED_ARCH", "init_params", "param_count",
    "visual_encode", "mask_head", "coherence_classify", "rir_decode",
    "save_checkpoint", "load_checkpoint",
]
