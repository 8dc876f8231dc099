from .shoebox import (
    BinauralRIR,
    Pose,
    RirConfig,
    RoomSpec,
    binaural_rir,
    eyring_rt60,
    image_source_ir,
    source_azimuth,
    source_distance,
)
from .convolve import convolve_rir, fft_convolve

__all__ = [
    "RoomSpec", "Pose", "RirConfig", "BinauralRIR",
    "image_source_ir", "binaural_rir", "eyring_rt60",
    "source_azimuth", "source_distance", "convolve_rir", "fft_convolve",
]
