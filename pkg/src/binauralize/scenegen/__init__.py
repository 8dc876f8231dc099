from .config import SceneGenConfig
from .types import ObservationImage, SampleRecord, SceneSpec
from .sample import sample_scene, pose_at, azimuth_at
from .render import render_observation
from .sources import anechoic_bank
from .synthesize import synthesize_record
from .manifest import Manifest, read_manifest, write_manifest, verify_split
from .corpus import generate_corpus

__all__ = [
    "SceneGenConfig", "SceneSpec", "ObservationImage", "SampleRecord",
    "sample_scene", "pose_at", "azimuth_at", "render_observation",
    "anechoic_bank", "synthesize_record",
    "Manifest", "read_manifest", "write_manifest", "verify_split",
    "generate_corpus",
]
