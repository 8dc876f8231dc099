"""Scene, observation, and record types plus their JSON forms."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..dsp.types import BinauralClip
from ..room.shoebox import BinauralRIR, Pose, RoomSpec

OBS_HEIGHT = 32
OBS_WIDTH = 64


@dataclass
class SceneSpec:
    scene_id: str
    room_id: str
    room: RoomSpec
    source_position: tuple[float, float, float]
    source_clip_id: str
    trajectory: list[tuple[float, Pose]]  # waypoints every waypoint_interval s
    duration: float
    seed: int

    def __post_init__(self):
        if not 10.0 <= self.duration <= 40.0:
            raise ValueError(f"duration must lie in [10, 40] s, got {self.duration}")
        if len(self.trajectory) < 2:
            raise ValueError("trajectory needs at least two waypoints")

    def to_json(self) -> dict[str, Any]:
        return {
            "scene_id": self.scene_id,
            "room_id": self.room_id,
            "dims": list(self.room.dims),
            "absorption": (self.room.absorption if np.isscalar(self.room.absorption)
                           else list(self.room.absorption)),
            "speed_of_sound": self.room.speed_of_sound,
            "source_position": list(self.source_position),
            "source_clip_id": self.source_clip_id,
            "duration": self.duration,
            "seed": self.seed,
            "trajectory": [
                {"t": t, "position": list(p.position), "yaw": p.yaw,
                 "ear_separation": p.ear_separation}
                for t, p in self.trajectory
            ],
        }

    @classmethod
    def from_json(cls, d: dict[str, Any]) -> "SceneSpec":
        absorption = d["absorption"]
        if isinstance(absorption, list):
            absorption = tuple(absorption)
        return cls(
            scene_id=d["scene_id"],
            room_id=d["room_id"],
            room=RoomSpec(tuple(d["dims"]), absorption, d["speed_of_sound"]),
            source_position=tuple(d["source_position"]),
            source_clip_id=d["source_clip_id"],
            trajectory=[
                (w["t"], Pose(tuple(w["position"]), w["yaw"], w["ear_separation"]))
                for w in d["trajectory"]
            ],
            duration=d["duration"],
            seed=d["seed"],
        )


@dataclass
class ObservationImage:
    """H x W x 3 schematic standing in for a camera frame, values in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.float64)
        if self.pixels.shape != (OBS_HEIGHT, OBS_WIDTH, 3):
            raise ValueError(
                f"observation must be {OBS_HEIGHT}x{OBS_WIDTH}x3, got {self.pixels.shape}")
        if self.pixels.size and (self.pixels.min() < 0 or self.pixels.max() > 1):
            raise ValueError("observation pixels must lie in [0, 1]")

    def flipped(self) -> "ObservationImage":
        return ObservationImage(self.pixels[:, ::-1, :].copy())


@dataclass
class SampleRecord:
    scene: SceneSpec
    clip: BinauralClip
    observations: list[tuple[float, ObservationImage]]
    rir_per_waypoint: list[BinauralRIR]
    rt60: float
    metadata: dict[str, Any] = field(default_factory=dict)

    def observation_nearest(self, t: float) -> ObservationImage:
        times = np.array([ot for ot, _ in self.observations])
        return self.observations[int(np.argmin(np.abs(times - t)))][1]

    def waypoint_index(self, t: float) -> int:
        """Index of the waypoint segment covering time t."""
        n = len(self.rir_per_waypoint)
        seg = self.scene.duration / n
        return min(int(t / seg), n - 1)
