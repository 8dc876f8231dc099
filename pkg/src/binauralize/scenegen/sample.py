"""Scene sampling and trajectory interpolation.

A scene is a room, a fixed source position, and a receiver random walk with
one waypoint per interval. Every waypoint is aimed so the source sits at a
sampled azimuth inside the field of view; between waypoints both the
position and the azimuth are interpolated linearly, so the source stays in
view at every frame by construction (yaw is derived per frame from the
interpolated azimuth and the bearing to the source).
"""

from __future__ import annotations

import math

import numpy as np

from ..room.shoebox import Pose, RoomSpec, source_azimuth
from .config import SceneGenConfig
from .types import SceneSpec

_MAX_TRIES = 10000


def sample_scene(rng_seed: int, cfg: SceneGenConfig = SceneGenConfig(),
                 scene_id: str | None = None,
                 room: RoomSpec | None = None,
                 room_id: str | None = None) -> SceneSpec:
    """Deterministic scene from (seed, cfg); optionally reuse a given room."""
    rng = np.random.default_rng(np.random.SeedSequence([0x5ce9e, rng_seed]))
    if room is None:
        room = sample_room(rng, cfg)
        room_id = room_id or f"room-{rng_seed:08d}"
    elif room_id is None:
        raise ValueError("room_id is required when reusing a room")

    dims = np.asarray(room.dims)
    margin = cfg.wall_margin
    if np.any(dims <= 2 * margin):
        raise ValueError(f"room {room.dims} too small for wall margin {margin}")

    src = _sample_point(rng, dims, margin, cfg.source_height)

    n_seg = int(round(cfg.duration / cfg.waypoint_interval))
    positions = []
    for k in range(n_seg + 1):
        for _ in range(_MAX_TRIES):
            if k == 0:
                cand = _sample_point(rng, dims, margin, cfg.ear_height)
            else:
                step = rng.uniform(0.1, cfg.drift_max)
                theta = rng.uniform(0, 2 * math.pi)
                cand = positions[-1] + np.array(
                    [step * math.cos(theta), step * math.sin(theta), 0.0])
            if cfg.grid_resolution:
                snapped = cand.copy()
                snapped[:2] = np.round(cand[:2] / cfg.grid_resolution) * cfg.grid_resolution
                cand = snapped
            inside = np.all(cand > margin) and np.all(cand < dims - margin)
            dist = np.linalg.norm(cand - src)
            if inside and cfg.min_source_distance <= dist <= cfg.max_source_distance:
                positions.append(cand)
                break
        else:
            raise ValueError("could not place receiver trajectory in room")

    # one azimuth sign per scene: the camera keeps the source on one side, and
    # the audio (whose RIR is held per segment) stays sign-consistent with
    # every interpolated frame
    sign = 1.0 if rng.random() < cfg.azimuth_positive_prob else -1.0
    lo, hi = cfg.azimuth_abs_deg
    trajectory = []
    for k, pos in enumerate(positions):
        az = math.radians(sign * rng.uniform(lo, hi))
        bearing = math.atan2(src[1] - pos[1], src[0] - pos[0])
        pose = Pose(tuple(pos), _wrap(bearing - az), cfg.ear_separation)
        trajectory.append((k * cfg.waypoint_interval, pose))

    clip_id = (cfg.bank_categories[int(rng.integers(len(cfg.bank_categories)))]
               if cfg.bank_categories else "external")
    return SceneSpec(
        scene_id=scene_id or f"scene-{rng_seed:08d}",
        room_id=room_id,
        room=room,
        source_position=tuple(src),
        source_clip_id=clip_id,
        trajectory=trajectory,
        duration=cfg.duration,
        seed=rng_seed,
    )


def sample_room(rng: np.random.Generator, cfg: SceneGenConfig) -> RoomSpec:
    dims = (float(rng.uniform(*cfg.dims_xy)), float(rng.uniform(*cfg.dims_xy)),
            float(rng.uniform(*cfg.dims_z)))
    absorption = float(rng.uniform(*cfg.absorption_range))
    return RoomSpec(dims, absorption)


def _sample_point(rng, dims, margin, height_range):
    x = rng.uniform(margin, dims[0] - margin)
    y = rng.uniform(margin, dims[1] - margin)
    z = rng.uniform(max(height_range[0], margin),
                    min(height_range[1], dims[2] - margin))
    return np.array([x, y, z])


def _wrap(a: float) -> float:
    return math.atan2(math.sin(a), math.cos(a))


def azimuth_at(scene: SceneSpec, t: float) -> float:
    """Interpolated azimuth (radians) of the source at time t."""
    (t0, p0), (t1, p1), frac = _bracket(scene, t)
    az0 = source_azimuth(p0, scene.source_position)
    az1 = source_azimuth(p1, scene.source_position)
    return az0 + (az1 - az0) * frac


def pose_at(scene: SceneSpec, t: float) -> Pose:
    """Receiver pose at time t: lerped position, yaw aimed at the lerped azimuth."""
    (t0, p0), (t1, p1), frac = _bracket(scene, t)
    pos = (1 - frac) * np.asarray(p0.position) + frac * np.asarray(p1.position)
    az = azimuth_at(scene, t)
    src = scene.source_position
    bearing = math.atan2(src[1] - pos[1], src[0] - pos[0])
    return Pose(tuple(pos), _wrap(bearing - az), p0.ear_separation)


def _bracket(scene: SceneSpec, t: float):
    traj = scene.trajectory
    t = min(max(t, traj[0][0]), traj[-1][0])
    for (ta, pa), (tb, pb) in zip(traj, traj[1:]):
        if t <= tb:
            frac = 0.0 if tb == ta else (t - ta) / (tb - ta)
            return (ta, pa), (tb, pb), frac
    return traj[-2], traj[-1], 1.0
