"""Schematic observation renderer.

The image is a top-down schematic in camera-centric terms: a centered
rectangle outline encodes the room footprint with its edge intensity set by
(1 - absorption); the source is an anti-aliased disk whose column is
proportional to azimuth (left of camera = left of image), whose row and
radius encode distance; channel 2 carries the source height line and the
receiver tick. Everything except the disk column is symmetric in x, so
flipping the image horizontally equals re-rendering with the azimuth
negated, exactly.
"""

from __future__ import annotations

import math

import numpy as np

from ..room.shoebox import Pose, source_azimuth, source_distance
from .config import SceneGenConfig
from .types import OBS_HEIGHT, OBS_WIDTH, ObservationImage, SceneSpec

_DIST_RANGE = (0.5, 12.0)


def render_observation(scene: SceneSpec, pose: Pose,
                       cfg: SceneGenConfig = SceneGenConfig()) -> ObservationImage:
    az = source_azimuth(pose, scene.source_position)
    dist = source_distance(pose, scene.source_position)
    return render_features(
        azimuth=az,
        distance=dist,
        room_dims=scene.room.dims,
        absorption=scene.room.mean_absorption(),
        source_height_frac=scene.source_position[2] / scene.room.dims[2],
        fov=math.radians(cfg.azimuth_fov_deg),
    )


def render_features(azimuth: float, distance: float, room_dims, absorption: float,
                    source_height_frac: float, fov: float) -> ObservationImage:
    h, w = OBS_HEIGHT, OBS_WIDTH
    img = np.zeros((h, w, 3))

    # channel 0: room outline, size from footprint, brightness from absorption
    fx = _unit((room_dims[0] - 3.0) / 7.0)
    fy = _unit((room_dims[1] - 3.0) / 7.0)
    half_w = 8 + fx * 23.0
    half_h = 4 + fy * 11.0
    c_lo = int(round((w - 1) / 2 - half_w))
    c_hi = (w - 1) - c_lo
    r_lo = int(round((h - 1) / 2 - half_h))
    r_hi = (h - 1) - r_lo
    edge = 1.0 - absorption
    img[r_lo, c_lo:c_hi + 1, 0] = edge
    img[r_hi, c_lo:c_hi + 1, 0] = edge
    img[r_lo:r_hi + 1, c_lo, 0] = edge
    img[r_lo:r_hi + 1, c_hi, 0] = edge

    # channel 1: source disk; +azimuth (left of camera) lands in the left half.
    # dx is built from the exact half-integer pixel offset so that negating
    # the azimuth mirrors the anti-aliased disk bit-exactly.
    off = (w - 1) / 2 * (azimuth / fov)
    fd = _unit((distance - _DIST_RANGE[0]) / (_DIST_RANGE[1] - _DIST_RANGE[0]))
    row = 4.0 + fd * (h - 10)
    radius = min(max(6.0 / max(distance, 0.5), 1.2), 6.0)
    yy, xx = np.mgrid[0:h, 0:w]
    dx = (xx - (w - 1) / 2) + off
    d_px = np.sqrt((yy - row) ** 2 + dx ** 2)
    img[:, :, 1] = np.clip(radius + 0.5 - d_px, 0.0, 1.0)

    # channel 2: source height line (intensity encodes the room height),
    # plus the receiver tick; both x-symmetric
    hrow = int(round((1.0 - _unit(source_height_frac)) * (h - 1)))
    ceil_frac = _unit((room_dims[2] - 2.5) / 1.5)
    img[hrow, :, 2] = 0.25 + 0.6 * ceil_frac
    img[h - 3:h, w // 2 - 1:w // 2 + 1, 2] = 1.0
    return ObservationImage(img)


def _unit(x: float) -> float:
    return float(min(max(x, 0.0), 1.0))
