"""Shoebox binaural RIR simulator: image-source early field plus diffuse tail.

image_source_ir() is the pure specular image-source operator: each bounce
multiplies the image amplitude by sqrt(1 - absorption) of the wall it hits,
distance attenuation is 1/max(r, 0.1 m), and arrivals are placed with
linear-interpolated fractional delay. Images are enumerated per axis with the
classic (parity u, lattice l) indexing: coordinate (1-2u)s + 2lL, with |l-u|
hits on the lower wall and |l| on the upper wall. Optional per-bounce
scattering loss and frequency-flat air attenuation default to 0 here.

binaural_rir() is the dataset simulator. Pure specular reflection in a
rectangle has no diffusion, so its late decay is dominated by near-axial
image chains and comes out 30-80% slower than the Eyring prediction for the
same absorption. Real rooms (and the path-traced simulators this stands in
for) scatter energy into a diffuse field, so the simulator adds:
  - per-bounce scattering loss on specular paths (energy fraction s),
  - frequency-flat air attenuation exp(-gamma r),
  - a stochastic diffuse tail decaying at the Eyring rate (with air
    absorption folded in), levelled by the classical steady-state balance
    E_rev/E_direct(r) = 16 pi r^2 (1 - a) / (S a).
The tail noise is identical in both ears: it cancels in the difference
channel and keeps mirror symmetry and determinism exact, at the cost of
overstating interaural coherence in the late field.

Head shadow is a single scalar gain applied per specular arrival whose
incidence azimuth falls in the ear's contralateral hemisphere (beyond the
threshold angle). Shadowing every contralateral arrival rather than only
the direct path keeps the window-level ILD sign consistent with the source
azimuth, which the spatial-coherence task depends on.

Summation order is documented and deterministic: parity triples in
lexicographic order, lattice points in row-major (x, y, z) order, arrivals
accumulated by np.bincount.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..dsp.rt60 import InsufficientDecayError, NoEnergyError, schroeder_rt60
from ..dsp.types import DEFAULT_SAMPLE_RATE, Waveform

MIN_DISTANCE = 0.1  # m, floor for the 1/r attenuation


@dataclass(frozen=True)
class RoomSpec:
    """Axis-aligned room with per-surface or uniform absorption.

    Per-surface order: x=0, x=Lx, y=0, y=Ly, z=0 (floor), z=Lz (ceiling).
    """

    dims: tuple[float, float, float]
    absorption: float | tuple[float, ...] = 0.3
    speed_of_sound: float = 343.0

    def __post_init__(self):
        if len(self.dims) != 3 or any(d <= 0 for d in self.dims):
            raise ValueError(f"room dims must be 3 positive lengths, got {self.dims}")
        a = self.absorption_vector()
        if np.any(a < 0) or np.any(a > 1):
            raise ValueError(f"absorption must lie in [0, 1], got {self.absorption}")
        if self.speed_of_sound <= 0:
            raise ValueError("speed_of_sound must be positive")

    def absorption_vector(self) -> np.ndarray:
        if np.isscalar(self.absorption):
            return np.full(6, float(self.absorption))
        a = np.asarray(self.absorption, dtype=np.float64)
        if a.shape != (6,):
            raise ValueError("absorption must be a scalar or 6 per-surface values")
        return a

    def surface_areas(self) -> np.ndarray:
        lx, ly, lz = self.dims
        return np.array([ly * lz, ly * lz, lx * lz, lx * lz, lx * ly, lx * ly])

    def mean_absorption(self) -> float:
        areas = self.surface_areas()
        return float(np.sum(areas * self.absorption_vector()) / np.sum(areas))

    def volume(self) -> float:
        return float(np.prod(self.dims))

    def contains(self, point, margin: float = 0.0) -> bool:
        p = np.asarray(point, dtype=np.float64)
        return bool(np.all(p > margin) and np.all(p < np.asarray(self.dims) - margin))


@dataclass(frozen=True)
class Pose:
    """Receiver head: position, yaw (0 = +x axis), and ear separation."""

    position: tuple[float, float, float]
    yaw: float = 0.0
    ear_separation: float = 0.2

    def __post_init__(self):
        if len(self.position) != 3:
            raise ValueError("position must have 3 coordinates")
        if self.ear_separation <= 0:
            raise ValueError("ear_separation must be positive")

    def forward(self) -> np.ndarray:
        return np.array([math.cos(self.yaw), math.sin(self.yaw), 0.0])

    def ear_positions(self) -> tuple[np.ndarray, np.ndarray]:
        """(left, right) ear positions on the axis perpendicular to yaw."""
        p = np.asarray(self.position, dtype=np.float64)
        lateral = np.array([-math.sin(self.yaw), math.cos(self.yaw), 0.0])
        half = 0.5 * self.ear_separation
        return p + half * lateral, p - half * lateral


@dataclass(frozen=True)
class RirConfig:
    max_order: int = 40
    ir_seconds: float = 0.5
    sample_rate: int = DEFAULT_SAMPLE_RATE
    head_shadow_gain: float = 0.6          # contralateral direct-path gain
    head_shadow_threshold_deg: float = 30.0
    head_shadow: bool = True
    scattering: float = 0.3                # specular energy lost per bounce
    air_attenuation: float = 0.005         # 1/m, frequency-flat
    diffuse_tail: bool = True
    tail_seed: int = 0


@dataclass
class BinauralRIR:
    left: Waveform
    right: Waveform
    rt60_left: Optional[float] = None
    rt60_right: Optional[float] = None

    def __post_init__(self):
        if len(self.left) != len(self.right):
            raise ValueError("binaural RIR channels must have equal length")
        energy = float(np.sum(self.left.samples ** 2) + np.sum(self.right.samples ** 2))
        if energy <= 0:
            raise ValueError("binaural RIR has no energy")

    @property
    def sample_rate(self) -> int:
        return self.left.sample_rate

    def rt60(self) -> Optional[float]:
        vals = [v for v in (self.rt60_left, self.rt60_right) if v is not None]
        return float(np.mean(vals)) if vals else None


def source_azimuth(pose: Pose, src) -> float:
    """Signed horizontal angle from the pose's forward axis to the source.

    Positive angles are to the left (counterclockwise).
    """
    to = np.asarray(src, dtype=np.float64)[:2] - np.asarray(pose.position)[:2]
    fwd = pose.forward()[:2]
    return math.atan2(fwd[0] * to[1] - fwd[1] * to[0], fwd[0] * to[0] + fwd[1] * to[1])


def source_distance(pose: Pose, src) -> float:
    return float(np.linalg.norm(
        np.asarray(src, dtype=np.float64) - np.asarray(pose.position)))


def image_source_ir(room: RoomSpec, src, ear, max_order: int = 40,
                    ir_len: float = 0.5,
                    sample_rate: int = DEFAULT_SAMPLE_RATE,
                    scattering: float = 0.0,
                    air_attenuation: float = 0.0,
                    direction_gain=None) -> Waveform:
    src = np.asarray(src, dtype=np.float64)
    ear = np.asarray(ear, dtype=np.float64)
    if np.array_equal(src, ear):
        raise ValueError("coincident source/receiver")
    if max_order < 0:
        raise ValueError("max_order must be >= 0")
    if not 0.0 <= scattering < 1.0:
        raise ValueError("scattering must lie in [0, 1)")
    c = room.speed_of_sound
    n = int(round(ir_len * sample_rate))
    if n <= 0:
        raise ValueError("ir_len too short for the sample rate")
    reach = (n + 1) * c / sample_rate  # images beyond this cannot land in the IR
    # specular retention per bounce: wall reflection times (1 - scattering)
    beta = np.sqrt((1.0 - room.absorption_vector()) * (1.0 - scattering))
    dims = np.asarray(room.dims)

    ir = np.zeros(n)
    axis_cache = {}
    for axis in range(3):
        for u in (0, 1):
            axis_cache[(axis, u)] = _axis_images(
                dims[axis], src[axis], ear[axis], u,
                beta[2 * axis], beta[2 * axis + 1], reach, max_order)

    for ux in (0, 1):
        for uy in (0, 1):
            for uz in (0, 1):
                cx, ox, ax = axis_cache[(0, ux)]
                cy, oy, ay = axis_cache[(1, uy)]
                cz, oz, az = axis_cache[(2, uz)]
                if not (cx.size and cy.size and cz.size):
                    continue
                order = (ox[:, None, None] + oy[None, :, None] + oz[None, None, :])
                keep = order <= max_order
                if not np.any(keep):
                    continue
                d2 = (cx[:, None, None] ** 2 + cy[None, :, None] ** 2
                      + cz[None, None, :] ** 2)
                amp = (ax[:, None, None] * ay[None, :, None] * az[None, None, :])
                dist = np.sqrt(d2[keep])
                amp = amp[keep] / np.maximum(dist, MIN_DISTANCE)
                if air_attenuation > 0.0:
                    amp = amp * np.exp(-air_attenuation * dist)
                if direction_gain is not None:
                    dx = np.broadcast_to(cx[:, None, None], keep.shape)[keep]
                    dy = np.broadcast_to(cy[None, :, None], keep.shape)[keep]
                    amp = amp * direction_gain(dx, dy)
                delay = dist * (sample_rate / c)
                i0 = np.floor(delay).astype(np.int64)
                frac = delay - i0
                valid = i0 + 1 < n
                i0, frac, amp = i0[valid], frac[valid], amp[valid]
                if i0.size == 0:
                    continue
                ir += np.bincount(i0, weights=amp * (1.0 - frac), minlength=n)
                ir += np.bincount(i0 + 1, weights=amp * frac, minlength=n)
    return Waveform(ir, sample_rate)


def _axis_images(length, s, r, u, beta_lo, beta_hi, reach, max_order):
    """Relative coordinates, bounce counts, and amplitudes along one axis."""
    base = (1.0 - 2.0 * u) * s - r
    l_min = math.floor((-reach - base) / (2.0 * length))
    l_max = math.ceil((reach - base) / (2.0 * length))
    l = np.arange(l_min, l_max + 1, dtype=np.int64)
    hits_lo = np.abs(l - u)
    hits_hi = np.abs(l)
    order = hits_lo + hits_hi
    keep = order <= max_order
    l, hits_lo, hits_hi, order = l[keep], hits_lo[keep], hits_hi[keep], order[keep]
    coords = base + 2.0 * length * l
    amps = beta_lo ** hits_lo * beta_hi ** hits_hi
    return coords, order, amps


def diffuse_tail(room: RoomSpec, distance: float, n: int, sample_rate: int,
                 air_attenuation: float, seed: int) -> np.ndarray:
    """Stochastic late-reverberation tail.

    Gaussian noise with mean-square envelope sigma^2(t) = A exp(-mu (t - t0))
    where mu is the Eyring energy decay rate (c S (-ln(1-a)) / 4V) plus the
    air-absorption term 2 gamma c, and A satisfies the classical steady-state
    balance against the direct-path energy 1/distance^2:
        integral sigma^2 dt = (1/d^2) * 16 pi d^2 (1-a) / (S a) = 16 pi (1-a)/(S a).
    Onset ramps in linearly over one mean free path after the direct arrival.
    """
    a_mean = room.mean_absorption()
    if a_mean >= 1.0 or a_mean <= 0.0 or n <= 0:
        return np.zeros(max(n, 0))
    c = room.speed_of_sound
    surf = float(np.sum(room.surface_areas()))
    vol = room.volume()
    mu = (c * surf / (4.0 * vol)) * (-math.log(1.0 - a_mean)) \
        + 2.0 * air_attenuation * c
    total_energy = 16.0 * math.pi * (1.0 - a_mean) / (surf * a_mean)
    sigma0_sq = total_energy * mu  # continuous-time peak of sigma^2

    t = np.arange(n) / sample_rate
    t_direct = distance / c
    t_mfp = 4.0 * vol / (surf * c)
    ramp = np.clip((t - t_direct) / max(t_mfp, 1e-6), 0.0, 1.0)
    env_sq = sigma0_sq * np.exp(-mu * np.maximum(t - t_direct - t_mfp, 0.0)) * ramp ** 2
    rng = np.random.default_rng(seed)
    return rng.standard_normal(n) * np.sqrt(env_sq / sample_rate)


def _tail_seed(room: RoomSpec, src, pose: Pose, base_seed: int) -> int:
    """Deterministic, mirror-invariant seed for the shared tail noise."""
    d = source_distance(pose, src)
    key = (round(float(room.dims[0]), 6), round(float(room.dims[1]), 6),
           round(float(room.dims[2]), 6), round(room.mean_absorption(), 6),
           round(d, 6), int(base_seed))
    return zlib.crc32(repr(key).encode("utf-8"))


def binaural_rir(room: RoomSpec, src, pose: Pose,
                 cfg: RirConfig = RirConfig()) -> BinauralRIR:
    src = np.asarray(src, dtype=np.float64)
    if not room.contains(src):
        raise ValueError(f"source {tuple(src)} outside room {room.dims}")
    left_ear, right_ear = pose.ear_positions()
    for name, ear in (("left", left_ear), ("right", right_ear)):
        if not room.contains(ear):
            raise ValueError(f"{name} ear {tuple(ear)} outside room {room.dims}")

    irs = {}
    for name, ear in (("left", left_ear), ("right", right_ear)):
        gain = None
        if cfg.head_shadow and cfg.head_shadow_gain < 1.0:
            gain = _head_shadow_gain(pose.yaw, name, cfg.head_shadow_gain,
                                     math.radians(cfg.head_shadow_threshold_deg))
        irs[name] = image_source_ir(
            room, src, ear, cfg.max_order, cfg.ir_seconds, cfg.sample_rate,
            scattering=cfg.scattering, air_attenuation=cfg.air_attenuation,
            direction_gain=gain)

    if cfg.diffuse_tail:
        tail = diffuse_tail(room, source_distance(pose, src),
                            len(irs["left"]), cfg.sample_rate,
                            cfg.air_attenuation,
                            _tail_seed(room, src, pose, cfg.tail_seed))
        # identical in both ears: cancels in the difference channel
        irs = {k: Waveform(v.samples + tail, cfg.sample_rate) for k, v in irs.items()}

    return BinauralRIR(
        left=irs["left"], right=irs["right"],
        rt60_left=_maybe_rt60(irs["left"]), rt60_right=_maybe_rt60(irs["right"]))


def _head_shadow_gain(yaw: float, ear: str, gain: float, threshold: float):
    """Scalar attenuation for arrivals from the ear's contralateral hemisphere.

    Arrival azimuth is measured from the head's forward axis (positive =
    left); the left ear shadows arrivals beyond -threshold to the right and
    vice versa.
    """
    fwd_x, fwd_y = math.cos(yaw), math.sin(yaw)
    sign = 1.0 if ear == "right" else -1.0

    def direction_gain(dx, dy):
        az = np.arctan2(fwd_x * dy - fwd_y * dx, fwd_x * dx + fwd_y * dy)
        return np.where(sign * az > threshold, gain, 1.0)

    return direction_gain


def _maybe_rt60(ir: Waveform) -> Optional[float]:
    try:
        return schroeder_rt60(ir)
    except (NoEnergyError, InsufficientDecayError):
        return None


def eyring_rt60(room: RoomSpec) -> float:
    """Closed-form RT60: -0.161 V / (S ln(1 - mean_absorption)).

    Returns 0.0 for mean absorption >= 1 (anechoic); raises if <= 0.
    """
    mean_abs = room.mean_absorption()
    if mean_abs <= 0.0:
        raise ValueError("mean absorption must be positive")
    if mean_abs >= 1.0:
        return 0.0  # anechoic
    total = float(np.sum(room.surface_areas()))
    return float(-0.161 * room.volume() / (total * math.log(1.0 - mean_abs)))
