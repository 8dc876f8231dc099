"""Binaural record synthesis.

Audio uses the waypoint RIR held fixed within each interval; segment renders
are joined with an equal-power crossfade, while the observation stream is
interpolated continuously (the intra-interval translation shows up visually
but not acoustically). Records are quantized at creation (PCM16 audio grid,
8-bit observation pixels, float32 RIRs) so manifest round trips are exact.
"""

from __future__ import annotations

import numpy as np

from .. import wavio
from ..dsp.rt60 import InsufficientDecayError, NoEnergyError, schroeder_rt60
from ..dsp.types import BinauralClip, Waveform
from ..room.convolve import fft_convolve
from ..room.shoebox import BinauralRIR, RirConfig, binaural_rir, eyring_rt60
from .config import SceneGenConfig
from .render import render_observation
from .sample import azimuth_at, pose_at
from .types import ObservationImage, SampleRecord, SceneSpec


def rir_config_for(scene: SceneSpec, cfg: SceneGenConfig) -> RirConfig:
    """Per-scene RIR settings; the IR length adapts to the predicted decay."""
    try:
        target = eyring_rt60(scene.room)
    except ValueError:
        target = cfg.ir_seconds_bounds[1]
    lo, hi = cfg.ir_seconds_bounds
    ir_seconds = float(np.clip(1.15 * target + 0.05, lo, hi))
    return RirConfig(
        max_order=cfg.max_order, ir_seconds=ir_seconds,
        sample_rate=cfg.sample_rate,
        head_shadow_gain=cfg.head_shadow_gain,
        head_shadow_threshold_deg=cfg.head_shadow_threshold_deg,
        scattering=cfg.scattering, air_attenuation=cfg.air_attenuation,
        diffuse_tail=cfg.diffuse_tail)


def synthesize_record(scene: SceneSpec, source: Waveform,
                      cfg: SceneGenConfig = SceneGenConfig()) -> SampleRecord:
    if source.sample_rate != cfg.sample_rate:
        raise ValueError("source clip sample rate does not match config")
    if np.max(np.abs(source.samples)) < 1e-8:
        raise ValueError("silent source clip")

    sr = cfg.sample_rate
    n_total = int(round(scene.duration * sr))
    src = source.samples
    if src.size < n_total:  # loop short clips
        reps = int(np.ceil(n_total / src.size))
        src = np.tile(src, reps)
    src = src[:n_total]

    rir_cfg = rir_config_for(scene, cfg)
    waypoints = scene.trajectory[:-1]  # last entry only ends the interpolation
    rirs = [binaural_rir(scene.room, scene.source_position, pose, rir_cfg)
            for _, pose in waypoints]
    rirs = [_quantize_rir(r) for r in rirs]

    audio = _render_segments(src, rirs, scene, cfg)
    clip = BinauralClip(
        Waveform(wavio.quantize_pcm16(audio[:, 0]) / 32768.0, sr),
        Waveform(wavio.quantize_pcm16(audio[:, 1]) / 32768.0, sr))

    n_frames = int(round(scene.duration * cfg.fps))
    observations = []
    azimuths, distances = [], []
    for i in range(n_frames):
        t = i / cfg.fps
        pose = pose_at(scene, t)
        img = render_observation(scene, pose, cfg)
        observations.append((t, _quantize_obs(img)))
        azimuths.append(float(np.degrees(azimuth_at(scene, t))))
        distances.append(float(np.linalg.norm(
            np.asarray(scene.source_position) - np.asarray(pose.position))))

    rt60s = [r.rt60() for r in rirs]
    valid = [v for v in rt60s if v is not None]
    anechoic = scene.room.mean_absorption() >= 1.0
    rt60 = 0.0 if anechoic else (float(np.mean(valid)) if valid else 0.0)

    return SampleRecord(
        scene=scene, clip=clip, observations=observations,
        rir_per_waypoint=rirs, rt60=rt60,
        metadata={
            "scene_id": scene.scene_id,
            "room_id": scene.room_id,
            "azimuth_deg": azimuths,
            "distance_m": distances,
            "rir_rt60": [v if v is not None else 0.0 for v in rt60s],
            "anechoic": anechoic,
        })


def _render_segments(src: np.ndarray, rirs: list[BinauralRIR],
                     scene: SceneSpec, cfg: SceneGenConfig) -> np.ndarray:
    """Per-waypoint convolution joined by an equal-power crossfade."""
    sr = cfg.sample_rate
    n_total = src.size
    n_seg = len(rirs)
    seg_len = n_total // n_seg
    xf = int(round(cfg.crossfade * sr))
    ir_len = len(rirs[0].left)

    out = np.zeros((n_total, 2))
    for k, rir in enumerate(rirs):
        lo = k * seg_len
        hi = n_total if k == n_seg - 1 else (k + 1) * seg_len
        # the convolution needs ir_len of source history to be exact, and the
        # render must extend half a crossfade past each boundary
        ext_lo = max(lo - xf // 2 - ir_len, 0)
        ext_hi = min(hi + xf - xf // 2, n_total)
        piece = src[ext_lo:ext_hi]
        start = max(lo - xf // 2, 0)
        warm = start - ext_lo  # samples of convolution warm-up to discard
        for ch, ir in enumerate((rir.left.samples, rir.right.samples)):
            seg = fft_convolve(piece, ir)[:piece.size]
            seg = seg[warm:]
            weights = _segment_weights(start, start + seg.size, lo, hi, xf,
                                       n_total, k, n_seg)
            out[start:start + seg.size, ch] += seg * weights
    return out


def _segment_weights(w_lo, w_hi, lo, hi, xf, n_total, k, n_seg):
    """Equal-power weights for one segment over samples [w_lo, w_hi)."""
    idx = np.arange(w_lo, w_hi)
    w = np.ones(idx.size)
    if k > 0:  # fade in around lo
        ramp = (idx - (lo - xf // 2)) / max(xf, 1)
        w = np.minimum(w, np.sin(np.clip(ramp, 0.0, 1.0) * np.pi / 2))
    if k < n_seg - 1:  # fade out around hi
        ramp = (idx - (hi - xf // 2)) / max(xf, 1)
        w = np.minimum(w, np.cos(np.clip(ramp, 0.0, 1.0) * np.pi / 2))
    return w


def _quantize_obs(img: ObservationImage) -> ObservationImage:
    return ObservationImage(np.round(img.pixels * 255.0) / 255.0)


def _quantize_rir(rir: BinauralRIR) -> BinauralRIR:
    left = Waveform(rir.left.samples.astype(np.float32).astype(np.float64),
                    rir.sample_rate)
    right = Waveform(rir.right.samples.astype(np.float32).astype(np.float64),
                     rir.sample_rate)

    def safe(w):
        try:
            return schroeder_rt60(w)
        except (NoEnergyError, InsufficientDecayError):
            return None

    return BinauralRIR(left, right, safe(left), safe(right))
