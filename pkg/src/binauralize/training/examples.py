"""Training-example assembly from corpus records.

Records are cached in their quantized storage forms (int16 audio, uint8
observations) so a full desk corpus fits in memory; windows are converted
and transformed on demand.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..dsp.stft import stft
from ..dsp.types import StftParams, Waveform
from ..scenegen.manifest import Manifest

RIR_SPEC_FRAMES = 64


@dataclass
class CompactRecord:
    scene_id: str
    room_id: str
    audio: np.ndarray        # (n, 2) int16
    obs: np.ndarray          # (T, H, W, 3) uint8
    fps: float
    sample_rate: int
    duration: float
    x_gt: np.ndarray         # (n_waypoints, 64, bins, 2) float32 magnitudes
    rt60_way: np.ndarray     # (n_waypoints,) float, NaN when degenerate
    rt60: float
    azimuth_deg: np.ndarray  # (T,)

    def observation(self, t: float) -> np.ndarray:
        """Nearest stored frame as (H, W, 3) float in [0, 1]."""
        idx = int(np.clip(round(t * self.fps), 0, self.obs.shape[0] - 1))
        return self.obs[idx].astype(np.float64) / 255.0

    def window(self, t: float, n_samples: int) -> np.ndarray:
        lo = int(round(t * self.sample_rate))
        seg = self.audio[lo:lo + n_samples]
        return seg.astype(np.float64) / 32768.0

    def waypoint_index(self, t: float) -> int:
        n = self.x_gt.shape[0]
        seg = self.duration / n
        return min(int(t / seg), n - 1)


def load_training_cache(manifest: Manifest,
                        p: StftParams = StftParams()) -> list[CompactRecord]:
    records = []
    for entry, rec in zip(manifest.entries, manifest):
        n_way = len(rec.rir_per_waypoint)
        x_gt = np.stack([
            np.stack([_rir_magnitude(r.left.samples, p),
                      _rir_magnitude(r.right.samples, p)], axis=-1)
            for r in rec.rir_per_waypoint
        ]).astype(np.float32)
        rt60_way = np.array([
            np.nan if r.rt60_left is None and r.rt60_right is None
            else np.nanmean([v for v in (r.rt60_left, r.rt60_right) if v is not None])
            for r in rec.rir_per_waypoint
        ])
        records.append(CompactRecord(
            scene_id=rec.scene.scene_id,
            room_id=rec.scene.room_id,
            audio=np.round(rec.clip.as_array() * 32768.0).astype(np.int16),
            obs=np.stack([np.round(img.pixels * 255.0).astype(np.uint8)
                          for _, img in rec.observations]),
            fps=len(rec.observations) / rec.scene.duration,
            sample_rate=rec.clip.sample_rate,
            duration=rec.scene.duration,
            x_gt=x_gt,
            rt60_way=rt60_way,
            rt60=rec.rt60,
            azimuth_deg=np.array(rec.metadata["azimuth_deg"]),
        ))
    return records


def _rir_magnitude(ir: np.ndarray, p: StftParams,
                   frames: int = RIR_SPEC_FRAMES) -> np.ndarray:
    """Magnitude STFT of an IR padded/truncated to exactly `frames` frames."""
    need = p.window_size + (frames - 1) * p.hop
    buf = np.zeros(need)
    buf[:min(len(ir), need)] = ir[:need]
    return np.abs(stft(Waveform(buf, 16000), p).bins)


@dataclass
class TrainExample:
    record: CompactRecord
    t: float          # window start, seconds
    t_obs: float      # window center (observation lookup time)
    t_obs_delta: float
    flipped: bool
    waypoint: int


def make_example(record: CompactRecord, rng: np.random.Generator,
                 window_seconds: float = 0.63, delta_max: float = 1.0,
                 flip_prob: float = 0.5) -> Optional[TrainExample]:
    if record.duration < window_seconds + 2.0:
        warnings.warn(f"record {record.scene_id} too short for training window")
        return None
    t = rng.uniform(1.0, record.duration - window_seconds - 1.0)
    t_obs = t + window_seconds / 2.0
    delta = rng.uniform(-delta_max, delta_max)
    t_obs_delta = float(np.clip(t_obs + delta, 0.0, record.duration - 1e-6))
    flipped = bool(rng.random() < flip_prob)
    return TrainExample(record, t, t_obs, t_obs_delta, flipped,
                        record.waypoint_index(t_obs))


@dataclass
class Batch:
    mono_spec: np.ndarray   # complex (N, frames, bins)
    gt_d: np.ndarray
    gt_l: np.ndarray
    gt_r: np.ndarray
    obs_t: np.ndarray       # (N, H, W, 3)
    obs_delta: np.ndarray
    coh_left: np.ndarray    # complex, channel order after optional flip
    coh_right: np.ndarray
    flipped: np.ndarray     # (N,) bool
    x_gt: np.ndarray        # (N, 64, bins, 2)
    rt60_gt: np.ndarray     # (N,)

    def __len__(self):
        return self.mono_spec.shape[0]


def build_batch(examples: list[TrainExample],
                p: StftParams = StftParams(), dtype=np.float64) -> Batch:
    cdtype = np.complex64 if dtype == np.float32 else np.complex128
    n_samples = _window_samples(p)
    mono, gds, gls, grs = [], [], [], []
    obs_t, obs_d, cl, cr, flips, xg, rt = [], [], [], [], [], [], []
    for ex in examples:
        seg = ex.record.window(ex.t, n_samples)
        sr = ex.record.sample_rate
        a_l = stft(Waveform(seg[:, 0], sr), p).bins
        a_r = stft(Waveform(seg[:, 1], sr), p).bins
        mono.append((a_l + a_r) / 2.0)
        gds.append(a_l - a_r)
        gls.append(a_l)
        grs.append(a_r)
        obs_t.append(ex.record.observation(ex.t_obs))
        obs_d.append(ex.record.observation(ex.t_obs_delta))
        if ex.flipped:
            cl.append(a_r)
            cr.append(a_l)
        else:
            cl.append(a_l)
            cr.append(a_r)
        flips.append(ex.flipped)
        xg.append(ex.record.x_gt[ex.waypoint].astype(np.float64))
        rt.append(ex.record.rt60_way[ex.waypoint])
    return Batch(
        mono_spec=np.stack(mono).astype(cdtype),
        gt_d=np.stack(gds).astype(cdtype), gt_l=np.stack(gls).astype(cdtype),
        gt_r=np.stack(grs).astype(cdtype),
        obs_t=np.stack(obs_t).astype(dtype), obs_delta=np.stack(obs_d).astype(dtype),
        coh_left=np.stack(cl).astype(cdtype), coh_right=np.stack(cr).astype(cdtype),
        flipped=np.array(flips), x_gt=np.stack(xg).astype(dtype),
        rt60_gt=np.array(rt))


def _window_samples(p: StftParams, window_seconds: float = 0.63,
                    sample_rate: int = 16000) -> int:
    # exactly 61 frames at the default 512/400/160 parameters
    return int(window_seconds * sample_rate)
