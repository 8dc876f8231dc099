"""Line-delimited manifest plus per-record media files.

Layout under the corpus directory:

    manifest.jsonl           one JSON object per record
    audio/<id>.wav           stereo PCM16 clip
    obs/<id>.bnt             uint8 tensor, frames x 32 x 64 x 3
    rir/<id>_w<k>.wav        float32 stereo waypoint RIRs

Records are quantized at creation, so read(write(records)) reproduces every
field exactly.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterator

import numpy as np

from .. import tensorfile, wavio
from ..dsp.types import BinauralClip, Waveform
from ..room.shoebox import BinauralRIR
from .types import ObservationImage, SampleRecord, SceneSpec

MANIFEST_NAME = "manifest.jsonl"


def write_manifest(records: list[SampleRecord], out_dir,
                   splits: list[str] | None = None) -> Path:
    out = Path(out_dir)
    for sub in ("audio", "obs", "rir"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    if splits is None:
        splits = [r.metadata.get("split", "train") for r in records]
    if len(splits) != len(records):
        raise ValueError("one split label per record required")

    lines = []
    for rec, split in zip(records, splits):
        rid = rec.scene.scene_id
        audio_rel = f"audio/{rid}.wav"
        obs_rel = f"obs/{rid}.bnt"
        wavio.write_wav(out / audio_rel, rec.clip.as_array(),
                        rec.clip.sample_rate, fmt="pcm16")
        stack = np.stack([np.round(img.pixels * 255.0).astype(np.uint8)
                          for _, img in rec.observations])
        tensorfile.save_tensor(out / obs_rel, stack)
        rir_rels = []
        for k, rir in enumerate(rec.rir_per_waypoint):
            rel = f"rir/{rid}_w{k}.wav"
            wavio.write_wav(out / rel,
                            np.stack([rir.left.samples, rir.right.samples], axis=1),
                            rir.sample_rate, fmt="float32")
            rir_rels.append(rel)
        lines.append(json.dumps({
            "id": rid,
            "split": split,
            "room_id": rec.scene.room_id,
            "audio": audio_rel,
            "obs": obs_rel,
            "obs_fps": _obs_fps(rec),
            "rirs": rir_rels,
            "rir_rt60_left": [r.rt60_left for r in rec.rir_per_waypoint],
            "rir_rt60_right": [r.rt60_right for r in rec.rir_per_waypoint],
            "rt60": rec.rt60,
            "scene": rec.scene.to_json(),
            "metadata": rec.metadata,
        }, sort_keys=True))
    path = out / MANIFEST_NAME
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _obs_fps(rec: SampleRecord) -> float:
    times = [t for t, _ in rec.observations]
    if len(times) < 2:
        return 0.0
    return round(1.0 / (times[1] - times[0]), 9)


class Manifest:
    """Parsed manifest with lazy record loading."""

    def __init__(self, root: Path, entries: list[dict[str, Any]]):
        self.root = Path(root)
        self.entries = entries

    def __len__(self) -> int:
        return len(self.entries)

    def split(self, name: str) -> "Manifest":
        return Manifest(self.root, [e for e in self.entries if e["split"] == name])

    def splits(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for e in self.entries:
            out[e["split"]] = out.get(e["split"], 0) + 1
        return out

    def load(self, index: int) -> SampleRecord:
        return self._record(self.entries[index])

    def __iter__(self) -> Iterator[SampleRecord]:
        for entry in self.entries:
            yield self._record(entry)

    def _record(self, entry: dict[str, Any]) -> SampleRecord:
        scene = SceneSpec.from_json(entry["scene"])
        audio_path = self.root / entry["audio"]
        obs_path = self.root / entry["obs"]
        for p in [audio_path, obs_path] + [self.root / r for r in entry["rirs"]]:
            if not p.exists():
                raise FileNotFoundError(f"manifest references missing file: {p}")
        audio, sr = wavio.read_wav(audio_path)
        clip = BinauralClip(Waveform(audio[:, 0], sr), Waveform(audio[:, 1], sr))
        stack = tensorfile.load_tensor(obs_path)
        fps = entry["obs_fps"]
        observations = [(i / fps, ObservationImage(frame.astype(np.float64) / 255.0))
                        for i, frame in enumerate(stack)]
        rirs = []
        for rel, rl, rr in zip(entry["rirs"], entry["rir_rt60_left"],
                               entry["rir_rt60_right"]):
            data, rsr = wavio.read_wav(self.root / rel)
            rirs.append(BinauralRIR(Waveform(data[:, 0], rsr),
                                    Waveform(data[:, 1], rsr), rl, rr))
        return SampleRecord(
            scene=scene, clip=clip, observations=observations,
            rir_per_waypoint=rirs, rt60=entry["rt60"],
            metadata=entry["metadata"])


def read_manifest(path) -> Manifest:
    root = Path(path)
    manifest_path = root / MANIFEST_NAME if root.is_dir() else root
    if not manifest_path.exists():
        raise FileNotFoundError(f"no manifest at {manifest_path}")
    entries = []
    with open(manifest_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                entries.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValueError(
                    f"{manifest_path}: parse error on line {lineno}: {exc}") from exc
    return Manifest(manifest_path.parent, entries)


def verify_split(manifest: Manifest, mode: str) -> None:
    """Exhaustive disjointness check for the train/val/test partition."""
    by_split: dict[str, list[dict]] = {}
    for e in manifest.entries:
        by_split.setdefault(e["split"], []).append(e)
    ids = [e["id"] for e in manifest.entries]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate record ids")
    if mode == "scene":
        rooms = {s: {e["room_id"] for e in es} for s, es in by_split.items()}
        names = sorted(rooms)
        for i, a in enumerate(names):
            for b in names[i + 1:]:
                shared = rooms[a] & rooms[b]
                if shared:
                    raise ValueError(
                        f"scene-split violation: rooms {sorted(shared)} shared "
                        f"between {a} and {b}")
    elif mode == "position":
        seen: dict[tuple, str] = {}
        for e in manifest.entries:
            key = (e["room_id"], tuple(e["scene"]["source_position"]),
                   tuple((w["t"], tuple(w["position"]), w["yaw"])
                         for w in e["scene"]["trajectory"]))
            if key in seen:
                raise ValueError(
                    f"position-split violation: {e['id']} duplicates {seen[key]}")
            seen[key] = e["id"]
    else:
        raise ValueError(f"unknown split mode {mode!r}")
