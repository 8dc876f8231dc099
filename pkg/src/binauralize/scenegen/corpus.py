"""Whole-corpus generation with scene-split or position-split partitioning."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import SceneGenConfig
from .manifest import Manifest, read_manifest, verify_split, write_manifest
from .sample import sample_room, sample_scene
from .sources import anechoic_bank
from .synthesize import synthesize_record
from .types import SampleRecord, SceneSpec

CONFIGS_PER_ROOM = 4  # position-split records sharing one room

_worker_cfg: SceneGenConfig | None = None
_worker_bank = None


def generate_corpus(seed: int, out_dir, n_train: int = 200, n_val: int = 30,
                    n_test: int = 30, split_mode: str = "scene",
                    cfg: SceneGenConfig = SceneGenConfig(),
                    jobs: int = 1) -> Manifest:
    """Deterministic function of (seed, cfg): same inputs, identical corpus.

    Record synthesis is embarrassingly parallel (each record is a pure
    function of its plan), so results do not depend on jobs or scheduling.
    """
    n_total = n_train + n_val + n_test
    labels = ["train"] * n_train + ["val"] * n_val + ["test"] * n_test

    plans = []
    if split_mode == "scene":
        for i in range(n_total):
            plans.append((seed, i, None, labels[i]))
    elif split_mode == "position":
        n_rooms = int(np.ceil(n_total / CONFIGS_PER_ROOM))
        # config-major order: every room contributes to train before any room
        # reaches val/test, so val/test rooms are seen during training while
        # (room, source, trajectory) triples stay disjoint
        order = [(r, c) for c in range(CONFIGS_PER_ROOM) for r in range(n_rooms)]
        for i, (r, _) in enumerate(order[:n_total]):
            plans.append((seed, i, r, labels[i]))
    else:
        raise ValueError(f"unknown split mode {split_mode!r}")

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker,
                                 initargs=(cfg, seed)) as pool:
            records = list(pool.map(_build_record, plans, chunksize=2))
    else:
        _init_worker(cfg, seed)
        records = [_build_record(p) for p in plans]

    write_manifest(records, out_dir, splits=labels)
    manifest = read_manifest(Path(out_dir))
    verify_split(manifest, split_mode)
    return manifest


def _init_worker(cfg: SceneGenConfig, seed: int) -> None:
    global _worker_cfg, _worker_bank
    _worker_cfg = cfg
    _worker_bank = anechoic_bank(cfg, seed=seed)


def _build_record(plan) -> SampleRecord:
    seed, index, room_index, _ = plan
    scene = _plan_scene(seed, index, room_index, _worker_cfg)
    return synthesize_record(scene, _worker_bank[scene.source_clip_id], _worker_cfg)


def _plan_scene(seed: int, index: int, room_index, cfg: SceneGenConfig) -> SceneSpec:
    if room_index is None:
        return sample_scene(_scene_seed(seed, index), cfg,
                            scene_id=f"scene-{index:05d}")
    room_rng = np.random.default_rng(np.random.SeedSequence([0x400c, seed, room_index]))
    room = sample_room(room_rng, cfg)
    return sample_scene(_scene_seed(seed, index), cfg,
                        scene_id=f"scene-{index:05d}", room=room,
                        room_id=f"room-{room_index:05d}")


def _scene_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([0x5eed, seed, index]).generate_state(1)[0])
