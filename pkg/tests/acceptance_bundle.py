"""Shared end-to-end artifacts for the heavy acceptance criteria (6-10).

Builds two 200/30/30 corpora (position- and scene-split), trains the full
training grid (full model, four ablation rows, audio-only) over three seeds
plus a dedicated coherence run, evaluates everything on the test splits, and
runs the RT60 probe. Takes roughly 45-60 minutes on a small CPU box; the
result dictionary is also written to acceptance_summary.json next to the
artifacts for inspection.
"""

import json
import time
from pathlib import Path

import numpy as np

from binauralize.evaluation import evaluate
from binauralize.evaluation.probes import coherence_accuracy, rt60_probe
from binauralize.evaluation.protocol import (
    ProtocolConfig,
    TrainJob,
    generate_protocol_corpora,
    median_rows,
    ordering_jobs,
    run_training_grid,
)
from binauralize.nn.checkpoint import load_checkpoint


def build_bundle(root) -> dict:
    root = Path(root)
    cfg = ProtocolConfig()
    t_start = time.time()
    corpora = generate_protocol_corpora(cfg, root)

    jobs = ordering_jobs(cfg, corpora)
    jobs.append(TrainJob("coherence", cfg.seeds[0], corpora["position"],
                         epochs=70, skip_eval=True))
    t_grid = time.time()
    results = run_training_grid(cfg, jobs, root / "runs")
    grid_seconds = time.time() - t_grid

    med_pos = median_rows(results, corpora["position"], "stft")
    med_pos_env = median_rows(results, corpora["position"], "env")
    med_scene = median_rows(results, corpora["scene"], "stft")

    mono_pos = evaluate(corpora["position"], {"mono-mono": None}).rows["mono-mono"]

    coh_name = f"coherence-s{cfg.seeds[0]}-corpus-position"
    params, arch, _ = load_checkpoint(results[coh_name]["checkpoint"])
    coh_acc = coherence_accuracy(corpora["position"], params, arch)

    probe = rt60_probe(corpora["position"], seed=0, detailed=True)
    probe_shuffled = rt60_probe(corpora["position"], seed=0,
                                shuffle_labels=True)

    bundle = {
        "corpora": corpora,
        "results": {k: {kk: vv for kk, vv in v.items() if kk != "rows"}
                    | {"rows": v["rows"]} for k, v in results.items()},
        "medians_position": med_pos,
        "medians_position_env": med_pos_env,
        "median_scene_full": med_scene["full"],
        "mono_mono_position": mono_pos,
        "coherence_accuracy": coh_acc,
        "probe_accuracy": probe["accuracy"],
        "probe_chance": probe["chance"],
        "probe_shuffled": probe_shuffled,
        "probe_train_fractions": probe["train_fractions"],
        "grid_seconds": grid_seconds,
        "total_seconds": time.time() - t_start,
    }
    (root / "acceptance_summary.json").write_text(
        json.dumps(_jsonable(bundle), indent=2, sort_keys=True))
    return bundle


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return float(obj)
    return obj
