"""Acceptance suite: one test per criterion, each printing a PASS line.

Criteria 7-10 share one end-to-end artifact bundle (two corpora, the full
training grid over three seeds, a dedicated coherence run, and the RT60
probe) built once per session; expect roughly 45-60 minutes for the bundle
on a small CPU box. The remaining criteria are direct property checks.
"""

import json
import math
import os
import time

import numpy as np
import pytest

from binauralize.dsp import (
    StftParams,
    Waveform,
    istft,
    stft,
    stft_distance,
    schroeder_rt60,
    valid_interior,
)
from binauralize.room import Pose, RirConfig, RoomSpec, binaural_rir, eyring_rt60

P = StftParams()
SR = 16000


def _report(criterion: str, passed: bool, detail: str = ""):
    status = "PASS" if passed else "FAIL"
    print(f"[{status}] criterion {criterion}: {detail}")
    assert passed, f"criterion {criterion}: {detail}"


# --------------------------------------------------------------------------
# criterion 1: DSP round trip
# --------------------------------------------------------------------------

def test_criterion_1_dsp_round_trip():
    rng_master = np.random.default_rng(0xC1)
    t0 = time.time()
    worst = 0.0
    for _ in range(100):
        x = rng_master.standard_normal(SR)
        w = Waveform(x, SR)
        r = istft(stft(w, P))
        lo, hi = valid_interior(P.n_frames(len(w)), P)
        err = (np.linalg.norm(r.samples[lo:hi] - x[lo:hi])
               / np.linalg.norm(x[lo:hi]))
        worst = max(worst, err)
    elapsed = time.time() - t0
    _report("1 (DSP round trip)", worst < 1e-6 and elapsed < 10.0,
            f"worst rel L2 {worst:.2e} over 100 clips in {elapsed:.1f}s")


# --------------------------------------------------------------------------
# criterion 2: gradient suite
# --------------------------------------------------------------------------

def test_criterion_2_gradient_suite():
    from binauralize.nn.model import REDUCED_ARCH, init_params, param_count
    from binauralize.training.gradcheck import run_gradcheck

    n_params = param_count(init_params(REDUCED_ARCH))
    t0 = time.time()
    report = run_gradcheck(seed=0)
    elapsed = time.time() - t0
    worst = max(report.values())
    _report("2 (gradient suite)",
            worst < 1e-3 and elapsed < 120.0 and n_params <= 500,
            f"max rel err {worst:.2e} on a {n_params}-parameter model "
            f"in {elapsed:.1f}s; per-term {dict((k, round(v, 6)) for k, v in report.items())}")


# --------------------------------------------------------------------------
# criterion 3: RT60 oracle
# --------------------------------------------------------------------------

def test_criterion_3_rt60_oracle():
    sr = 48000  # dense realization; the estimator is rate-agnostic
    worst = 0.0
    for rt60 in (0.2, 0.5, 1.0):
        for seed in range(10):
            rng = np.random.default_rng(np.random.SeedSequence([0xC3, seed]))
            n = int(sr * max(0.5, rt60 * 1.2))
            t = np.arange(n) / sr
            ir = rng.standard_normal(n) * np.exp(-t * np.log(1e3) / rt60)
            est = schroeder_rt60(Waveform(ir, sr))
            worst = max(worst, abs(est - rt60) / rt60)
    _report("3 (RT60 oracle)", worst < 0.05,
            f"worst error {worst*100:.2f}% over 3 targets x 10 seeds")


# --------------------------------------------------------------------------
# criterion 4: simulator vs Eyring
# --------------------------------------------------------------------------

def test_criterion_4_simulator_vs_eyring():
    rng = np.random.default_rng(0xC4)
    worst = 0.0
    for absorption in (0.2, 0.5):
        for _ in range(10):
            dims = (float(rng.uniform(3, 10)), float(rng.uniform(3, 10)),
                    float(rng.uniform(2.5, 4)))
            room = RoomSpec(dims, absorption=absorption)
            target = eyring_rt60(room)
            src = tuple(np.array(dims) * rng.uniform(0.2, 0.45, 3))
            pose = Pose(tuple(np.array(dims) * rng.uniform(0.55, 0.8, 3)),
                        yaw=float(rng.uniform(0, 2 * math.pi)))
            cfg = RirConfig(max_order=60,
                            ir_seconds=float(np.clip(1.3 * target, 0.25, 1.3)))
            rir = binaural_rir(room, src, pose, cfg)
            est = schroeder_rt60(rir.left)
            worst = max(worst, abs(est - target) / target)
    _report("4 (simulator vs Eyring)", worst < 0.30,
            f"worst deviation {worst*100:.1f}% over 20 rooms")


# --------------------------------------------------------------------------
# criterion 5: ITD/ILD correctness
# --------------------------------------------------------------------------

def _xcorr_itd(left, right, sr):
    n = len(left)
    corr = np.correlate(right, left, mode="full")
    lags = np.arange(-n + 1, n)
    k = int(np.argmax(corr))
    if 0 < k < len(corr) - 1:
        y0, y1, y2 = corr[k - 1], corr[k], corr[k + 1]
        denom = y0 - 2 * y1 + y2
        shift = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
    else:
        shift = 0.0
    return (lags[k] + shift) / sr


def test_criterion_5_itd_ild():
    # far-field +-90 degrees: ITD sign and magnitude ear_separation/c +-10%
    room = RoomSpec((60.0, 24.0, 10.0), absorption=1.0)
    pose = Pose((30.0, 12.0, 5.0), yaw=0.0)
    expected = pose.ear_separation / room.speed_of_sound
    ok_itd = True
    details = []
    for az_sign in (1, -1):  # +90 = straight left (+y), -90 = straight right
        src = (30.0, 12.0 + az_sign * 10.0, 5.0)
        rir = binaural_rir(room, src, pose,
                           RirConfig(max_order=0, ir_seconds=0.2))
        itd = _xcorr_itd(rir.left.samples, rir.right.samples, SR)
        details.append(f"az {az_sign*90:+d}: itd {itd*1e6:.0f}us")
        ok_itd &= math.copysign(1, itd) == az_sign
        ok_itd &= abs(abs(itd) - expected) / expected < 0.10

    # ILD sign matches azimuth for all test poses beyond 30 degrees
    rng = np.random.default_rng(0xC5)
    ok_ild = True
    checked = 0
    for _ in range(40):
        dims = (float(rng.uniform(4, 9)), float(rng.uniform(4, 9)),
                float(rng.uniform(2.5, 4)))
        room = RoomSpec(dims, absorption=float(rng.uniform(0.1, 0.6)))
        pos = np.array(dims) * rng.uniform(0.35, 0.65, 3)
        az = math.radians(float(rng.uniform(31, 85)) * (1 if rng.random() < 0.5 else -1))
        dist = float(rng.uniform(1.0, 2.5))
        bearing = float(rng.uniform(0, 2 * math.pi))
        src = (pos[0] + dist * math.cos(bearing),
               pos[1] + dist * math.sin(bearing), pos[2])
        if not room.contains(src, margin=0.3):
            continue
        pose = Pose(tuple(pos), yaw=bearing - az)
        rir = binaural_rir(room, src, pose, RirConfig(
            max_order=40, ir_seconds=0.4))
        ild = (np.sum(rir.left.samples ** 2)
               / max(np.sum(rir.right.samples ** 2), 1e-30))
        ok_ild &= (ild > 1.0) == (az > 0)
        checked += 1
    _report("5 (ITD/ILD)", ok_itd and ok_ild and checked >= 20,
            f"{'; '.join(details)}; ILD sign correct on {checked} poses")


# --------------------------------------------------------------------------
# heavy end-to-end bundle (criteria 6-10 artifacts)
# --------------------------------------------------------------------------

@pytest.fixture(scope="session")
def bundle(tmp_path_factory):
    from acceptance_bundle import build_bundle

    root = tmp_path_factory.mktemp("acceptance")
    return build_bundle(root)


@pytest.mark.slow
def test_criterion_6_mono_mono_identity(bundle):
    from binauralize.evaluation import evaluate
    from binauralize.scenegen import read_manifest

    manifest = read_manifest(bundle["corpora"]["position"])
    report = evaluate(manifest, {"mono-mono": None}, p=P)
    closed = []
    for rec in manifest.split("test"):
        closed.append(np.linalg.norm(stft(rec.clip.difference(), P).bins))
    closed_form = float(np.mean(closed))
    got = report.rows["mono-mono"]["stft"]
    rel = abs(got - closed_form) / closed_form
    _report("6 (Mono-Mono identity)", rel < 1e-6,
            f"evaluated {got:.6f} vs closed form {closed_form:.6f} (rel {rel:.2e})")


@pytest.mark.slow
def test_criterion_7_end_to_end_ordering(bundle):
    med = bundle["medians_position"]
    mono = bundle["mono_mono_position"]
    chain = [
        ("full", med["full"]),
        ("backbone", med["backbone"]),
        ("flipped", med["full+flip"]),
        ("audio-only", med["audio-only"]),
        ("mono-mono", mono["stft"]),
    ]
    ordered = all(a[1] < b[1] for a, b in zip(chain, chain[1:]))
    env_best = bundle["medians_position_env"]["full"] <= min(
        v for k, v in bundle["medians_position_env"].items() if k != "full")
    env_best &= bundle["medians_position_env"]["full"] < bundle[
        "mono_mono_position"]["env"]
    split_ok = bundle["medians_position"]["full"] <= bundle["median_scene_full"]
    runtime_ok = bundle["grid_seconds"] <= 3600.0
    detail = (" < ".join(f"{k}={v:.4f}" for k, v in chain)
              + f"; env full best: {env_best}; position<=scene: {split_ok}"
              + f"; grid {bundle['grid_seconds']:.0f}s")
    _report("7 (end-to-end ordering)",
            ordered and env_best and split_ok and runtime_ok, detail)


@pytest.mark.slow
def test_criterion_8_ablation_monotonicity(bundle):
    med = bundle["medians_position"]
    backbone = med["backbone"]
    ok = True
    details = [f"backbone={backbone:.4f}"]
    for variant in ("ir", "spatial", "geom"):
        ok &= med[variant] <= backbone * 1.02
        details.append(f"{variant}={med[variant]:.4f}")
    rows = {k: med[k] for k in ("full", "backbone", "ir", "spatial", "geom")}
    ok &= min(rows, key=rows.get) == "full"
    details.append(f"full={med['full']:.4f} (best)")
    _report("8 (ablation monotonicity)", ok, "; ".join(details))


@pytest.mark.slow
def test_criterion_9_coherence_accuracy(bundle):
    acc = bundle["coherence_accuracy"]
    _report("9 (coherence task)", acc >= 0.80,
            f"held-out flip-detection accuracy {acc:.3f}")


@pytest.mark.slow
def test_criterion_10_rt60_probe(bundle):
    acc = bundle["probe_accuracy"]
    chance = bundle["probe_chance"]
    control = bundle["probe_shuffled"]
    ok = acc >= 3 * chance and abs(control - chance) <= 0.05
    _report("10 (RT60 probe)", ok,
            f"accuracy {acc:.3f} vs chance {chance:.3f} "
            f"(shuffled-label control {control:.3f})")


# --------------------------------------------------------------------------
# criterion 11: byte-identical determinism
# --------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_11_determinism(tmp_path):
    from binauralize.cli import main

    def run(tag):
        out = tmp_path / tag
        corpus = out / "corpus"
        args = ["--seed", "5", "--deterministic",
                "--set", "scene.duration=10"]
        assert main(["gen-data", *args, "--scenes", "6", "--val", "2",
                     "--test", "2", "--split", "position",
                     "--out", str(corpus)]) == 0
        assert main(["train", *args, "--data", str(corpus),
                     "--out", str(out / "m.ckpt"), "--log", str(out / "log.jsonl"),
                     "--epochs", "3", "--batch-size", "8",
                     "--set", "train.windows_per_record=2",
                     "--set", "train.rir_pretrain_epochs=1",
                     "--set", "train.val_windows=16"]) == 0
        assert main(["eval", *args, "--data", str(corpus),
                     "--methods", "mono-mono,full",
                     "--ckpt", f"full={out / 'm.ckpt'}",
                     "--report", str(out / "report.txt")]) == 0
        return out

    a, b = run("a"), run("b")
    same = True
    for rel in ("corpus/manifest.jsonl", "m.ckpt", "log.jsonl",
                "report.txt", "report.txt.json"):
        same &= (a / rel).read_bytes() == (b / rel).read_bytes()
    _report("11 (determinism)", same,
            "gen-data + train + eval reports byte-identical across two runs")
