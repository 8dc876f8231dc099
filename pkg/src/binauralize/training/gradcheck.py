"""Finite-difference gradient suite on the reduced (<=500 parameter) model.

Central differences at eps=1e-5 in double precision against the analytic
gradients of every loss term and their weighted sum. The test point keeps
all leaky-ReLU pre-activations away from their kinks so the differences are
taken on a smooth neighborhood.
"""

from __future__ import annotations

import numpy as np

from ..nn.model import REDUCED_ARCH, init_params
from .examples import Batch
from .graph import grad

EPS = 1e-5
CHECKS_PER_PARAM = 3


def synthetic_batch(seed: int, n: int = 3) -> Batch:
    arch = REDUCED_ARCH
    rng = np.random.default_rng(np.random.SeedSequence([0x6ad, seed]))

    def spec():
        return (rng.standard_normal((n, arch.frames_raw, arch.bins_raw))
                + 1j * rng.standard_normal((n, arch.frames_raw, arch.bins_raw)))

    a_l, a_r = spec(), spec()
    t = np.arange(arch.spec_frames) * 0.01
    env = 10 ** (-3 * t / 0.4)
    x_gt = (np.abs(rng.standard_normal((n, arch.spec_frames, arch.bins_raw, 2)))
            * env[None, :, None, None] + 0.01)
    rt60 = np.array([0.4, np.nan, 0.5])[:n]
    return Batch(
        mono_spec=(a_l + a_r) / 2, gt_d=a_l - a_r, gt_l=a_l, gt_r=a_r,
        obs_t=rng.random((n, arch.obs_h, arch.obs_w, 3)),
        obs_delta=rng.random((n, arch.obs_h, arch.obs_w, 3)),
        coh_left=a_l, coh_right=a_r,
        flipped=rng.random(n) < 0.5,
        x_gt=x_gt, rt60_gt=rt60)


def test_point_params(seed: int) -> dict[str, np.ndarray]:
    # perturbation seed 2 keeps pre-activations clear of relu kinks for the
    # reduced architecture (verified; see the model gradcheck tests)
    rng = np.random.default_rng(2)
    return {k: v + 0.05 * rng.standard_normal(v.shape)
            for k, v in init_params(REDUCED_ARCH, seed=3).items()}


def run_gradcheck(seed: int = 0) -> dict[str, float]:
    """Max relative FD error per loss term; all should be < 1e-3."""
    batch = synthetic_batch(seed)
    params = test_point_params(seed)
    rng = np.random.default_rng(np.random.SeedSequence([0x6ad2, seed]))
    report: dict[str, float] = {}
    for name in ("B", "G", "P", "S", "total"):
        _, grads = grad(name, batch, params, REDUCED_ARCH)
        worst = 0.0
        for pname, arr in params.items():
            idx = rng.integers(arr.size, size=min(CHECKS_PER_PARAM, arr.size))
            for i in idx:
                plus = {k: v.copy() for k, v in params.items()}
                minus = {k: v.copy() for k, v in params.items()}
                plus[pname].reshape(-1)[i] += EPS
                minus[pname].reshape(-1)[i] -= EPS
                vp, _ = grad(name, batch, plus, REDUCED_ARCH)
                vm, _ = grad(name, batch, minus, REDUCED_ARCH)
                num = (vp["total"] - vm["total"]) / (2 * EPS)
                ana = grads[pname].reshape(-1)[i]
                rel = abs(num - ana) / max(abs(num), abs(ana), 1e-3)
                worst = max(worst, rel)
        report[name] = worst
    return report
