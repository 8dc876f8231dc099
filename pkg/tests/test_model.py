import numpy as np
import pytest

from binauralize.nn import (
    ArchConfig,
    REDUCED_ARCH,
    Tensor,
    coherence_classify,
    init_params,
    load_checkpoint,
    mask_head,
    param_count,
    rir_decode,
    save_checkpoint,
    visual_encode,
)
from binauralize.nn import autodiff as ad
from binauralize.nn.model import spec_to_net, subnet_counts

ARCH = ArchConfig()


def tensors_of(params):
    return {k: Tensor(v) for k, v in params.items()}


class TestShapes:
    params = init_params(ARCH, seed=0)

    def test_visual_encode(self):
        obs = np.random.default_rng(0).random((3, 32, 64, 3))
        feat, premap = visual_encode(obs, self.params, ARCH)
        assert feat.data.shape == (3, 64)
        assert premap.data.shape == (3, 4, 8, 64)

    def test_visual_rejects_bad_shape(self):
        with pytest.raises(ValueError, match="expected observations"):
            visual_encode(np.zeros((1, 16, 64, 3)), self.params, ARCH)

    def test_mask_head(self):
        rng = np.random.default_rng(1)
        spec = rng.standard_normal((2, 64, 256, 2))
        feat = rng.standard_normal((2, 64))
        masks = mask_head(spec, Tensor(feat), self.params, ARCH)
        for key in ("d", "l", "r"):
            assert masks[key].data.shape == (2, 64, 256, 2)
            assert np.all(np.abs(masks[key].data) <= 2.0)

    def test_coherence(self):
        rng = np.random.default_rng(2)
        pair = rng.standard_normal((3, 64, 256, 4))
        feat = rng.standard_normal((3, 64))
        prob = coherence_classify(pair, Tensor(feat), self.params, ARCH)
        assert prob.data.shape == (3,)
        assert np.all((prob.data > 0) & (prob.data < 1))

    def test_rir_decode(self):
        rng = np.random.default_rng(3)
        out = rir_decode(Tensor(rng.standard_normal((2, 64))), self.params, ARCH)
        assert out.data.shape == (2, 64, 257, 2)
        assert np.all(out.data >= 0)

    def test_param_budget(self):
        assert param_count(self.params) <= 500_000
        counts = subnet_counts(self.params)
        assert set(counts) == {"visual", "unet", "fusion", "coh", "rir"}


class TestEngineeredInit:
    params = init_params(ARCH, seed=7)

    def test_identity_masks_at_init(self):
        rng = np.random.default_rng(4)
        spec = rng.standard_normal((2, 64, 256, 2))
        feat = rng.standard_normal((2, 64))
        masks = mask_head(spec, Tensor(feat), self.params, ARCH)
        np.testing.assert_allclose(masks["d"].data, 0.0, atol=1e-15)
        np.testing.assert_allclose(masks["l"].data[..., 0], 1.0, atol=1e-12)
        np.testing.assert_allclose(masks["l"].data[..., 1], 0.0, atol=1e-15)
        np.testing.assert_allclose(masks["r"].data[..., 0], 1.0, atol=1e-12)

    def test_zero_image_zero_feature_with_zero_biases(self):
        params = {k: (np.zeros_like(v) if k.endswith(".b") and k.startswith("visual")
                      else v) for k, v in self.params.items()}
        feat, premap = visual_encode(np.zeros((1, 32, 64, 3)), params, ARCH)
        np.testing.assert_array_equal(feat.data, 0.0)
        np.testing.assert_array_equal(premap.data, 0.0)

    def test_rir_decode_zero_everything_is_ln2(self):
        params = {k: np.zeros_like(v) for k, v in self.params.items()}
        out = rir_decode(Tensor(np.zeros((1, 64))), params, ARCH)
        np.testing.assert_allclose(out.data, np.log(2.0), atol=1e-15)


class TestDeterminismAndBatching:
    params = init_params(ARCH, seed=1)

    def test_bit_identical_across_runs(self):
        obs = np.random.default_rng(5).random((2, 32, 64, 3))
        a, _ = visual_encode(obs, self.params, ARCH)
        b, _ = visual_encode(obs, self.params, ARCH)
        np.testing.assert_array_equal(a.data, b.data)

    def test_batch_order_independence(self):
        rng = np.random.default_rng(6)
        spec = rng.standard_normal((4, 64, 256, 2))
        feat = rng.standard_normal((4, 64))
        masks = mask_head(spec, Tensor(feat), self.params, ARCH)["d"].data
        perm = [2, 0, 3, 1]
        masks_p = mask_head(spec[perm], Tensor(feat[perm]), self.params, ARCH)["d"].data
        np.testing.assert_allclose(masks_p, masks[perm], atol=1e-12)

    def test_coherence_double_swap_identity(self):
        rng = np.random.default_rng(7)
        left = rng.standard_normal((2, 13, 17)) + 1j * rng.standard_normal((2, 13, 17))
        right = rng.standard_normal((2, 13, 17)) + 1j * rng.standard_normal((2, 13, 17))
        from binauralize.nn.model import pair_to_net
        params = init_params(REDUCED_ARCH, seed=2)
        pair = pair_to_net(left, right, REDUCED_ARCH)
        pair_swapped_twice = pair_to_net(*(right, left)[::-1], REDUCED_ARCH)
        feat = rng.standard_normal((2, REDUCED_ARCH.feature_dim))
        a = coherence_classify(pair, Tensor(feat), params, REDUCED_ARCH)
        b = coherence_classify(pair_swapped_twice, Tensor(feat), params, REDUCED_ARCH)
        np.testing.assert_array_equal(a.data, b.data)


class TestReducedGradchecks:
    """Central finite differences on the <=500-parameter model."""

    arch = REDUCED_ARCH
    params = init_params(REDUCED_ARCH, seed=3)

    def setup_method(self, method):
        # perturb engineered zero-init heads so their gradients are generic;
        # this seed keeps every leaky-relu pre-activation > 5e-4 from its
        # kink so central differences at eps=1e-5 never straddle one
        rng = np.random.default_rng(2)
        self.params = {k: v + 0.05 * rng.standard_normal(v.shape)
                       for k, v in init_params(self.arch, seed=3).items()}
        self.rng = rng

    def test_reduced_param_budget(self):
        assert param_count(init_params(self.arch)) <= 500

    def _gradcheck(self, loss_fn, eps=1e-5, tol=1e-4):
        tparams = tensors_of(self.params)
        loss = loss_fn(tparams)
        loss.backward()
        worst = 0.0
        for name, t in tparams.items():
            flat_idx = self.rng.integers(t.data.size, size=min(4, t.data.size))
            for i in flat_idx:
                plus = {k: v.copy() for k, v in self.params.items()}
                minus = {k: v.copy() for k, v in self.params.items()}
                plus[name].reshape(-1)[i] += eps
                minus[name].reshape(-1)[i] -= eps
                num = (loss_fn(tensors_of(plus)).item()
                       - loss_fn(tensors_of(minus)).item()) / (2 * eps)
                ana = 0.0 if t.grad is None else t.grad.reshape(-1)[i]
                rel = abs(num - ana) / max(abs(num), abs(ana), 1e-3)
                worst = max(worst, rel)
        assert worst < tol, worst

    def test_visual_gradients(self):
        obs = self.rng.random((2, self.arch.obs_h, self.arch.obs_w, 3))

        def loss(tp):
            feat, premap = visual_encode(obs, tp, self.arch)
            return ad.tsum(feat ** 2) + ad.tsum(premap ** 2) * 0.1

        self._gradcheck(loss)

    def test_mask_head_gradients(self):
        spec = self.rng.standard_normal(
            (2, self.arch.spec_frames, self.arch.spec_bins, 2))
        obs = self.rng.random((2, self.arch.obs_h, self.arch.obs_w, 3))

        def loss(tp):
            feat, _ = visual_encode(obs, tp, self.arch)
            masks = mask_head(spec, feat, tp, self.arch)
            return (ad.tsum(masks["d"] ** 2) + ad.tsum(masks["l"] ** 2)
                    + ad.tsum(masks["r"] ** 2))

        self._gradcheck(loss)

    def test_coherence_gradients(self):
        pair = self.rng.standard_normal(
            (2, self.arch.spec_frames, self.arch.spec_bins, 4))
        obs = self.rng.random((2, self.arch.obs_h, self.arch.obs_w, 3))

        def loss(tp):
            feat, _ = visual_encode(obs, tp, self.arch)
            prob = coherence_classify(pair, feat, tp, self.arch)
            return ad.tsum(ad.log(prob + 1.0) ** 2)

        self._gradcheck(loss)

    def test_rir_gradients(self):
        obs = self.rng.random((2, self.arch.obs_h, self.arch.obs_w, 3))

        def loss(tp):
            feat, _ = visual_encode(obs, tp, self.arch)
            out = rir_decode(feat, tp, self.arch)
            return ad.tsum(out ** 2)

        self._gradcheck(loss)


def test_spec_to_net_round_trip_layout():
    rng = np.random.default_rng(9)
    spec = rng.standard_normal((2, 61, 257)) + 1j * rng.standard_normal((2, 61, 257))
    net = spec_to_net(spec, ARCH)
    assert net.shape == (2, 64, 256, 2)
    np.testing.assert_array_equal(net[:, :61, :, 0], spec.real[:, :, :256])
    np.testing.assert_array_equal(net[:, 61:, :, 1], 0.0)


def test_checkpoint_round_trip(tmp_path):
    params = init_params(REDUCED_ARCH, seed=11)
    save_checkpoint(tmp_path / "m.ckpt", params, REDUCED_ARCH, {"step": 17})
    loaded, arch, header = load_checkpoint(tmp_path / "m.ckpt")
    assert arch == REDUCED_ARCH
    assert header["step"] == "17"
    for k in params:
        np.testing.assert_array_equal(loaded[k], params[k])
