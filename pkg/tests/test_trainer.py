import math

import numpy as np
import pytest

from poladca.graphio import Split, generate_synthetic_dataset, records_to_samples, stratified_split
from poladca.mplayers import SCHEMES, Network
from poladca.numkit import Tensor
from poladca.trainer import (
    AdamState,
    GraphBatchData,
    ModelConfig,
    adam_step,
    evaluate_metrics,
    fit,
    load_model,
    nll_loss,
    predict_logits,
    save_model,
    train_step,
)
from poladca.trainer.loop import _batched_loss


@pytest.fixture(scope="module")
def tiny(small_pre):
    recs = generate_synthetic_dataset(3, 10, small_pre, seed=5)
    return small_pre, records_to_samples(recs, small_pre)


def tiny_cfg(**kw):
    base = dict(n_classes=3, d_model=8, n_heads=2, classifier_dims=(16, 8), epochs=3, batch_size=8)
    base.update(kw)
    return ModelConfig(**base)


class TestLoss:
    def test_uniform(self):
        assert nll_loss(Tensor([0.0, 0.0]), 0).item() == pytest.approx(math.log(2), abs=1e-15)

    def test_confident(self):
        assert nll_loss(Tensor([10.0, 0.0]), 0).item() == pytest.approx(math.log1p(math.exp(-10)), rel=1e-12)

    def test_matches_softmax_cross_entropy(self, rng):
        for _ in range(100):
            z = rng.standard_normal(6) * 5
            y = int(rng.integers(6))
            p = np.exp(z - z.max())
            p /= p.sum()
            assert nll_loss(Tensor(z), y).item() == pytest.approx(-math.log(p[y]), abs=1e-12)

    def test_invalid_label(self):
        with pytest.raises(ValueError):
            nll_loss(Tensor([0.0, 1.0]), 2)

    def test_batch_mean(self):
        z = Tensor([[0.0, 0.0], [10.0, 0.0]])
        expected = (math.log(2) + math.log1p(math.exp(-10))) / 2
        assert nll_loss(z, [0, 0]).item() == pytest.approx(expected, rel=1e-12)


class TestAdam:
    def test_first_step_size(self, rng):
        p = {"w": Tensor(rng.standard_normal(5))}
        before = p["w"].data.copy()
        adam_step(p, {"w": rng.standard_normal(5)}, AdamState(), lr=1e-3)
        np.testing.assert_allclose(np.abs(p["w"].data - before), 1e-3, rtol=1e-4)

    def test_zero_grad_fixed_point(self, rng):
        p = {"w": Tensor(rng.standard_normal(4))}
        before = p["w"].data.copy()
        state = AdamState()
        for _ in range(3):
            adam_step(p, {"w": np.zeros(4)}, state, lr=1e-3)
        np.testing.assert_array_equal(p["w"].data, before)

    def test_l2_folded_into_gradient(self):
        # zero loss gradient but weight decay: the first step moves against the parameter sign
        p = {"w": Tensor([2.0, -3.0])}
        adam_step(p, {"w": np.zeros(2)}, AdamState(), lr=0.1, weight_decay=5e-4)
        np.testing.assert_allclose(p["w"].data, [1.9, -2.9], rtol=1e-6)

    def test_reference_two_steps(self):
        p = {"w": Tensor([1.0])}
        state = AdamState()
        g = [0.5, -0.2]
        m = v = 0.0
        w = 1.0
        for t, gi in enumerate(g, start=1):
            m = 0.9 * m + 0.1 * gi
            v = 0.999 * v + 0.001 * gi * gi
            w -= 0.01 * (m / (1 - 0.9 ** t)) / (math.sqrt(v / (1 - 0.999 ** t)) + 1e-8)
            adam_step(p, {"w": np.array([gi])}, state, lr=0.01)
        assert p["w"].data[0] == pytest.approx(w, abs=1e-15)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            adam_step({"w": Tensor(np.zeros(2))}, {"w": np.zeros(3)}, AdamState(), lr=1e-3)


class TestSchedule:
    def test_step_decay(self):
        cfg = ModelConfig()
        assert cfg.lr_at(0) == 1e-3
        assert cfg.lr_at(19) == 1e-3
        assert cfg.lr_at(20) == 5e-4
        assert cfg.lr_at(40) == 2.5e-4

    def test_defaults(self):
        cfg = ModelConfig()
        assert (cfg.d_model, cfg.n_layers, cfg.n_heads, cfg.dropout) == (64, 3, 4, 0.01)
        assert (cfg.epochs, cfg.batch_size, cfg.lr, cfg.weight_decay, cfg.patience) == (50, 16, 1e-3, 5e-4, 20)
        assert cfg.classifier_dims == (128, 64)

    def test_rejects_bad_heads(self):
        with pytest.raises(ValueError):
            tiny_cfg(d_model=10, n_heads=4).arch(5)


class TestMetrics:
    def test_perfect(self):
        m = evaluate_metrics([0, 1, 2], [0, 1, 2], 3)
        assert m["acc"] == 1.0 and m["macro_f1"] == 1.0

    def test_all_wrong(self):
        m = evaluate_metrics([1, 0], [0, 1], 2)
        assert m["acc"] == 0.0 and m["macro_f1"] == 0.0

    def test_hand_example(self):
        m = evaluate_metrics([0, 1, 1, 1], [0, 0, 1, 1], 2)
        assert m["acc"] == 0.75
        assert m["macro_f1"] == pytest.approx((2 / 3 + 0.8) / 2, abs=1e-12)
        np.testing.assert_array_equal(m["confusion"], [[1, 1], [0, 2]])

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            evaluate_metrics([0, 3], [0, 1], 2)


class TestFit:
    def test_report_consistency(self, tiny):
        _, samples = tiny
        _, rep = fit(samples, tiny_cfg(scheme="poladca"))
        cm = np.array(rep.confusion)
        assert cm.sum() == rep.n_test
        labels = np.array([s.label for s in samples])
        split = stratified_split(labels, 0)
        np.testing.assert_array_equal(cm.sum(axis=1), np.bincount(labels[list(split.test)], minlength=3))
        assert len(rep.train_loss) == rep.stopped_epoch + 1

    def test_bit_reproducible(self, tiny):
        _, samples = tiny
        a_net, a = fit(samples, tiny_cfg(scheme="dca"))
        b_net, b = fit(samples, tiny_cfg(scheme="dca"))
        assert a.to_json() == b.to_json()
        for k, v in a_net.snapshot().items():
            np.testing.assert_array_equal(v, b_net.snapshot()[k])

    def test_early_stopping_restores_best(self, tiny):
        _, samples = tiny
        net, rep = fit(samples, tiny_cfg(scheme="gcn", epochs=30, patience=2, lr=0.05))
        assert rep.stopped_epoch - rep.best_epoch <= 2
        data = GraphBatchData(samples)
        split = stratified_split(data.y, 0)
        best = _batched_loss(net, data, np.asarray(split.val), 8)
        assert best == pytest.approx(rep.val_loss[rep.best_epoch], abs=1e-12)

    @pytest.mark.parametrize("scheme", SCHEMES)
    def test_first_batch_loss_decreases(self, tiny, scheme):
        _, samples = tiny
        cfg = tiny_cfg(scheme=scheme, dropout=0.0)
        data = GraphBatchData(samples)
        net = Network(cfg.arch(data.X.shape[-1]), seed=0)
        x, topo, y = data.batch(np.arange(8))
        state, rng = AdamState(), np.random.default_rng(0)
        losses = [train_step(net, state, x, topo, y, cfg, 1e-3, rng) for _ in range(11)]
        assert losses[-1] < losses[0]

    def test_empty_split_rejected(self, tiny):
        _, samples = tiny
        with pytest.raises(ValueError):
            fit(samples, tiny_cfg(), Split(tuple(range(10)), (), (10,)))


def test_checkpoint_round_trip(tmp_path, tiny):
    pre, samples = tiny
    cfg = tiny_cfg(scheme="poladca", epochs=1)
    net, _ = fit(samples, cfg)
    save_model(tmp_path / "ck.json", net, cfg, pre)
    net2, cfg2, pre2 = load_model(tmp_path / "ck.json")
    assert cfg2 == cfg and pre2 == pre
    np.testing.assert_array_equal(predict_logits(net, samples[:4]), predict_logits(net2, samples[:4]))
