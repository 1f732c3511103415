import numpy as np
import pytest

from entwit.ann import (HIDDEN_LAYERS, MlpModel, TrainingHyper, decide, decide_batch, forward,
                        gradient_check, init_model, loss_and_gradients, predict, train)
from entwit.errors import DimensionMismatch, SingleClassDataset


def blobs(seed, n=2000, dim=5, gap=1.5):
    rng = np.random.default_rng(seed)
    ent = rng.uniform(size=n) < 0.5
    x = rng.standard_normal((n, dim)) * 0.3 + np.where(ent[:, None], -gap / 2, gap / 2)
    return x, ent


def zero_model(n_in=5):
    m = init_model(n_in, 0)
    return MlpModel(m.layer_sizes, [np.zeros_like(w) for w in m.weights],
                    [np.zeros_like(b) for b in m.biases])


class TestInit:
    @pytest.mark.parametrize("n", [3, 5, 15])
    def test_shapes(self, n):
        m = init_model(n, 1)
        assert m.layer_sizes == [n, *HIDDEN_LAYERS, 1]
        assert m.weights[0].shape == (36, n)
        assert [w.shape for w in m.weights[1:]] == [(180, 36), (75, 180), (180, 75), (75, 180), (1, 75)]
        assert all(not b.any() for b in m.biases)

    def test_deterministic(self):
        a, b = init_model(5, 3), init_model(5, 3)
        assert all(np.array_equal(p, q) for p, q in zip(a.params(), b.params()))
        c = init_model(5, 4)
        assert not np.array_equal(a.weights[0], c.weights[0])

    def test_he_variance(self):
        m = init_model(5, 9)
        w = m.weights[2]
        assert w.var() == pytest.approx(2 / 180, rel=0.1)
        assert abs(w.mean()) < 0.01

    def test_rejects_empty_input(self):
        with pytest.raises(ValueError):
            init_model(0)


class TestForward:
    def test_zero_model_gives_half(self):
        assert forward(zero_model(), np.ones(5)) == 0.5

    def test_output_range(self):
        m = init_model(5, 2)
        rng = np.random.default_rng(0)
        w = predict(m, rng.standard_normal((1000, 5)) * 100)
        assert np.all((w >= 0) & (w <= 1))
        w = predict(m, rng.uniform(size=(1000, 5)))
        assert np.all((w > 0) & (w < 1))

    def test_continuity(self):
        x, ent = blobs(1, 500)
        m, _ = train(init_model(5, 1), x, ent, TrainingHyper(epochs=3, seed=1))
        rng = np.random.default_rng(2)
        for _ in range(100):
            f = rng.uniform(size=5)
            g = f.copy()
            g[rng.integers(5)] += 1e-9
            assert abs(forward(m, f) - forward(m, g)) < 1e-3

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatch):
            forward(init_model(5), np.ones(4))
        with pytest.raises(DimensionMismatch):
            predict(init_model(5), np.ones((3, 6)))


class TestGradients:
    def test_twenty_random_models(self):
        worst = 0.0
        for seed in range(20):
            rng = np.random.default_rng(seed)
            n_in = int(rng.integers(2, 6))
            m = init_model(n_in, seed, hidden=(6, 4))
            for b in m.biases:
                b += rng.standard_normal(b.shape) * 0.1
            x = rng.uniform(size=(8, n_in))
            y = (rng.uniform(size=8) < 0.5).astype(float)
            worst = max(worst, gradient_check(m, x, y))
        assert worst < 1e-5

    def test_stationary_point(self):
        # Zero network, soft target 1/2: the loss is even in the output logit.
        m = zero_model(3)
        x = np.random.default_rng(0).uniform(size=(4, 3))
        y = np.full(4, 0.5)
        _, grads = loss_and_gradients(m, x, y)
        assert max(np.abs(g).max() for g in grads) < 1e-7
        from entwit.ann import _bce, _logits
        h = 1e-5
        for p in m.params():
            flat = p.reshape(-1)
            for k in range(flat.size):
                flat[k] = h
                up = _bce(_logits(m, x), y)
                flat[k] = -h
                down = _bce(_logits(m, x), y)
                flat[k] = 0.0
                assert abs(up - down) / (2 * h) < 1e-7

    def test_coarse_step_is_worse(self):
        rng = np.random.default_rng(5)
        m = init_model(4, 5, hidden=(6, 4))
        x = rng.uniform(size=(8, 4))
        y = (rng.uniform(size=8) < 0.5).astype(float)
        fine, coarse = gradient_check(m, x, y, 1e-5), gradient_check(m, x, y, 1e-2)
        assert coarse > 100 * fine


class TestTrain:
    def test_blobs(self):
        x, ent = blobs(3)
        m, rep = train(init_model(5, 3), x, ent, TrainingHyper(epochs=50, seed=3))
        acc = np.mean((predict(m, x) < 0.5) == ent)
        assert acc >= 0.99
        assert rep.epochs_run <= 50

    def test_loss_trend(self):
        x, ent = blobs(4, n=3000, gap=0.6)
        curves = []
        for seed in range(5):
            _, rep = train(init_model(5, seed), x, ent, TrainingHyper(epochs=12, seed=seed, patience=100))
            curves.append(rep.loss)
        med = np.median(np.array(curves), axis=0)
        assert med[-1] < med[0]
        # upticks only at the noise floor
        assert np.all(np.diff(med) <= 0.02 * med[:-1] + 2e-3)

    def test_deterministic(self):
        x, ent = blobs(5, 800)
        hyper = TrainingHyper(epochs=4, seed=11)
        a, ra = train(init_model(5, 11), x, ent, hyper)
        b, rb = train(init_model(5, 11), x, ent, hyper)
        assert all(np.array_equal(p, q) for p, q in zip(a.params(), b.params()))
        assert ra.loss == rb.loss

    def test_targets_orientation(self):
        x, ent = blobs(6, 1000)
        m, _ = train(init_model(5, 6), x, ent, TrainingHyper(epochs=10, seed=6))
        w = predict(m, x)
        assert w[ent].mean() < 0.2 and w[~ent].mean() > 0.8

    def test_early_stopping_restores_best(self):
        x, ent = blobs(7, 600)
        m, rep = train(init_model(5, 7), x, ent, TrainingHyper(epochs=40, seed=7, patience=2))
        assert rep.best_epoch == int(np.argmin(rep.val_loss))
        assert rep.stopped_early or rep.epochs_run == 40
        assert m.train_meta["best_epoch"] == rep.best_epoch

    def test_report_fields(self):
        x, ent = blobs(8, 400)
        _, rep = train(init_model(5, 8), x, ent, TrainingHyper(epochs=3, seed=8, patience=100))
        assert len(rep.loss) == len(rep.val_loss) == len(rep.val_accuracy) == 3
        assert all(0 <= a <= 1 for a in rep.val_accuracy)

    def test_single_class(self):
        x = np.random.default_rng(0).uniform(size=(50, 5))
        with pytest.raises(SingleClassDataset):
            train(init_model(5), x, np.ones(50, dtype=bool))

    def test_width_mismatch(self):
        x, ent = blobs(9, 50)
        with pytest.raises(DimensionMismatch):
            train(init_model(4), x, ent)


class TestDecide:
    def test_rule(self):
        m = zero_model()
        assert decide(m, np.zeros(5), 0.5).label == "separable"  # w = 0.5 sits on the boundary
        assert decide(m, np.zeros(5), 0.51).entangled
        assert decide_batch([0.3], 0.5)[0]

    def test_raising_epsilon_never_frees_entangled(self):
        w = np.random.default_rng(0).uniform(size=10_000)
        low, high = decide_batch(w, 0.5), decide_batch(w, 0.9)
        assert not np.any(low & ~high)

    @pytest.mark.parametrize("eps", [0.0, 1.0, -0.1, 1.5])
    def test_epsilon_range(self, eps):
        with pytest.raises(ValueError):
            decide(zero_model(), np.zeros(5), eps)
