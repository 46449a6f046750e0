import numpy as np
import pytest

from conftest import linear_model
from misdkit.exceptions import DimensionError, FormatError, ParameterError
from misdkit.model import MLP


class TestForward:
    def test_zero_weights_zero_logits(self):
        model = linear_model(np.zeros((3, 2)))
        np.testing.assert_array_equal(model.logits(np.array([1.0, -2.0, 3.0])), [0.0, 0.0])

    def test_single_layer_affine(self):
        W = np.array([[1.0, 0.0], [0.0, 2.0], [1.0, 1.0]])
        b = np.array([0.5, -0.5])
        model = linear_model(W, b)
        x = np.array([1.0, 2.0, 3.0])
        np.testing.assert_allclose(model.logits(x), x @ W + b)

    def test_matches_straight_line_reimplementation(self):
        # independent re-execution of the same arithmetic, no Tensor machinery
        rng = np.random.default_rng(0)
        model = MLP([5, 7, 4, 3], seed=0)
        X = rng.normal(size=(10, 5))
        expected = X * model.input_scale
        for i, (w, b) in enumerate(zip(model.weights, model.biases)):
            expected = expected @ w.data + b.data
            if i < len(model.weights) - 1:
                expected = np.maximum(expected, 0.0)
        np.testing.assert_array_equal(model.logits_batch(X), expected)

    def test_dimension_mismatch(self):
        model = MLP([4, 3], seed=0)
        with pytest.raises(DimensionError):
            model.logits(np.zeros(5))
        with pytest.raises(DimensionError):
            model.logits_batch(np.zeros((2, 3)))

    def test_input_scale_applied(self):
        base = linear_model(np.eye(2))
        scaled = linear_model(np.eye(2))
        scaled.input_scale = 4.0
        x = np.array([1.0, 2.0])
        np.testing.assert_allclose(scaled.logits(x), 4.0 * base.logits(x))


class TestPredict:
    def test_argmax(self):
        model = linear_model(np.eye(2))
        assert model.predict(np.array([0.1, 0.9])) == 1

    def test_tie_breaks_low_index(self):
        model = linear_model(np.eye(2))
        assert model.predict(np.array([0.5, 0.5])) == 0

    def test_batch_agrees_with_single(self):
        rng = np.random.default_rng(1)
        model = MLP([6, 8, 4], seed=1)
        X = rng.normal(size=(1000, 6))
        batch = model.predict_batch(X)
        singles = np.array([model.predict(row) for row in X])
        assert np.array_equal(batch, singles)

    def test_invariant_to_temperature_and_shift(self):
        rng = np.random.default_rng(2)
        model = MLP([4, 5, 3], seed=2)
        x = rng.normal(size=4)
        z = model.logits(x)
        pred = model.predict(x)
        for temp in (0.1, 1.0, 50.0):
            scaled = np.exp((z - z.max()) / temp)
            assert np.argmax(scaled / scaled.sum()) == pred
        assert np.argmax(z + 123.4) == pred


class TestInputGradient:
    def test_linear_softmax_closed_form(self):
        rng = np.random.default_rng(3)
        W = rng.normal(size=(4, 3))
        b = rng.normal(size=3)
        model = linear_model(W, b)
        x = rng.normal(size=4)
        for y in range(3):
            for temp in (0.7, 1.0, 2.0):
                z = (x @ W + b) / temp
                p = np.exp(z - z.max())
                p /= p.sum()
                expected = (p - np.eye(3)[y]) @ W.T / temp
                np.testing.assert_allclose(
                    model.input_gradient(x, y, temp), expected, rtol=1e-12
                )

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(4)
        model = MLP([5, 6, 3], seed=4)
        x = rng.normal(size=5)
        y, temp = 1, 1.4
        grad = model.input_gradient(x, y, temp)
        h = 1e-5
        for i in range(5):
            xp, xm = x.copy(), x.copy()
            xp[i] += h
            xm[i] -= h

            def ce(v):
                z = model.logits(v) / temp
                return -np.log(np.exp(z - z.max())[y] / np.exp(z - z.max()).sum())

            np.testing.assert_allclose(grad[i], (ce(xp) - ce(xm)) / (2 * h), rtol=1e-4, atol=1e-9)

    def test_zero_at_symmetric_point(self):
        # both classes see the same logits at x = 0, gradient cancels
        W = np.array([[1.0, 1.0], [-2.0, -2.0]])
        model = linear_model(W)
        grad = model.input_gradient(np.zeros(2), 0, 1.0)
        np.testing.assert_allclose(grad, np.zeros(2), atol=1e-15)

    def test_shape_matches_input(self):
        model = MLP([7, 4, 2], seed=0)
        grad = model.input_gradient(np.zeros(7), 1)
        assert grad.shape == (7,)


class TestCheckpoint:
    def test_roundtrip_bitwise(self, tmp_path):
        model = MLP([4, 5, 3], seed=7, input_scale=2.5)
        path = tmp_path / "model.ckpt"
        model.save(path)
        back = MLP.load(path)
        assert back.layer_dims == model.layer_dims
        assert back.input_scale == model.input_scale
        for a, b in zip(model.parameters(), back.parameters()):
            assert np.array_equal(a.data, b.data)
        assert back.checksum() == model.checksum()

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.ckpt"
        path.write_text("something else\n")
        with pytest.raises(FormatError):
            MLP.load(path)

    def test_version_rejected(self, tmp_path):
        model = MLP([2, 2], seed=0)
        path = tmp_path / "model.ckpt"
        model.save(path)
        text = path.read_text().replace("v1", "v9", 1)
        path.write_text(text)
        with pytest.raises(FormatError, match="version"):
            MLP.load(path)

    def test_truncated(self, tmp_path):
        model = MLP([3, 4, 2], seed=0)
        path = tmp_path / "model.ckpt"
        model.save(path)
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines[:-3]) + "\n")
        with pytest.raises(FormatError):
            MLP.load(path)


class TestConstruction:
    def test_validation(self):
        with pytest.raises(ParameterError):
            MLP([4], seed=0)
        with pytest.raises(ParameterError):
            MLP([4, 0, 2], seed=0)
        with pytest.raises(ParameterError):
            MLP([4, 1], seed=0)  # single output class
        with pytest.raises(ParameterError):
            MLP([4, 2], seed=0, input_scale=0.0)

    def test_seeded_init_reproducible(self):
        a, b = MLP([3, 4, 2], seed=5), MLP([3, 4, 2], seed=5)
        c = MLP([3, 4, 2], seed=6)
        assert a.checksum() == b.checksum() != c.checksum()

    def test_pass_counting_per_example(self):
        model = MLP([3, 4, 2], seed=0)
        X = np.zeros((5, 3))
        with model.counting() as pc:
            model.predict_batch(X)
            model.input_gradient(X[0], 0)
        assert pc.forwards == 6 and pc.backwards == 1

    def test_nested_counters_both_tick(self):
        model = MLP([3, 2], seed=0)
        with model.counting() as outer:
            model.predict(np.zeros(3))
            with model.counting() as inner:
                model.predict(np.zeros(3))
        assert outer.forwards == 2 and inner.forwards == 1
