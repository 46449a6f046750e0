import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import linear_model
from misdkit.attacks import AttackConfig, fgsm, fgsm_direction, pgd
from misdkit.exceptions import ParameterError
from misdkit.model import MLP


def binary_margin_model(w):
    """Two-logit model with z1 - z0 = w . x (class 1 is 'positive')."""
    w = np.asarray(w, dtype=np.float64)
    W = np.zeros((w.size, 2))
    W[:, 1] = w
    return linear_model(W)


class TestFgsm:
    def test_zero_epsilon_identity(self):
        model = binary_margin_model([1.0, 1.0])
        x = np.array([0.3, -0.7])
        out = fgsm(model, x, 1, 0.0, direction="ascent")
        assert np.array_equal(out, x)

    def test_linear_margin_drop(self):
        # ascent on CE at the predicted class moves every coordinate by
        # -eps * sign(w), shrinking the margin by eps * ||w||_1
        w = np.array([1.0, 1.0])
        model = binary_margin_model(w)
        x = np.array([1.0, 1.0])
        assert model.predict(x) == 1
        eps = 0.25
        adv = fgsm(model, x, model.predict(x), eps, direction="ascent")
        np.testing.assert_allclose(adv, x - eps)
        margin = lambda v: model.logits(v)[1] - model.logits(v)[0]
        np.testing.assert_allclose(margin(x) - margin(adv), eps * np.abs(w).sum())

    def test_zero_gradient_stationary(self):
        model = linear_model(np.zeros((2, 2)))
        x = np.array([0.5, 0.5])
        out = fgsm(model, x, 0, 0.5, direction="ascent")
        assert np.array_equal(out, x)  # sign(0) = 0 convention

    def test_descent_opposes_ascent(self):
        model = binary_margin_model([2.0, -1.0])
        x = np.array([0.4, 0.2])
        up = fgsm(model, x, 1, 0.1, direction="ascent")
        down = fgsm(model, x, 1, 0.1, direction="descent")
        np.testing.assert_allclose(up - x, -(down - x))

    def test_bad_direction(self):
        model = binary_margin_model([1.0])
        with pytest.raises(ParameterError):
            fgsm(model, np.array([1.0]), 0, 0.1, direction="sideways")

    @given(eps=st.floats(0.0, 2.0), seed=st.integers(0, 500))
    @settings(max_examples=50, deadline=None)
    def test_linf_bound_exact(self, eps, seed):
        rng = np.random.default_rng(seed)
        model = MLP([4, 6, 3], seed=seed)
        x = rng.normal(size=4)
        adv = fgsm(model, x, model.predict(x), eps, direction="ascent")
        assert np.abs(adv - x).max() <= eps + 1e-12

    def test_ascent_never_decreases_affine_loss(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            model = linear_model(rng.normal(size=(3, 4)), rng.normal(size=4))
            x = rng.normal(size=3)
            y = int(rng.integers(0, 4))
            adv = fgsm(model, x, y, 0.05, direction="ascent")
            ce = lambda v: -np.log(
                np.exp(model.logits(v) - model.logits(v).max())[y]
                / np.exp(model.logits(v) - model.logits(v).max()).sum()
            )
            assert ce(adv) >= ce(x) - 1e-12


class TestPgd:
    def test_single_step_equals_fgsm_bitwise(self):
        rng = np.random.default_rng(3)
        model = MLP([5, 8, 3], seed=1)
        x = rng.normal(size=5)
        y = model.predict(x)
        cfg = AttackConfig(epsilon=0.2, steps=1, step_size=0.2)
        assert np.array_equal(pgd(model, x, y, cfg), fgsm(model, x, y, 0.2, direction="ascent"))

    def test_ball_projection_random_configs(self):
        rng = np.random.default_rng(4)
        model = MLP([4, 6, 2], seed=2)
        for _ in range(100):
            eps = float(rng.uniform(0.01, 1.0))
            steps = int(rng.integers(2, 6))
            x = rng.normal(size=4)
            cfg = AttackConfig(epsilon=eps, steps=steps, step_size=float(rng.uniform(0.01, eps)))
            adv = pgd(model, x, model.predict(x), cfg)
            assert np.abs(adv - x).max() <= eps + 1e-12

    def test_linear_flip_threshold_matches_fgsm(self):
        # on an affine model both attacks flip iff eps >= margin / ||w||_1
        w = np.array([1.0, 2.0, -1.0])
        model = binary_margin_model(w)
        x = np.array([0.5, 0.5, -0.25])
        margin = model.logits(x)[1] - model.logits(x)[0]
        assert margin > 0
        threshold = margin / np.abs(w).sum()
        for eps, should_flip in [(threshold * 0.9, False), (threshold * 1.1, True)]:
            cfg = AttackConfig(epsilon=eps, steps=3, step_size=eps / 2)
            flipped_pgd = model.predict(pgd(model, x, 1, cfg)) != 1
            flipped_fgsm = model.predict(fgsm(model, x, 1, eps, direction="ascent")) != 1
            assert flipped_pgd == flipped_fgsm == should_flip

    def test_invalid_config(self):
        with pytest.raises(ParameterError):
            AttackConfig(epsilon=-0.1)
        with pytest.raises(ParameterError):
            AttackConfig(steps=0)


class TestFgsmDirection:
    def test_codomain(self):
        rng = np.random.default_rng(5)
        model = MLP([6, 4, 3], seed=3)
        d = fgsm_direction(model, rng.normal(size=6))
        assert set(np.unique(d)).issubset({-1.0, 0.0, 1.0})

    def test_matches_analytic_gradient_sign(self):
        rng = np.random.default_rng(6)
        W = rng.normal(size=(4, 3))
        b = rng.normal(size=3)
        model = linear_model(W, b)
        x = rng.normal(size=4)
        z = x @ W + b
        y_hat = int(np.argmax(z))
        p = np.exp(z - z.max())
        p /= p.sum()
        grad = (p - np.eye(3)[y_hat]) @ W.T
        np.testing.assert_array_equal(fgsm_direction(model, x), np.sign(grad))

    def test_uses_predicted_not_true_label(self):
        # direction is computed at the argmax class, independent of any label
        model = binary_margin_model([1.0, -2.0])
        x = np.array([1.0, -1.0])
        d = fgsm_direction(model, x)
        y_hat = model.predict(x)
        g = model.input_gradient(x, y_hat)
        np.testing.assert_array_equal(d, np.sign(g))

    def test_temperature_invariant_for_binary(self):
        model = binary_margin_model([1.5, -0.5, 2.0])
        x = np.array([0.2, 0.8, -0.3])
        dirs = [fgsm_direction(model, x, temperature=t) for t in (0.5, 1.0, 2.0)]
        assert all(np.array_equal(dirs[0], d) for d in dirs[1:])
