"""Objective, similarity metric, and Adam update checks."""

import numpy as np
import pytest

from hamlearn.nn.losses import (UndefinedSimilarityError, cosine_similarity,
                                cosine_similarity_batch, mse_loss,
                                mse_loss_grad)
from hamlearn.nn.optim import (adam_step, clip_gradients, global_grad_norm,
                               init_adam)


class TestMse:
    def test_identical_vectors(self):
        assert mse_loss(np.array([1.0, 2.0]), np.array([1.0, 2.0])) == 0.0

    def test_arithmetic(self):
        assert mse_loss(np.array([0.0, 2.0]), np.array([1.0, 2.0])) == \
            pytest.approx(0.5)

    def test_nonnegative(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            a, b = rng.normal(size=5), rng.normal(size=5)
            assert mse_loss(a, b) >= 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            mse_loss(np.zeros(3), np.zeros(4))

    def test_grad_matches_finite_difference(self):
        rng = np.random.default_rng(1)
        preds = rng.normal(size=(2, 3))
        targets = rng.normal(size=(2, 3))
        loss, grad = mse_loss_grad(preds, targets)
        step = 1e-6
        for idx in np.ndindex(preds.shape):
            p = preds.copy()
            p[idx] += step
            lp = mse_loss_grad(p, targets)[0]
            p[idx] -= 2 * step
            lm = mse_loss_grad(p, targets)[0]
            assert grad[idx] == pytest.approx((lp - lm) / (2 * step),
                                              rel=1e-5, abs=1e-10)


class TestCosine:
    def test_identical(self):
        v = np.array([0.3, -0.4, 1.0])
        assert cosine_similarity(v, v) == pytest.approx(1.0)

    def test_opposite(self):
        v = np.array([0.3, -0.4, 1.0])
        assert cosine_similarity(v, -v) == pytest.approx(-1.0)

    def test_orthogonal(self):
        assert cosine_similarity(np.array([1.0, 0.0]),
                                 np.array([0.0, 1.0])) == pytest.approx(0.0)

    def test_bounds(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            a, b = rng.normal(size=7), rng.normal(size=7)
            assert -1.0 - 1e-12 <= cosine_similarity(a, b) <= 1.0 + 1e-12

    def test_zero_vector_rejected(self):
        with pytest.raises(UndefinedSimilarityError):
            cosine_similarity(np.zeros(3), np.ones(3))
        with pytest.raises(UndefinedSimilarityError):
            cosine_similarity(np.ones(3), np.full(3, 1e-13))

    def test_batch_marks_invalid_rows(self):
        preds = np.array([[1.0, 0.0], [0.0, 0.0], [0.5, 0.5]])
        targets = np.array([[1.0, 0.0], [1.0, 0.0], [0.5, 0.5]])
        sims, valid = cosine_similarity_batch(preds, targets)
        assert valid.tolist() == [True, False, True]
        assert sims[0] == pytest.approx(1.0)
        assert sims[2] == pytest.approx(1.0)


class TestAdam:
    def test_first_step_magnitude(self):
        # bias-corrected first step: -lr * 1 / (1 + eps)
        params = {"p": np.array([0.0])}
        state = init_adam(params, lr=1e-3)
        adam_step(params, {"p": np.array([1.0])}, state)
        expected = -1e-3 / (1.0 + 1e-8)
        assert params["p"][0] == pytest.approx(expected, rel=1e-12)
        assert state.step == 1

    def test_zero_gradient_no_change(self):
        params = {"a": np.array([1.0, -2.0]), "b": np.array([[3.0]])}
        state = init_adam(params)
        before = {k: v.copy() for k, v in params.items()}
        adam_step(params, {k: np.zeros_like(v) for k, v in params.items()},
                  state)
        assert all(np.array_equal(params[k], before[k]) for k in params)

    def test_deterministic(self):
        def run():
            params = {"p": np.array([0.5, -0.5])}
            state = init_adam(params, lr=0.01)
            for i in range(5):
                adam_step(params, {"p": np.array([0.1 * i, -0.2])}, state)
            return params["p"]

        assert np.array_equal(run(), run())

    def test_descends_quadratic(self):
        params = {"p": np.array([5.0])}
        state = init_adam(params, lr=0.1)
        for _ in range(200):
            adam_step(params, {"p": 2.0 * params["p"]}, state)
        assert abs(params["p"][0]) < 0.05

    def test_shape_mismatch(self):
        params = {"p": np.zeros(3)}
        state = init_adam(params)
        with pytest.raises(ValueError):
            adam_step(params, {"p": np.zeros(4)}, state)

    def test_state_param_mismatch(self):
        params = {"p": np.zeros(3)}
        state = init_adam({"q": np.zeros(3)})
        with pytest.raises(ValueError):
            adam_step(params, {"p": np.zeros(3)}, state)


class TestClipping:
    def test_norm_capped(self):
        grads = {"a": np.array([3.0, 4.0])}
        norm = clip_gradients(grads, 1.0)
        assert norm == pytest.approx(5.0)
        assert global_grad_norm(grads) == pytest.approx(1.0)

    def test_below_threshold_untouched(self):
        grads = {"a": np.array([0.3, 0.4])}
        clip_gradients(grads, 1.0)
        assert np.array_equal(grads["a"], [0.3, 0.4])
