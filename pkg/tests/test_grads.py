"""Analytic BPTT gradients against central finite differences."""

import numpy as np
import pytest

from hamlearn.nn.losses import mse_loss_grad
from hamlearn.nn.network import (MODE_STATIC, MODE_TIMEDEP, NetworkArch,
                                 init_params, network_backward,
                                 network_forward)

FD_STEP = 1e-5
REL_TOL = 1e-5


def batch_loss(params, arch, x, y):
    preds, _ = network_forward(params, arch, x)
    return float(np.mean((preds - y) ** 2))


def analytic_grads(params, arch, x, y):
    preds, cache = network_forward(params, arch, x)
    _, d_preds = mse_loss_grad(preds, y)
    return network_backward(params, arch, cache, d_preds)


def fd_check(arch, seed):
    rng = np.random.default_rng(seed)
    params = init_params(arch, seed)
    x = rng.normal(0.0, 0.5, (2, arch.n_steps, arch.input_dim))
    y = rng.normal(0.0, 0.7, (2, arch.target_dim))
    grads = analytic_grads(params, arch, x, y)
    worst = 0.0
    for name, p in params.items():
        flat = p.reshape(-1)
        ga = grads[name].reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + FD_STEP
            lp = batch_loss(params, arch, x, y)
            flat[k] = orig - FD_STEP
            lm = batch_loss(params, arch, x, y)
            flat[k] = orig
            gn = (lp - lm) / (2.0 * FD_STEP)
            rel = abs(ga[k] - gn) / max(abs(ga[k]), abs(gn), 1e-8)
            worst = max(worst, rel)
            assert rel < REL_TOL, \
                f"{name}[{k}]: analytic {ga[k]:.6e} vs fd {gn:.6e}"
    return worst


class TestFiniteDifference:
    def test_static_fixture(self):
        # hidden=4, three steps, one qubit (3 features per step)
        arch = NetworkArch(MODE_STATIC, 3, 3, 4, 1)
        assert fd_check(arch, seed=3) < REL_TOL

    def test_timedep_fixture(self):
        arch = NetworkArch(MODE_TIMEDEP, 3, 3, 4, 2, 2, 1)
        assert fd_check(arch, seed=4) < REL_TOL

    def test_timedep_with_static_couplings(self):
        arch = NetworkArch(MODE_TIMEDEP, 6, 2, 3, 2 * 2 + 1, 2, 2)
        assert fd_check(arch, seed=5) < REL_TOL


class TestGradientStructure:
    def test_zero_loss_batch_has_zero_gradients(self):
        arch = NetworkArch(MODE_STATIC, 3, 3, 4, 2)
        params = init_params(arch, 0)
        x = np.random.default_rng(1).normal(0, 0.5, (3, 3, 3))
        preds, cache = network_forward(params, arch, x)
        grads = analytic_grads(params, arch, x, preds.copy())
        assert np.allclose(grads["head.b"], 0.0, atol=1e-16)
        for g in grads.values():
            assert np.allclose(g, 0.0, atol=1e-16)

    def test_duplicated_sample_equals_single(self):
        arch = NetworkArch(MODE_STATIC, 3, 4, 5, 2)
        params = init_params(arch, 2)
        rng = np.random.default_rng(3)
        x = rng.normal(0, 0.5, (1, 4, 3))
        y = rng.normal(0, 0.5, (1, 2))
        g1 = analytic_grads(params, arch, x, y)
        g2 = analytic_grads(params, arch, np.repeat(x, 2, axis=0),
                            np.repeat(y, 2, axis=0))
        for k in g1:
            assert np.allclose(g1[k], g2[k], rtol=1e-12, atol=1e-14)

    def test_gradients_deterministic(self):
        arch = NetworkArch(MODE_TIMEDEP, 3, 3, 4, 3, 3, 1)
        params = init_params(arch, 4)
        rng = np.random.default_rng(5)
        x = rng.normal(0, 0.5, (2, 3, 3))
        y = rng.normal(0, 0.5, (2, 3))
        g1 = analytic_grads(params, arch, x, y)
        g2 = analytic_grads(params, arch, x, y)
        assert all(np.array_equal(g1[k], g2[k]) for k in g1)
