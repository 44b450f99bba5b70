"""Contrastive loss value fixtures and analytic-gradient verification."""

import math

import numpy as np
import pytest

from cirslerp.errors import CountMismatch, DimMismatch, EmptyPairs
from cirslerp.tat.loss import contrastive_loss, grad_contrastive

from conftest import unit_rows


def fd_grad(f, M, h=1e-6):
    """Central finite differences of scalar f over every entry of M."""
    g = np.zeros_like(M)
    it = np.nditer(M, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = M[idx]
        M[idx] = orig + h
        hi = f()
        M[idx] = orig - h
        lo = f()
        M[idx] = orig
        g[idx] = (hi - lo) / (2 * h)
    return g


def rel_err(analytic, numeric):
    denom = max(float(np.abs(analytic).max()), 1e-12)
    return float(np.abs(analytic - numeric).max()) / denom


class TestLossValue:
    def test_identity_pair_fixture(self):
        # N=2 orthonormal pairs at unit temperature: both directions give
        # log(1 + e^-1) per query, so L = 2 log(1 + e^-1).
        V = np.eye(2)
        W = np.eye(2)
        expected = 2.0 * math.log(1.0 + math.exp(-1.0))
        loss = contrastive_loss(V, W, 1.0)
        assert loss == pytest.approx(expected, abs=1e-12)
        assert loss == pytest.approx(0.62652338, abs=1e-8)

    def test_single_pair_is_zero(self, rng):
        v = unit_rows(rng, 1, 5)
        w = unit_rows(rng, 1, 5)
        assert contrastive_loss(v, w, 10.0) == pytest.approx(0.0, abs=1e-12)

    def test_swap_symmetry(self, rng):
        V = unit_rows(rng, 6, 8)
        W = unit_rows(rng, 6, 8)
        assert contrastive_loss(V, W, 5.0) == pytest.approx(contrastive_loss(W, V, 5.0), abs=1e-12)

    def test_joint_permutation_invariance(self, rng):
        V = unit_rows(rng, 7, 5)
        W = unit_rows(rng, 7, 5)
        perm = rng.permutation(7)
        assert contrastive_loss(V[perm], W[perm], 3.0) == pytest.approx(
            contrastive_loss(V, W, 3.0), abs=1e-12
        )

    def test_loss_decreases_as_alignment_improves(self, rng):
        W = unit_rows(rng, 8, 16)
        V_random = unit_rows(rng, 8, 16)
        assert contrastive_loss(W, W, 10.0) < contrastive_loss(V_random, W, 10.0)

    def test_perfect_alignment_floor(self):
        # Aligned orthonormal pairs: loss = 2 log(1 + (n-1) e^-s) -> 0 as s grows.
        n = 4
        V = np.eye(n)
        s = 50.0
        expected = 2.0 * math.log(1.0 + (n - 1) * math.exp(-s))
        assert contrastive_loss(V, V, s) == pytest.approx(expected, abs=1e-12)

    def test_extreme_scale_no_overflow(self, rng):
        V = unit_rows(rng, 5, 4)
        W = unit_rows(rng, 5, 4)
        loss = contrastive_loss(V, W, 1e4)
        assert math.isfinite(loss)

    def test_validation(self, rng):
        with pytest.raises(CountMismatch):
            contrastive_loss(unit_rows(rng, 2, 4), unit_rows(rng, 3, 4), 1.0)
        with pytest.raises(DimMismatch):
            contrastive_loss(unit_rows(rng, 2, 4), unit_rows(rng, 2, 5), 1.0)
        with pytest.raises(EmptyPairs):
            contrastive_loss(np.empty((0, 4)), np.empty((0, 4)), 1.0)


class TestGradContrastive:
    def test_loss_matches_loss_function(self, rng):
        V = unit_rows(rng, 5, 6)
        W = unit_rows(rng, 5, 6)
        loss, _, _ = grad_contrastive(V, W, 2.5)
        assert loss == pytest.approx(contrastive_loss(V, W, 2.5), abs=1e-12)

    def test_matches_finite_differences(self, rng):
        for scale in (1.0, 1.0 / 0.07, 8.0):
            V = unit_rows(rng, 4, 5)
            W = unit_rows(rng, 4, 5)
            _, g_V, g_W = grad_contrastive(V, W, scale)
            fd_V = fd_grad(lambda: contrastive_loss(V, W, scale), V)
            fd_W = fd_grad(lambda: contrastive_loss(V, W, scale), W)
            assert rel_err(g_V, fd_V) <= 1e-6
            assert rel_err(g_W, fd_W) <= 1e-6

    def test_gradient_row_sums_balance(self, rng):
        # dL/dS has zero total mass: softmax rows/columns each sum to one.
        V = unit_rows(rng, 6, 4)
        W = unit_rows(rng, 6, 4)
        _, g_V, g_W = grad_contrastive(V, W, 3.0)
        # Pushing all of V and W through any common rotation leaves S fixed;
        # the gradient must therefore be tangent to that symmetry:
        # sum_i (v_i g_vi^T - g_vi v_i^T) + (w term) is antisymmetric zero.
        sym = V.T @ g_V - g_V.T @ V + W.T @ g_W - g_W.T @ W
        assert np.abs(sym).max() <= 1e-10

    def test_saturated_softmax_has_tiny_gradient(self):
        # Perfectly aligned orthonormal pairs at tau = 0.01: softmax puts all
        # mass on the diagonal and gradients vanish.
        V = np.eye(4)
        _, g_V, g_W = grad_contrastive(V, V, 100.0)
        assert np.abs(g_V).max() <= 1e-3
        assert np.abs(g_W).max() <= 1e-3

    def test_single_pair_gradient_scales_rows(self, rng):
        # n = 1: P = Q = [[1]], G = 0, so gradients are exactly zero.
        v = unit_rows(rng, 1, 3)
        w = unit_rows(rng, 1, 3)
        _, g_V, g_W = grad_contrastive(v, w, 7.0)
        assert np.array_equal(g_V, np.zeros((1, 3)))
        assert np.array_equal(g_W, np.zeros((1, 3)))
