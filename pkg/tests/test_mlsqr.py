"""
Copyright (C) 2026 Bence Göblyös

This program is free software: you can redistribute it and/or modify it under
the terms of the GNU General Public License as published by the Free Software
Foundation, version 3.

This program is distributed in the hope that it will be useful, but WITHOUT ANY
WARRANTY; without even the implied warranty of MERCHANTABILITY or FITNESS FOR A
PARTICULAR PURPOSE. See the GNU General Public License for more details.

You should have received a copy of the GNU General Public License along with
this program. If not, see https://www.gnu.org/licenses/.
"""

import numpy as np
import pytest
import scipy.linalg as sla
from numpy.testing import assert_allclose

from conftest import randomComplex
from Link.Channel import ChannelRealization
from Link.Grid import FrameConfig
from Link.Waveform import effectiveChannelDense, effectiveChannelOperator, firstColumn
from Receivers.MLSQR import (ApproxMse, approxMse, bccbEigenvalues, exactEqualizerRecursion, exactMse,
                             lsqrSolve, mlsqr)
from Utilities.Errors import DimensionError, DomainError, SizeCapError


def wellConditioned(rng, n):
    return np.eye(n) + 0.15 * randomComplex(rng, n, n)


def ridge(G, y, sigma2):
    GH = G.conj().T
    return np.linalg.solve(GH @ G + sigma2 * np.eye(G.shape[1]), GH @ y)


class TestLsqrSolve:
    def test_identity_noiseless(self, rng):
        y = randomComplex(rng, 6)
        x, hist = lsqrSolve(np.eye(6), y, 0.0, max_iter = 15, tol = 1e-2)
        assert np.linalg.norm(x - y) <= 1e-2
        assert hist.iterations <= 2

    def test_identity_damped(self):
        x, hist = lsqrSolve(np.eye(2), np.array([2.0, 0.0]), 1.0, max_iter = 15, tol = 0.0)
        assert_allclose(x, [1.0, 0.0], atol = 1e-12)

    def test_ridge_oracle(self, rng):
        G = wellConditioned(rng, 16)
        y = randomComplex(rng, 16)
        x, _ = lsqrSolve(G, y, 0.1, max_iter = 50, tol = 0.0)
        assert_allclose(x, ridge(G, y, 0.1), atol = 1e-6)

    def test_history_layout(self, rng):
        G = wellConditioned(rng, 8)
        _, hist = lsqrSolve(G, randomComplex(rng, 8), 0.05, max_iter = 4, tol = 0.0)
        assert hist.iterations == 4
        assert len(hist.tau) == 5 and np.isnan(hist.tau[0])
        assert hist.rhobar[0] == hist.alpha[0] and hist.phibar[0] == hist.beta[0]
        # Augmented residual norms shrink monotonically
        assert np.all(np.diff(hist.augmented_norms) <= 1e-12)
        assert_allclose(np.array(hist.c[1:])**2 + np.array(hist.s[1:])**2, 1.0)

    def test_zero_rhs(self):
        x, hist = lsqrSolve(np.eye(3), np.zeros(3), 0.1)
        assert_allclose(x, 0)
        assert hist.iterations == 0

    def test_breakdown_flag(self):
        _, hist = lsqrSolve(np.eye(4), np.ones(4), 0.0, max_iter = 10, tol = 0.0)
        assert hist.breakdown
        assert hist.iterations == 1

    def test_bad_input(self):
        with pytest.raises(DimensionError):
            lsqrSolve(np.eye(3), np.ones(4), 0.1)
        with pytest.raises(DomainError):
            lsqrSolve(np.eye(3), np.ones(3), -0.1)
        with pytest.raises(DomainError):
            lsqrSolve(np.eye(3), np.ones(3), 0.1, max_iter = 0)


class TestExactEqualizer:
    def test_single_iteration(self, rng):
        G = wellConditioned(rng, 6)
        _, hist = lsqrSolve(G, randomComplex(rng, 6), 0.2, max_iter = 1, tol = 0.0)
        L = exactEqualizerRecursion(hist, G, 0.2)
        scale = hist.tau[1] / (hist.rhobar[0] * hist.phibar[0])
        assert_allclose(L, scale * np.eye(6), atol = 1e-14)

    def test_scaled_identity(self, rng):
        c, sigma2 = 0.8 - 0.6j, 0.25
        G = c * np.eye(5)
        _, hist = lsqrSolve(G, randomComplex(rng, 5), sigma2, max_iter = 15, tol = 0.0)
        L = exactEqualizerRecursion(hist, G, sigma2)
        assert_allclose(L, np.eye(5) / (abs(c)**2 + sigma2), atol = 1e-8)

    @pytest.mark.parametrize("iters", [1, 2, 3, 5, 8])
    def test_consistent_with_iterate(self, rng, iters):
        G = randomComplex(rng, 8, 8)
        y = randomComplex(rng, 8)
        x, hist = lsqrSolve(G, y, 0.3, max_iter = iters, tol = 0.0)
        L = exactEqualizerRecursion(hist, G, 0.3)
        assert_allclose(L @ G.conj().T @ y, x, atol = 1e-8)

    def test_size_cap(self, rng):
        G = np.eye(20)
        _, hist = lsqrSolve(G, np.ones(20), 0.1, max_iter = 2)
        with pytest.raises(SizeCapError):
            exactEqualizerRecursion(hist, G, 0.1, size_cap = 16)


class TestExactMse:
    def test_identity_noiseless(self, rng):
        G = np.eye(4)
        _, hist = lsqrSolve(G, randomComplex(rng, 4), 0.0)
        m = exactMse(exactEqualizerRecursion(hist, G, 0.0), G, 0.0)
        assert_allclose(m.psi, 1.0, atol = 1e-12)
        assert_allclose(m.nu2, 0.0, atol = 1e-12)
        assert_allclose(m.gamma, 0.0, atol = 1e-12)

    def test_scaled_identity(self, rng):
        c, sigma2 = 1.3j, 0.1
        G = c * np.eye(4)
        _, hist = lsqrSolve(G, randomComplex(rng, 4), sigma2, tol = 0.0)
        m = exactMse(exactEqualizerRecursion(hist, G, sigma2), G, sigma2)
        assert_allclose(m.gamma, sigma2 / abs(c)**2, rtol = 1e-8)

    @pytest.mark.parametrize("n", [4, 16])
    def test_brute_force(self, rng, n):
        G = randomComplex(rng, n, n)
        sigma2 = 0.2
        _, hist = lsqrSolve(G, randomComplex(rng, n), sigma2, max_iter = 3, tol = 0.0)
        L = exactEqualizerRecursion(hist, G, sigma2)
        W = L @ G.conj().T
        B = W @ G
        psi = np.diag(B).real
        interference = np.array([np.sum(np.abs(np.delete(B[i], i))**2) for i in range(n)])
        noise = sigma2 * np.sum(np.abs(W)**2, axis = 1)
        m = exactMse(L, G, sigma2)
        assert_allclose(m.psi, psi, atol = 1e-8)
        assert_allclose(m.nu2, interference + noise, rtol = 1e-8)
        assert_allclose(m.gamma, (interference + noise) / psi**2, rtol = 1e-8)

    def test_zero_gain_is_infinite(self):
        m = exactMse(np.zeros((2, 2)), np.eye(2), 0.1)
        assert np.all(np.isinf(m.gamma))


class TestBccb:
    def test_identity(self):
        e0 = np.zeros(16)
        e0[0] = 1
        assert_allclose(bccbEigenvalues(e0, 4, 4), 1.0)

    def test_cyclic_shift(self):
        cfg = FrameConfig(M = 4, N = 1, n_cp = 1)
        G = effectiveChannelDense(ChannelRealization.fromPaths([1.0], [1]), cfg)
        k = np.arange(4)
        assert_allclose(bccbEigenvalues(firstColumn(G), 4, 1), np.exp(-2j * np.pi * k / 4), atol = 1e-12)

    @pytest.mark.parametrize("M, N", [(4, 4), (8, 2), (4, 8)])
    def test_dense_diagonalization(self, M, N):
        cfg = FrameConfig(M = M, N = N, n_cp = 1)
        G = effectiveChannelDense(ChannelRealization.fromPaths([1.0, 0.5 - 0.1j], [0, 1]), cfg)
        F = np.kron(sla.dft(N, scale = 'sqrtn'), sla.dft(M, scale = 'sqrtn'))
        assert_allclose(bccbEigenvalues(G[:, 0], M, N), np.diag(F @ G @ F.conj().T), atol = 1e-10)

    def test_wrong_length(self):
        with pytest.raises(DimensionError):
            bccbEigenvalues(np.ones(15), 4, 4)


class TestApproxMse:
    def test_scalar_channel(self, rng):
        c, sigma2 = 0.7 + 0.2j, 0.05
        G = c * np.eye(16)
        _, hist = lsqrSolve(G, randomComplex(rng, 16), sigma2, tol = 0.0)
        m = approxMse(hist, c * np.ones(16), sigma2, 4, 4)
        assert_allclose(m.gamma, sigma2 / abs(c)**2, rtol = 1e-8)

    @pytest.mark.parametrize("iters", [2, 4, 15])
    def test_exact_for_static_channel(self, frame4cp, rng, iters):
        ch = ChannelRealization.fromPaths([1.0, 0.5], [0, 1])
        op = effectiveChannelOperator(ch, frame4cp)
        sigma2 = 0.05
        _, hist = lsqrSolve(op, randomComplex(rng, 16), sigma2, max_iter = iters, tol = 0.0)
        exact = exactMse(exactEqualizerRecursion(hist, op, sigma2), op, sigma2)
        approx = approxMse(hist, bccbEigenvalues(firstColumn(op), 4, 4), sigma2, 4, 4)
        assert_allclose(exact.gamma, approx.gamma, rtol = 1e-6)
        assert_allclose(exact.psi, approx.psi, rtol = 1e-6)

    def test_exact_for_block_fading(self, frame4cp, rng):
        ch = ChannelRealization.fromPaths([1.0, 0.4j], [0, 1], [900.0, -400.0], evolution = "block_fading")
        op = effectiveChannelOperator(ch, frame4cp)
        _, hist = lsqrSolve(op, randomComplex(rng, 16), 0.1, max_iter = 6, tol = 0.0)
        exact = exactMse(exactEqualizerRecursion(hist, op, 0.1), op, 0.1)
        approx = approxMse(hist, bccbEigenvalues(firstColumn(op), 4, 4), 0.1, 4, 4)
        assert_allclose(exact.gamma, approx.gamma, rtol = 1e-6)

    def test_split_adds_up(self, frame4cp, rng):
        ch = ChannelRealization.fromPaths([1.0, 0.5], [0, 1], [300.0, 700.0])
        op = effectiveChannelOperator(ch, frame4cp)
        _, hist = lsqrSolve(op, randomComplex(rng, 16), 0.1, max_iter = 5, tol = 0.0)
        m = approxMse(hist, bccbEigenvalues(firstColumn(op), 4, 4), 0.1, 4, 4)
        assert isinstance(m, ApproxMse)
        assert_allclose(m.nu2, m.interference_sum + m.noise_term)
        assert_allclose(m.gamma, m.nu2 / m.psi**2)


class TestMlsqr:
    def test_equal_power_split(self, frame4cp, rng):
        op = effectiveChannelOperator(ChannelRealization.fromPaths([1.0, 0.5], [0, 1]), frame4cp)
        rep = mlsqr(op, randomComplex(rng, 16), 0.1, 4, 4, rho1 = 0.5, rho2 = 0.5)
        assert_allclose(rep.per_user_gamma, (2 * rep.mse.gamma, 2 * rep.mse.gamma))

    def test_power_ratio(self, frame4cp, rng):
        op = effectiveChannelOperator(ChannelRealization.fromPaths([1.0, 0.5], [0, 1]), frame4cp)
        rep = mlsqr(op, randomComplex(rng, 16), 0.1, 4, 4, rho1 = 0.969, rho2 = 0.031)
        g1, g2 = rep.per_user_gamma
        assert_allclose(g2 / g1, 0.969 / 0.031)

    def test_identity_noiseless(self, rng):
        y = randomComplex(rng, 16)
        rep = mlsqr(np.eye(16), y, 0.0, 4, 4)
        assert_allclose(rep.x_hat, y, atol = 1e-12)
        assert abs(rep.mse.gamma) < 1e-12
        assert rep.breakdown

    def test_exact_mode(self, rng):
        G = wellConditioned(rng, 16)
        rep = mlsqr(G, randomComplex(rng, 16), 0.1, 4, 4, mode = "exact")
        assert rep.mse.gamma.shape == (16,)
        with pytest.raises(SizeCapError):
            mlsqr(G, randomComplex(rng, 16), 0.1, 4, 4, mode = "exact", size_cap = 8)

    @pytest.mark.parametrize("mode", ["approx", "exact"])
    def test_estimate_leaves_solution_untouched(self, frame4cp, rng, mode):
        ch = ChannelRealization.fromPaths([1.0, 0.4 - 0.2j], [0, 1], [700.0, -300.0])
        for G in (effectiveChannelOperator(ch, frame4cp), effectiveChannelDense(ch, frame4cp)):
            y = randomComplex(rng, 16)
            for iters in (1, 4, 15):
                x, hist = lsqrSolve(G, y, 0.05, max_iter = iters, tol = 1e-2)
                rep = mlsqr(G, y, 0.05, 4, 4, rho1 = 0.9, rho2 = 0.1, max_iter = iters, tol = 1e-2, mode = mode)
                assert np.array_equal(rep.x_hat, x)
                assert rep.iterations_used == hist.iterations

    def test_unknown_mode(self, rng):
        with pytest.raises(DomainError):
            mlsqr(np.eye(4), np.ones(4), 0.1, 2, 2, mode = "fast")
