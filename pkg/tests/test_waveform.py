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
from Link.Channel import ChannelRealization, buildTimeDomainMatrix
from Link.Grid import FrameConfig
from Link.Waveform import (buildEffectiveChannel, demodulationMatrix, effectiveChannelDense,
                           effectiveChannelOperator, firstColumn, modulationMatrix, otfsDemodulate,
                           otfsModulate, superimpose)
from Utilities.Errors import DimensionError, DomainError


def dftKron(M, N):
    return np.kron(sla.dft(N, scale = 'sqrtn'), sla.dft(M, scale = 'sqrtn'))


class TestModulation:
    def test_single_doppler_bin_is_identity(self, rng):
        cfg = FrameConfig(M = 4, N = 1)
        x = randomComplex(rng, 4)
        assert_allclose(otfsModulate(x, cfg), x, atol = 1e-12)

    def test_unitary_without_cp(self, frame4, rng):
        x = randomComplex(rng, 16)
        assert abs(np.linalg.norm(otfsModulate(x, frame4)) - np.linalg.norm(x)) < 1e-12

    def test_hand_evaluated_cp(self):
        cfg = FrameConfig(M = 2, N = 2, n_cp = 1)
        s = otfsModulate(np.array([1, 0, 0, 0]), cfg)
        assert_allclose(s, np.array([0, 1, 0, 0, 1, 0]) / np.sqrt(2), atol = 1e-15)

    def test_round_trip(self, rng):
        cfg = FrameConfig(M = 8, N = 4, n_cp = 3)
        x = randomComplex(rng, 32)
        assert_allclose(otfsDemodulate(otfsModulate(x, cfg), cfg), x, atol = 1e-12)

    def test_constant_input(self):
        cfg = FrameConfig(M = 1, N = 2)
        assert_allclose(otfsDemodulate(np.ones(2), cfg), [np.sqrt(2), 0], atol = 1e-15)

    def test_batched_frames(self, frame4cp, rng):
        X = randomComplex(rng, 16, 3)
        S = otfsModulate(X, frame4cp)
        for j in range(3):
            assert_allclose(S[:, j], otfsModulate(X[:, j], frame4cp))
        assert_allclose(otfsDemodulate(S, frame4cp), X, atol = 1e-12)

    def test_kronecker_forms(self, frame4cp):
        F = sla.dft(4, scale = 'sqrtn')
        A_cp = np.vstack([np.eye(4)[-1:], np.eye(4)])
        assert_allclose(modulationMatrix(frame4cp), np.kron(F.conj().T, A_cp), atol = 1e-12)
        R_cp = np.hstack([np.zeros((4, 1)), np.eye(4)])
        assert_allclose(demodulationMatrix(frame4cp), np.kron(F, R_cp), atol = 1e-12)

    def test_white_noise_stays_white(self, frame4cp, rng):
        sigma2 = 0.3
        r = np.sqrt(sigma2 / 2) * randomComplex(rng, frame4cp.frame_len(), 10000)
        y = otfsDemodulate(r, frame4cp)
        cov = y @ y.conj().T / y.shape[1]
        assert_allclose(np.diag(cov).real, sigma2, rtol = 0.05)
        off = cov - np.diag(np.diag(cov))
        assert np.max(np.abs(off)) < 0.05 * sigma2

    def test_wrong_length(self, frame4):
        with pytest.raises(DimensionError):
            otfsModulate(np.ones(15), frame4)
        with pytest.raises(DimensionError):
            otfsDemodulate(np.ones(15), frame4)


class TestSuperimpose:
    def test_power_fractions_checked(self):
        with pytest.raises(DomainError):
            superimpose(np.ones(4), np.ones(4), 1.0, 0.0)
        with pytest.raises(DomainError):
            superimpose(np.ones(4), np.ones(4), 0.3, 0.7)
        with pytest.raises(DomainError):
            superimpose(np.ones(4), np.ones(4), 0.8, 0.3)

    def test_silent_second_user(self, rng):
        s1 = randomComplex(rng, 8)
        assert_allclose(superimpose(s1, np.zeros(8), 0.8, 0.2), np.sqrt(0.8) * s1)

    def test_power_conservation(self, qam4, rng):
        s1 = qam4.randomSymbols(1000 * 16, rng)
        s2 = qam4.randomSymbols(1000 * 16, rng)
        s = superimpose(s1, s2, 0.9, 0.1)
        assert abs(np.mean(np.abs(s)**2) - np.mean(np.abs(s1)**2)) < 0.02

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            superimpose(np.ones(4), np.ones(5), 0.8, 0.2)


class TestEffectiveChannel:
    def test_identity(self, frame4cp):
        L = frame4cp.frame_len()
        assert_allclose(buildEffectiveChannel(np.eye(L), frame4cp), np.eye(16), atol = 1e-12)
        assert_allclose(buildEffectiveChannel(0.3j * np.eye(L), frame4cp), 0.3j * np.eye(16), atol = 1e-12)

    def test_static_two_tap_is_bccb(self, frame4cp):
        ch = ChannelRealization.fromPaths([1.0, 0.5], [0, 1])
        G = buildEffectiveChannel(buildTimeDomainMatrix(ch, frame4cp), frame4cp)
        F = dftKron(4, 4)
        D = F @ G @ F.conj().T
        assert np.max(np.abs(D - np.diag(np.diag(D)))) < 1e-10

    def test_operator_matches_dense(self, frame4cp, rng):
        ch = ChannelRealization.fromPaths(randomComplex(rng, 3), [0, 1, 1], [300.0, -800.0, 1200.0])
        dense = buildEffectiveChannel(buildTimeDomainMatrix(ch, frame4cp), frame4cp)
        assert_allclose(effectiveChannelDense(ch, frame4cp), dense, atol = 1e-12)
        assert_allclose(firstColumn(effectiveChannelOperator(ch, frame4cp)), dense[:, 0], atol = 1e-12)
        assert_allclose(firstColumn(dense), dense[:, 0])

    def test_operator_adjoint(self, frame4cp, rng):
        ch = ChannelRealization.fromPaths(randomComplex(rng, 2), [0, 1], [500.0, -150.0])
        op = effectiveChannelOperator(ch, frame4cp)
        x, y = randomComplex(rng, 16), randomComplex(rng, 16)
        assert abs(np.vdot(y, op.matvec(x)) - np.vdot(op.rmatvec(y), x)) < 1e-10
        G = effectiveChannelDense(ch, frame4cp)
        assert_allclose(op.rmatvec(y), G.conj().T @ y, atol = 1e-12)

    def test_bad_shape(self, frame4):
        with pytest.raises(DimensionError):
            buildEffectiveChannel(np.eye(5), frame4)
