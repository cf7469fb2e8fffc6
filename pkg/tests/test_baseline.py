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
from numpy.testing import assert_allclose

from conftest import randomComplex
from Receivers.Baseline import mmseMatrix, mmseSicDetect
from Utilities.Config import ftpaAllocate
from Utilities.Errors import DimensionError, DomainError, SizeCapError

RHO1, RHO2 = ftpaAllocate(10.0, 25.0)


class TestMmseMatrix:
    def test_identity(self):
        assert_allclose(mmseMatrix(np.eye(4), 0.5).W, np.eye(4) * 2 / 3)

    def test_scaled_identity(self):
        c, sigma2 = 0.6 + 0.8j, 0.3
        assert_allclose(mmseMatrix(c * np.eye(3), sigma2).W, np.conj(c) / (abs(c)**2 + sigma2) * np.eye(3))

    def test_defining_property(self, rng):
        G = randomComplex(rng, 8, 8)
        sigma2 = 0.2
        W = mmseMatrix(G, sigma2).W
        residual = W @ (G.conj().T @ G + sigma2 * np.eye(8)) - G.conj().T
        assert np.linalg.norm(residual, 'fro') <= 1e-8

    def test_rejects(self):
        with pytest.raises(DimensionError):
            mmseMatrix(np.ones((3, 4)), 0.1)
        with pytest.raises(DomainError):
            mmseMatrix(np.eye(3), 0.0)
        with pytest.raises(SizeCapError):
            mmseMatrix(np.eye(8), 0.1, size_cap = 4)


class TestMmseSic:
    def test_identity_noiseless(self, qam16, rng):
        x1, x2 = qam16.randomSymbols(64, rng), qam16.randomSymbols(64, rng)
        y = np.sqrt(RHO1) * x1 + np.sqrt(RHO2) * x2
        G = np.eye(64)
        assert_allclose(mmseSicDetect(y, G, 1, RHO1, RHO2, 1e-12, qam16, qam16), x1)
        assert_allclose(mmseSicDetect(y, G, 2, RHO1, RHO2, 1e-12, qam16, qam16), x2)

    def test_high_snr_well_conditioned(self, qam4, rng):
        G = np.eye(16) + 0.1 * randomComplex(rng, 16, 16)
        sigma2 = 1e-6
        ctx = mmseMatrix(G, sigma2, user = 2)
        for _ in range(20):
            x1, x2 = qam4.randomSymbols(16, rng), qam4.randomSymbols(16, rng)
            y = G @ (np.sqrt(RHO1) * x1 + np.sqrt(RHO2) * x2) + np.sqrt(sigma2 / 2) * randomComplex(rng, 16)
            assert_allclose(mmseSicDetect(y, G, 1, RHO1, RHO2, sigma2, qam4, qam4, context = ctx), x1)
            assert_allclose(mmseSicDetect(y, G, 2, RHO1, RHO2, sigma2, qam4, qam4, context = ctx), x2)

    def test_context_reuse(self, qam4, rng):
        G = randomComplex(rng, 16, 16)
        y = randomComplex(rng, 16)
        ctx = mmseMatrix(G, 0.1)
        assert_allclose(mmseSicDetect(y, G, 2, RHO1, RHO2, 0.1, qam4, qam4, context = ctx),
                        mmseSicDetect(y, G, 2, RHO1, RHO2, 0.1, qam4, qam4))
