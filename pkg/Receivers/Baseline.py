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

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from Link.Grid import quantize
from Utilities.Errors import DimensionError, DomainError, SizeCapError

logger = logging.getLogger('OTFS-NOMA.Baseline')

MMSE_SIZE_CAP = 4096


@dataclass(frozen = True, eq = False)
class MmseContext:
    W: np.ndarray
    G: np.ndarray
    sigma2: float
    user: int = None


def mmseMatrix(G, sigma2, user = None, size_cap = MMSE_SIZE_CAP):
    """
    MMSE equalizer W = (G^H G + sigma2 I)^-1 G^H, by Cholesky solve.

    Parameters
    ----------
    G : numpy.ndarray
        Dense square effective channel.
    sigma2 : float
        Noise variance, > 0.
    user : int, optional
        Owner of the context, for bookkeeping.
    size_cap : int, optional
        Largest accepted MN. The default is 4096.

    Returns
    -------
    MmseContext

    """
    G = np.asarray(G, dtype = complex)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise DimensionError(f"MMSE equalizer needs a square channel, got shape {G.shape}.")
    if G.shape[0] > size_cap:
        raise SizeCapError(f"MMSE refused for MN = {G.shape[0]} > {size_cap}.")
    if not sigma2 > 0:
        raise DomainError(f"MMSE needs a positive noise variance, got {sigma2}.")

    GH = G.conj().T
    gram = GH @ G + sigma2 * np.eye(G.shape[0])
    W = cho_solve(cho_factor(gram), GH)
    return MmseContext(W = W, G = G, sigma2 = sigma2, user = user)


def mmseSicDetect(y, G, user_i, rho1, rho2, sigma2, c1, c2, context = None):
    """
    MMSE equalization with packet-level SIC, User 1 always decoded first.

    Parameters
    ----------
    y : array of complex
        Received delay-Doppler vector of user_i.
    G : numpy.ndarray
        Dense effective channel of user_i.
    user_i : int
        Receiving user.
    rho1, rho2 : float
        Power fractions.
    sigma2 : float
        Noise variance at this receiver.
    c1, c2 : QamConstellation
        Constellations.
    context : MmseContext, optional
        Precomputed equalizer for (G, sigma2).

    Returns
    -------
    numpy.ndarray
        Detected symbols of user_i.

    """
    if context is None:
        context = mmseMatrix(G, sigma2, user = user_i)
    y = np.asarray(y, dtype = complex).ravel()

    x1 = quantize(context.W @ y / np.sqrt(rho1), c1)
    if user_i == 1:
        return x1

    y2 = y - np.sqrt(rho1) * (context.G @ x1)
    return quantize(context.W @ y2 / np.sqrt(rho2), c2)
