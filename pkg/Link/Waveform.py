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

import numpy as np
import scipy.fft as sfft
from scipy.sparse.linalg import LinearOperator

from Link.Channel import applyLtvChannel, applyLtvChannelAdjoint
from Utilities.Errors import DimensionError, DomainError

logger = logging.getLogger('OTFS-NOMA.Waveform')


def _checkLength(v, expected, what):
    if v.shape[0] != expected:
        raise DimensionError(f"{what} has length {v.shape[0]}, expected {expected}.")


def otfsModulate(x, cfg):
    """
    OTFS modulation on top of CP-OFDM, s = (F_N^H kron A_cp) x.

    The delay-Doppler symbols are laid out column-major on the M x N grid,
    every row gets an N-point unitary IDFT and every length-M column block
    gets the last n_cp samples prepended.

    Parameters
    ----------
    x : array of complex
        Delay-Doppler frame(s) of length MN. A 2-D input is treated as a
        batch of frames stored as columns.
    cfg : FrameConfig
        Frame geometry.

    Returns
    -------
    numpy.ndarray
        Time-domain samples of length N(M + n_cp), batched like x.

    """
    x = np.asarray(x, dtype = complex)
    _checkLength(x, cfg.symbols, "Delay-Doppler frame")
    rest = x.shape[1:]

    X = x.reshape((cfg.M, cfg.N) + rest, order = 'F')
    S = sfft.ifft(X, axis = 1, norm = 'ortho')
    S = np.concatenate([S[cfg.M - cfg.n_cp:], S], axis = 0)
    return S.reshape((cfg.frame_len(),) + rest, order = 'F')


def otfsDemodulate(r, cfg):
    """
    Inverse of otfsModulate for a received signal, y = (F_N kron R_cp) r.
    """
    r = np.asarray(r, dtype = complex)
    _checkLength(r, cfg.frame_len(), "Time-domain signal")
    rest = r.shape[1:]

    R = r.reshape((cfg.block_len, cfg.N) + rest, order = 'F')[cfg.n_cp:]
    Y = sfft.fft(R, axis = 1, norm = 'ortho')
    return Y.reshape((cfg.symbols,) + rest, order = 'F')


def _modulateAdjoint(r, cfg):
    rest = r.shape[1:]
    R = r.reshape((cfg.block_len, cfg.N) + rest, order = 'F')
    X = R[cfg.n_cp:].copy()
    # CP samples were copies of the block tail
    X[cfg.M - cfg.n_cp:] += R[:cfg.n_cp]
    X = sfft.fft(X, axis = 1, norm = 'ortho')
    return X.reshape((cfg.symbols,) + rest, order = 'F')


def _demodulateAdjoint(y, cfg):
    rest = y.shape[1:]
    Y = y.reshape((cfg.M, cfg.N) + rest, order = 'F')
    S = sfft.ifft(Y, axis = 1, norm = 'ortho')
    S = np.concatenate([np.zeros((cfg.n_cp,) + S.shape[1:], dtype = complex), S], axis = 0)
    return S.reshape((cfg.frame_len(),) + rest, order = 'F')


def superimpose(s1, s2, rho1, rho2):
    """
    Power-domain superposition s = sqrt(rho1) s1 + sqrt(rho2) s2.

    Parameters
    ----------
    s1, s2 : array of complex
        Signals of User 1 (weak, larger share) and User 2 (strong).
    rho1, rho2 : float
        Power fractions with rho1 + rho2 = 1 and rho1 > rho2 > 0.

    """
    if abs(rho1 + rho2 - 1) > 1e-12:
        raise DomainError(f"Power fractions must sum to one, got {rho1} + {rho2}.")
    if not rho1 > rho2 > 0:
        raise DomainError(f"Power fractions must satisfy rho1 > rho2 > 0, got {rho1}, {rho2}.")
    s1 = np.asarray(s1, dtype = complex)
    s2 = np.asarray(s2, dtype = complex)
    if s1.shape != s2.shape:
        raise DimensionError(f"Cannot superimpose signals of shapes {s1.shape} and {s2.shape}.")
    return np.sqrt(rho1) * s1 + np.sqrt(rho2) * s2


def modulationMatrix(cfg):
    return otfsModulate(np.eye(cfg.symbols, dtype = complex), cfg)


def demodulationMatrix(cfg):
    return otfsDemodulate(np.eye(cfg.frame_len(), dtype = complex), cfg)


def buildEffectiveChannel(H, cfg):
    """
    Dense effective delay-Doppler channel G = (F_N kron R_cp) H (F_N^H kron A_cp).

    Parameters
    ----------
    H : numpy.ndarray
        Time-domain channel matrix of side N(M + n_cp).
    cfg : FrameConfig

    Returns
    -------
    numpy.ndarray
        MN x MN complex matrix.

    """
    H = np.asarray(H, dtype = complex)
    L = cfg.frame_len()
    if H.shape != (L, L):
        raise DimensionError(f"Time-domain channel has shape {H.shape}, expected {(L, L)}.")
    return otfsDemodulate(H @ modulationMatrix(cfg), cfg)


def effectiveChannelOperator(ch, cfg):
    """
    Matrix-free effective channel built from the FFT-structured pieces.

    Parameters
    ----------
    ch : ChannelRealization
    cfg : FrameConfig

    Returns
    -------
    scipy.sparse.linalg.LinearOperator
        Square operator of side MN with matvec = G x and rmatvec = G^H y.

    """
    def matvec(x):
        return otfsDemodulate(applyLtvChannel(otfsModulate(x, cfg), ch, cfg), cfg)

    def rmatvec(y):
        return _modulateAdjoint(applyLtvChannelAdjoint(_demodulateAdjoint(y, cfg), ch, cfg), cfg)

    return LinearOperator(shape = (cfg.symbols, cfg.symbols), matvec = matvec, rmatvec = rmatvec,
                          matmat = matvec, rmatmat = rmatvec, dtype = complex)


def effectiveChannelDense(ch, cfg):
    """Dense G obtained by pushing the identity through the operator."""
    return effectiveChannelOperator(ch, cfg).matmat(np.eye(cfg.symbols, dtype = complex))


def firstColumn(G):
    """First column of G, given as a dense matrix or a LinearOperator."""
    if isinstance(G, LinearOperator):
        e0 = np.zeros(G.shape[1], dtype = complex)
        e0[0] = 1
        return np.asarray(G.matvec(e0)).ravel()
    return np.asarray(G)[:, 0].copy()
