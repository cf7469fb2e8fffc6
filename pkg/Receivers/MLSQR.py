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
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
from scipy.sparse.linalg import LinearOperator, aslinearoperator

from Link.Waveform import firstColumn
from Utilities.Errors import DimensionError, DomainError, SizeCapError

logger = logging.getLogger('OTFS-NOMA.MLSQR')

# Relative size below which a bidiagonalization norm counts as zero
BREAKDOWN_RTOL = 1e-12
EXACT_SIZE_CAP = 256


@dataclass
class LsqrHistory:
    """
    Scalars of the damped Golub-Kahan bidiagonalization and the LSQR
    rotations, indexed by iteration u. Entry 0 holds the initialization
    (alpha_0, beta_0, rhobar_0 = alpha_0, phibar_0 = beta_0); the rotation
    quantities are NaN there.
    """
    alpha: list = field(default_factory = list)
    beta: list = field(default_factory = list)
    rho: list = field(default_factory = list)
    rhobar: list = field(default_factory = list)
    phi: list = field(default_factory = list)
    phibar: list = field(default_factory = list)
    tau: list = field(default_factory = list)
    mu: list = field(default_factory = list)
    c: list = field(default_factory = list)
    s: list = field(default_factory = list)
    residual_norms: list = field(default_factory = list)
    breakdown: bool = False

    @property
    def iterations(self):
        return max(len(self.alpha) - 1, 0)

    @property
    def augmented_norms(self):
        return np.abs(np.asarray(self.phibar))

    def append(self, **kwargs):
        for key, value in kwargs.items():
            getattr(self, key).append(value)

    # Extended accessors used by the equalizer recursion
    def P(self, u):
        if u < 0:
            return 1.0
        return self.phibar[u] * self.rhobar[u]

    def tauAt(self, u):
        return 1.0 if u <= 0 else self.tau[u]

    def muAt(self, u):
        return 0.0 if u <= 0 else self.mu[u]


def lsqrSolve(G, y, sigma2, max_iter = 15, tol = 1e-2):
    """
    Damped LSQR on A = [G; sigma I], b = [y; 0].

    Parameters
    ----------
    G : numpy.ndarray or scipy.sparse.linalg.LinearOperator
        Effective channel (square or tall).
    y : array of complex
        Received vector.
    sigma2 : float
        Damping (noise) variance, >= 0.
    max_iter : int, optional
        Iteration budget U. The default is 15.
    tol : float, optional
        Stop once ||y - G x_u|| <= tol. The default is 1e-2.

    Raises
    ------
    DimensionError
        y does not match the rows of G.
    DomainError
        Negative variance or non-positive iteration budget.

    Returns
    -------
    x : numpy.ndarray
        Damped least-squares estimate.
    hist : LsqrHistory
        Scalar history for the MSE recursions.

    """
    op = aslinearoperator(G)
    y = np.asarray(y, dtype = complex).ravel()
    if y.shape[0] != op.shape[0]:
        raise DimensionError(f"Received vector has length {y.shape[0]}, operator has {op.shape[0]} rows.")
    if sigma2 < 0:
        raise DomainError(f"Damping variance must be non-negative, got {sigma2}.")
    if max_iter < 1:
        raise DomainError(f"Iteration budget must be at least 1, got {max_iter}.")

    sigma = np.sqrt(sigma2)
    hist = LsqrHistory()
    x = np.zeros(op.shape[1], dtype = complex)

    beta = np.linalg.norm(y)
    if beta == 0:
        logger.debug("Zero right-hand side, returning the zero solution.")
        hist.residual_norms.append(0.0)
        return x, hist

    u_top = y / beta
    u_bot = np.zeros(op.shape[1], dtype = complex)
    v = np.asarray(op.rmatvec(u_top)).ravel()
    alpha = np.linalg.norm(v)
    hist.append(alpha = alpha, beta = beta, rho = np.nan, rhobar = alpha, phi = np.nan, phibar = beta,
                tau = np.nan, mu = np.nan, c = np.nan, s = np.nan, residual_norms = beta)
    if alpha == 0:
        logger.warning("LSQR breakdown at initialization: G^H y = 0.")
        hist.breakdown = True
        return x, hist

    v = v / alpha
    w = v.copy()
    phibar, rhobar = beta, alpha
    tiny_beta = BREAKDOWN_RTOL * hist.beta[0]
    tiny_alpha = BREAKDOWN_RTOL * hist.alpha[0]

    for it in range(1, max_iter + 1):
        u_top = np.asarray(op.matvec(v)).ravel() - alpha * u_top
        u_bot = sigma * v - alpha * u_bot
        beta = np.sqrt(np.linalg.norm(u_top)**2 + np.linalg.norm(u_bot)**2)

        broke = beta <= tiny_beta
        if broke:
            beta, alpha = 0.0, 0.0
            v = np.zeros_like(v)
        else:
            u_top, u_bot = u_top / beta, u_bot / beta
            v_next = np.asarray(op.rmatvec(u_top)).ravel() + sigma * u_bot - beta * v
            alpha = np.linalg.norm(v_next)
            broke = alpha <= tiny_alpha
            if broke:
                alpha = 0.0
                v = np.zeros_like(v)
            else:
                v = v_next / alpha

        rho = np.hypot(rhobar, beta)
        c = rhobar / rho
        s = beta / rho
        theta = s * alpha
        phi = c * phibar
        tau = phi / rho
        mu = theta / rho
        phibar = s * phibar
        rhobar = -c * alpha

        x = x + tau * w
        w = v - mu * w

        residual = np.linalg.norm(y - np.asarray(op.matvec(x)).ravel())
        hist.append(alpha = alpha, beta = beta, rho = rho, rhobar = rhobar, phi = phi, phibar = phibar,
                    tau = tau, mu = mu, c = c, s = s, residual_norms = residual)

        if broke:
            logger.warning(f"LSQR breakdown at iteration {it}, exact solution reached.")
            hist.breakdown = True
            break
        if residual <= tol:
            logger.debug(f"LSQR converged after {it} iterations, residual {residual:.3e}.")
            break

    return x, hist


def _equalizerRecursion(hist, applyGram, one):
    """
    Three-term recursion for the LSQR-equivalent equalizer L_u, run either
    on dense matrices or on eigenvalue vectors (applyGram multiplies by
    A^H A, one is the identity in the same representation).
    """
    zero = np.zeros_like(one)
    U = hist.iterations
    if U == 0:
        return zero

    L3, L2, L1 = zero, zero, hist.tauAt(1) / hist.P(0) * one
    for u in range(2, U + 1):
        tau = hist.tauAt(u)
        a = tau * hist.P(u - 2) * (1 + hist.muAt(u - 1)**2) / (hist.tauAt(u - 1) * hist.P(u - 1))
        b = tau / hist.P(u - 1)
        g = tau * hist.muAt(u - 2)**2 * hist.P(u - 3) / (hist.tauAt(u - 2) * hist.P(u - 1))

        d1 = L1 - L2
        d2 = L2 - L3
        L3, L2, L1 = L2, L1, L1 + a * d1 - b * applyGram(d1) - g * d2
    return L1


def _dense(G):
    if isinstance(G, LinearOperator):
        return G.matmat(np.eye(G.shape[1], dtype = complex))
    return np.asarray(G, dtype = complex)


def exactEqualizerRecursion(hist, G, sigma2, size_cap = EXACT_SIZE_CAP):
    """
    Equalization matrix L with x_U = L G^H y, from the LSQR scalar history.

    Parameters
    ----------
    hist : LsqrHistory
        History returned by lsqrSolve.
    G : numpy.ndarray or LinearOperator
        Effective channel, densified if needed.
    sigma2 : float
        Damping variance used in the solve.
    size_cap : int, optional
        Largest accepted MN. The default is 256.

    Raises
    ------
    SizeCapError
        If MN exceeds size_cap.

    Returns
    -------
    numpy.ndarray
        MN x MN equalization matrix.

    """
    n = G.shape[1]
    if n > size_cap:
        raise SizeCapError(f"Exact MSE refused for MN = {n} > {size_cap}.")
    Gd = _dense(G)
    gram = Gd.conj().T @ Gd + sigma2 * np.eye(n)
    return _equalizerRecursion(hist, lambda X: gram @ X, np.eye(n, dtype = complex))


@dataclass
class ExactMse:
    psi: np.ndarray
    nu2: np.ndarray
    gamma: np.ndarray


@dataclass
class ApproxMse:
    psi: float
    nu2: float
    gamma: float
    interference_sum: float
    noise_term: float


def _ratio(nu2, psi):
    psi = np.asarray(psi, dtype = float)
    nu2 = np.asarray(nu2, dtype = float)
    with np.errstate(divide = 'ignore', invalid = 'ignore'):
        gamma = np.where(psi == 0, np.inf, nu2 / np.where(psi == 0, 1, psi)**2)
    if np.any(psi == 0):
        logger.warning("Zero post-equalization gain, MSE reported as +inf.")
    return gamma


def exactMse(L, G, sigma2):
    """
    Per-symbol post-equalization gain, interference-plus-noise variance and MSE.

    With B = L G^H G and C = B L^H, psi[n] = B[n, n],
    nu2[n] = sum_{m != n} |B[n, m]|^2 + C[n, n] sigma2 and gamma = nu2 / psi^2.
    """
    Gd = _dense(G)
    B = L @ Gd.conj().T @ Gd
    C = B @ L.conj().T
    diag = np.diag(B)
    psi = diag.real
    interference = np.sum(np.abs(B)**2, axis = 1) - np.abs(diag)**2
    nu2 = interference + np.diag(C).real * sigma2
    return ExactMse(psi = psi, nu2 = nu2, gamma = _ratio(nu2, psi))


def bccbEigenvalues(first_column, M, N):
    """
    Eigenvalues of a BCCB matrix from its first column.

    Parameters
    ----------
    first_column : array of complex
        First column of G, length MN.
    M, N : int
        Grid dimensions.

    Returns
    -------
    numpy.ndarray
        Diagonal of (F_N kron F_M) G (F_N kron F_M)^H as a length-MN vector,
        column-major over the M x N grid.

    """
    g = np.asarray(first_column, dtype = complex).ravel()
    if g.shape[0] != M * N:
        raise DimensionError(f"First column has length {g.shape[0]}, expected {M * N}.")
    grid = g.reshape((M, N), order = 'F')
    return sfft.fft2(grid).ravel(order = 'F')


def _firstRow(eigs, M, N):
    """First row of F^H diag(eigs) F, F = F_N kron F_M."""
    grid = np.asarray(eigs).reshape((M, N), order = 'F')
    return (sfft.fft2(grid) / (M * N)).ravel(order = 'F')


def approxMse(hist, eig_G, sigma2, M, N):
    """
    Low-complexity MSE assuming G is BCCB: the equalizer recursion runs on
    eigenvalues and one row of B and C is recovered by a 2-D DFT.

    Returns
    -------
    ApproxMse

    """
    eig_G = np.asarray(eig_G, dtype = complex)
    power = np.abs(eig_G)**2
    eig_A = power + sigma2
    eig_L = _equalizerRecursion(hist, lambda v: eig_A * v, np.ones(M * N, dtype = complex))

    eig_B = eig_L * power
    eig_C = np.abs(eig_L)**2 * power

    row_B = _firstRow(eig_B, M, N)
    psi = float(row_B[0].real)
    interference = float(np.sum(np.abs(row_B[1:])**2))
    noise = float(np.mean(eig_C).real) * sigma2
    nu2 = interference + noise
    return ApproxMse(psi = psi, nu2 = nu2, gamma = float(_ratio(nu2, psi)),
                     interference_sum = interference, noise_term = noise)


@dataclass
class SolverReport:
    x_hat: np.ndarray
    iterations_used: int
    residual_norm: float
    mse: object
    per_user_gamma: tuple = None
    history: LsqrHistory = None

    @property
    def breakdown(self):
        return self.history.breakdown if self.history is not None else False


def mlsqr(G, y, sigma2, M, N, rho1 = None, rho2 = None, max_iter = 15, tol = 1e-2, mode = "approx",
          first_column = None, size_cap = EXACT_SIZE_CAP):
    """
    Modified LSQR: damped LSQR equalization plus the post-equalization MSE.

    Parameters
    ----------
    G : numpy.ndarray or LinearOperator
        Effective delay-Doppler channel.
    y : array of complex
        Received delay-Doppler vector.
    sigma2 : float
        Noise variance.
    M, N : int
        Grid dimensions.
    rho1, rho2 : float, optional
        Power fractions. When given, per-user MSEs gamma / rho_j are reported.
    max_iter : int, optional
        LSQR iteration budget U. The default is 15.
    tol : float, optional
        Residual tolerance. The default is 1e-2.
    mode : str, optional
        'approx' (eigenvalue domain, production path) or 'exact' (dense,
        size-capped). The default is "approx".
    first_column : array of complex, optional
        First column of G; computed with one operator application if omitted.
    size_cap : int, optional
        Largest MN accepted in exact mode.

    Returns
    -------
    SolverReport

    """
    x, hist = lsqrSolve(G, y, sigma2, max_iter = max_iter, tol = tol)

    if hist.iterations == 0:
        # Nothing to equalize, report zero gain
        mse = ApproxMse(psi = 0.0, nu2 = 0.0, gamma = np.inf, interference_sum = 0.0, noise_term = 0.0) \
            if mode == "approx" else ExactMse(psi = np.zeros(M * N), nu2 = np.zeros(M * N), gamma = np.full(M * N, np.inf))
    elif mode == "approx":
        if first_column is None:
            first_column = firstColumn(G)
        mse = approxMse(hist, bccbEigenvalues(first_column, M, N), sigma2, M, N)
    elif mode == "exact":
        L = exactEqualizerRecursion(hist, G, sigma2, size_cap = size_cap)
        mse = exactMse(L, G, sigma2)
    else:
        raise DomainError(f"Unknown MSE mode '{mode}', expected 'approx' or 'exact'.")

    per_user = None
    if rho1 is not None and rho2 is not None:
        per_user = (mse.gamma / rho1, mse.gamma / rho2)

    return SolverReport(x_hat = x, iterations_used = hist.iterations, residual_norm = hist.residual_norms[-1],
                        mse = mse, per_user_gamma = per_user, history = hist)
