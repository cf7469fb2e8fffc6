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
import pandas as pd
from scipy.sparse.linalg import aslinearoperator

from Link.Grid import quantize, unreliableZoneContains
from Link.Waveform import firstColumn
from Receivers.MLSQR import mlsqr
from Receivers.Thresholds import (MIN_GAMMA, initTracker, naiveThreshold, optimizeCrossThreshold,
                                  qamProbs, solveOwnThreshold, ProbTriple)
from Utilities.Errors import ConfigError, DimensionError

POLICIES = ("optimized", "naive")


@dataclass(frozen = True)
class DetectorConfig:
    """
    Settings of the iterative RZ detector.

    Parameters
    ----------
    user_i : int
        Receiving user, 1 (weak, higher power share) or 2 (strong).
    K : int
        Maximum number of detection iterations.
    threshold_policy : str
        'optimized' (MSE-tracking thresholds) or 'naive' (linear shrink).
    naive_start_factor : float
        First naive threshold in units of d.
    zone_rule : str
        'and' or 'or', see unreliableZoneContains.
    U : int
        mLSQR iteration budget.
    eps : float
        mLSQR residual tolerance.
    refresh_gamma_from_solver : bool
        Replace the tracked MSE by the solver estimate every iteration.
    empirical_probabilities : bool
        Rescale the analytic detection probabilities to the observed
        reliable fraction before feeding the tracker.

    """
    user_i: int = 1
    K: int = 10
    threshold_policy: str = "optimized"
    naive_start_factor: float = 2.0
    zone_rule: str = "or"
    U: int = 15
    eps: float = 1e-2
    refresh_gamma_from_solver: bool = False
    empirical_probabilities: bool = False

    def __post_init__(self):
        if self.user_i not in (1, 2):
            raise ConfigError(f"Receiving user must be 1 or 2, got {self.user_i}.")
        if self.K < 1 or self.U < 1:
            raise ConfigError(f"Iteration counts must be positive, got K={self.K}, U={self.U}.")
        if self.threshold_policy not in POLICIES:
            raise ConfigError(f"Unknown threshold policy '{self.threshold_policy}', expected one of {POLICIES}.")
        if self.naive_start_factor <= 0:
            raise ConfigError(f"Naive start factor must be positive, got {self.naive_start_factor}.")
        if self.zone_rule not in ("and", "or"):
            raise ConfigError(f"Unknown zone rule '{self.zone_rule}'.")


@dataclass
class DetectionResult:
    x_hat_user: np.ndarray
    x_hat_other: np.ndarray
    iterations_used: int
    diagnostics: list = field(default_factory = list)
    undetected_at_exit: int = 0
    detected1: np.ndarray = None
    detected2: np.ndarray = None

    def diagnosticsFrame(self):
        scalar = [{k: v for k, v in row.items() if np.ndim(v) == 0} for row in self.diagnostics]
        return pd.DataFrame.from_dict(scalar)


def rzPartition(x_tilde, indices, T, c, rule = "or"):
    """
    Split candidate positions into reliable ones (outside the unreliable
    zone) and quantize those.

    Returns
    -------
    reliable : numpy.ndarray of int
    quantized : numpy.ndarray of complex

    """
    indices = np.asarray(indices, dtype = int)
    if indices.size == 0:
        return indices, np.zeros(0, dtype = complex)
    values = np.asarray(x_tilde)[indices]
    keep = ~np.atleast_1d(unreliableZoneContains(values, T, c, rule = rule))
    reliable = indices[keep]
    return reliable, np.atleast_1d(quantize(values[keep], c))


def cancelInterference(y_k, G, xq1, xq2, rho1, rho2):
    """y_k - G (sqrt(rho1) xq1 + sqrt(rho2) xq2)."""
    s = np.sqrt(rho1) * np.asarray(xq1) + np.sqrt(rho2) * np.asarray(xq2)
    if not np.any(s):
        return np.asarray(y_k, dtype = complex).copy()
    return np.asarray(y_k, dtype = complex) - np.asarray(aslinearoperator(G).matvec(s)).ravel()


def _empirical(p, reliable, candidates):
    if candidates == 0:
        return p
    fraction = reliable / candidates
    if p.p_detected > 0:
        scale = fraction / p.p_detected
        pc, pe = p.p_correct * scale, p.p_error * scale
    else:
        pc, pe = fraction, 0.0
    return ProbTriple(pc, pe, max(1 - pc - pe, 0.0))


class RZDetector():
    def __init__(self, cfg, c1, c2, M, N):
        """
        Iterative reliable-zone detector with symbol-level interference
        cancellation.

        Parameters
        ----------
        cfg : DetectorConfig
            Detector settings.
        c1, c2 : QamConstellation
            Constellations of User 1 and User 2.
        M, N : int
            Delay-Doppler grid dimensions.

        Returns
        -------
        None.

        """
        self.logger = logging.getLogger('OTFS-NOMA.Detector')
        self.logger.propagate = True
        self.logger.setLevel(logging.NOTSET)
        self.logger.debug("Logger initialized.")

        self.cfg = cfg
        self.c1 = c1
        self.c2 = c2
        self.M = M
        self.N = N

    def _constellation(self, user):
        return self.c1 if user == 1 else self.c2

    def optimizedThresholds(self, tracker, k):
        """(T1, T2) at iteration k from the tracked MSEs."""
        i = self.cfg.user_i
        c_own = self._constellation(i)
        comp = tracker.users[i]

        if not np.isfinite(comp.gamma):
            f = self.cfg.naive_start_factor
            return f * self.c1.d, f * self.c2.d

        T_own = solveOwnThreshold(max(comp.gamma, comp.w), comp.w, c_own, i,
                                  rho_ratio = tracker.rho_ratio, c_other = self.c2)
        T_cross = optimizeCrossThreshold(tracker, k, i)
        return (T_own, T_cross) if i == 1 else (T_cross, T_own)

    def detect(self, G, y, rho1, rho2, sigma2, first_column = None):
        """
        Detect the symbols of the receiving user.

        Parameters
        ----------
        G : numpy.ndarray or LinearOperator
            Effective channel of the receiving user.
        y : array of complex
            Received delay-Doppler vector.
        rho1, rho2 : float
            Power fractions.
        sigma2 : float
            Noise variance at this receiver.
        first_column : array of complex, optional
            First column of G, computed if omitted.

        Returns
        -------
        DetectionResult

        """
        cfg = self.cfg
        MN = self.M * self.N
        y = np.asarray(y, dtype = complex).ravel()
        if y.shape[0] != MN or G.shape != (MN, MN):
            raise DimensionError(f"Received vector of length {y.shape[0]} and channel of shape {G.shape} "
                                 f"do not match the {self.M} x {self.N} grid.")
        if first_column is None:
            first_column = firstColumn(G)

        undet1 = np.ones(MN, dtype = bool)
        undet2 = np.ones(MN, dtype = bool)
        x_hat1 = np.zeros(MN, dtype = complex)
        x_hat2 = np.zeros(MN, dtype = complex)
        sr1, sr2 = np.sqrt(rho1), np.sqrt(rho2)

        y_k = y.copy()
        tracker = None
        diagnostics = []
        last_xq1 = np.zeros(MN, dtype = complex)

        for k in range(1, cfg.K + 1):
            report = mlsqr(G, y_k, sigma2, self.M, self.N, rho1 = rho1, rho2 = rho2,
                           max_iter = cfg.U, tol = cfg.eps, mode = "approx", first_column = first_column)
            x_sup = report.x_hat
            x1_tilde = x_sup / sr1
            x2_tilde = x_sup / sr2

            cand1 = np.flatnonzero(undet1)
            # User 2 symbols only once their User 1 partner is out
            cand2 = np.flatnonzero(undet2 & ~undet1)

            if cfg.threshold_policy == "optimized":
                if tracker is None:
                    tracker = initTracker(report, rho1, rho2, cfg.user_i, self.c1, self.c2)
                elif cfg.refresh_gamma_from_solver:
                    tracker.refresh(report.per_user_gamma)
                T1, T2 = self.optimizedThresholds(tracker, k)
            else:
                T1 = naiveThreshold(k, cfg.K, self.c1.d, cfg.naive_start_factor)
                T2 = naiveThreshold(k, cfg.K, self.c2.d, cfg.naive_start_factor)

            rel1, q1 = rzPartition(x1_tilde, cand1, T1, self.c1, cfg.zone_rule)
            rel2, q2 = rzPartition(x2_tilde, cand2, T2, self.c2, cfg.zone_rule)

            if tracker is not None:
                gamma1, gamma2 = tracker.gamma1, tracker.gamma2
                p1 = qamProbs(1, T1, max(gamma1, MIN_GAMMA), self.c1, self.c2, tracker.rho_ratio) \
                    if np.isfinite(gamma1) else ProbTriple(0.0, 0.0, 1.0)
                p2 = qamProbs(2, T2, max(gamma2, MIN_GAMMA), self.c1, self.c2, tracker.rho_ratio) \
                    if np.isfinite(gamma2) else ProbTriple(0.0, 0.0, 1.0)
                if cfg.empirical_probabilities:
                    p1 = _empirical(p1, rel1.size, cand1.size)
                    p2 = _empirical(p2, rel2.size, cand2.size)
                tracker.advance(p1, p2)
            else:
                gamma1, gamma2 = report.per_user_gamma

            xq1 = np.zeros(MN, dtype = complex)
            xq2 = np.zeros(MN, dtype = complex)
            xq1[rel1] = q1
            xq2[rel2] = q2
            x_hat1[rel1] = q1
            x_hat2[rel2] = q2
            undet1[rel1] = False
            undet2[rel2] = False
            last_xq1 = xq1

            y_k = cancelInterference(y_k, G, xq1, xq2, rho1, rho2)

            diagnostics.append({
                "k": k,
                "T1": T1,
                "T2": T2,
                "new_reliable_1": rel1.size,
                "new_reliable_2": rel2.size,
                "remaining_1": int(undet1.sum()),
                "remaining_2": int(undet2.sum()),
                "gamma1": gamma1,
                "gamma2": gamma2,
                "solver_iterations": report.iterations_used,
                "reliable_1": rel1,
                "reliable_2": rel2
            })
            self.logger.debug(f"k={k}: T1={T1:.4f}, T2={T2:.4f}, reliable {rel1.size}/{cand1.size} (user 1), "
                              f"{rel2.size}/{cand2.size} (user 2)")

            undet_own = undet1 if cfg.user_i == 1 else undet2
            if not undet_own.any():
                break

        # Force a decision on whatever is left, using the last solve
        if cfg.user_i == 1:
            left = np.flatnonzero(undet1)
            if left.size:
                x_hat1[left] = quantize(x1_tilde[left], self.c1)
        else:
            left = np.flatnonzero(undet2)
            if left.size:
                sup = x_sup - sr1 * last_xq1
                partner = undet1[left]
                guess1 = np.zeros(left.size, dtype = complex)
                if partner.any():
                    guess1[partner] = quantize(x1_tilde[left[partner]], self.c1)
                x_hat2[left] = quantize((sup[left] - sr1 * guess1) / sr2, self.c2)
        if left.size:
            self.logger.debug(f"{left.size} symbols of user {cfg.user_i} force-quantized at exit.")

        own, other = (x_hat1, x_hat2) if cfg.user_i == 1 else (x_hat2, x_hat1)
        return DetectionResult(x_hat_user = own, x_hat_other = other, iterations_used = len(diagnostics),
                               diagnostics = diagnostics, undetected_at_exit = int(left.size),
                               detected1 = ~undet1, detected2 = ~undet2)
