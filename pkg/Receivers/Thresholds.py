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
from scipy.optimize import brentq
from scipy.special import erfc

from Utilities.Errors import BracketError, DomainError

logger = logging.getLogger('OTFS-NOMA.Thresholds')

# MSE values are floored here so the noiseless limit stays inside the
# domain of the probability model
MIN_GAMMA = 1e-12


def gaussianQ(x):
    """Gaussian tail probability Q(x) = erfc(x / sqrt(2)) / 2."""
    q = 0.5 * erfc(np.asarray(x, dtype = float) / np.sqrt(2))
    return float(q) if np.ndim(q) == 0 else q


def _pdf(z):
    return np.exp(-0.5 * np.asarray(z)**2) / np.sqrt(2 * np.pi)


def _sigma(gamma):
    if not gamma > 0:
        raise DomainError(f"MSE must be positive, got {gamma}.")
    return np.sqrt(gamma / 2)


def _clamp(p, what):
    if p < 0 or p > 1:
        logger.debug(f"{what} = {p:.3e} clamped to [0, 1].")
        return min(max(p, 0.0), 1.0)
    return p


def _user1Terms(T, gamma, c1, rho_ratio, c2):
    """Q-function arguments of the superimposed-PAM model seen by User 1."""
    c2 = c1 if c2 is None else c2
    sigma = _sigma(gamma)
    l = np.arange(1, c2.side // 2 + 1)
    o = (2 * l - 1) * c2.d * rho_ratio
    d = c1.d
    return {
        "a": (d - o - T / 2) / sigma,
        "b": (d + o - T / 2) / sigma,
        "c": (d - o + T / 2) / sigma,
        "d": (d + o + T / 2) / sigma,
        "a2": (3 * d - o - T / 2) / sigma,
        "b2": (3 * d + o - T / 2) / sigma,
        "sqrtA1": c1.side,
        "sqrtA2": c2.side,
        "sigma": sigma
    }


def pamProbsUser1(T1, gamma1, c1, rho_ratio, c2 = None):
    """
    Per-dimension correct and (nearest-neighbour) error probability of
    User 1 with User 2's symbols superimposed.

    Parameters
    ----------
    T1 : float
        Unreliable-zone width, >= 0.
    gamma1 : float
        Post-equalization MSE of User 1, > 0.
    c1 : QamConstellation
        User 1 constellation.
    rho_ratio : float
        sqrt(rho2 / rho1), the amplitude of User 2 relative to User 1.
    c2 : QamConstellation, optional
        User 2 constellation. Defaults to c1.

    Raises
    ------
    DomainError
        If gamma1 <= 0 or T1 < 0.

    Returns
    -------
    P_C_PAM, P_E_PAM : float

    """
    if T1 < 0:
        raise DomainError(f"Threshold must be non-negative, got {T1}.")
    t = _user1Terms(T1, gamma1, c1, rho_ratio, c2)
    sA1, sA2 = t["sqrtA1"], t["sqrtA2"]
    Q = gaussianQ

    pc = 1 - 2 * (sA1 - 1) / (sA1 * sA2) * np.sum(Q(t["a"]) + Q(t["b"]))
    pe = 2 / (sA1 * sA2) * np.sum((sA1 - 1) * (Q(t["c"]) + Q(t["d"])) - (sA1 - 2) * (Q(t["a2"]) + Q(t["b2"])))
    return _clamp(float(pc), "P_C_PAM,1"), _clamp(float(pe), "P_E_PAM,1")


def pamDerivativesUser1(T1, gamma1, c1, rho_ratio, c2 = None):
    """T-derivatives of the unclamped pamProbsUser1 expressions."""
    t = _user1Terms(T1, gamma1, c1, rho_ratio, c2)
    sA1, sA2, s = t["sqrtA1"], t["sqrtA2"], t["sigma"]

    dpc = -2 * (sA1 - 1) / (sA1 * sA2) * np.sum(_pdf(t["a"]) + _pdf(t["b"])) / (2 * s)
    dpe = 2 / (sA1 * sA2) * np.sum(-(sA1 - 1) * (_pdf(t["c"]) + _pdf(t["d"]))
                                  - (sA1 - 2) * (_pdf(t["a2"]) + _pdf(t["b2"]))) / (2 * s)
    return float(dpc), float(dpe)


def pamProbsUser2(T2, gamma2, c2):
    """
    Per-dimension correct and error probability of User 2 once User 1 is
    cancelled.

    Returns
    -------
    P_C_PAM, P_E_PAM : float

    """
    if T2 < 0:
        raise DomainError(f"Threshold must be non-negative, got {T2}.")
    s = _sigma(gamma2)
    sA, d = c2.side, c2.d
    Q = gaussianQ

    pc = 1 - 2 * (sA - 1) / sA * Q((d - T2 / 2) / s)
    pe = 2 / sA * ((sA - 1) * Q((d + T2 / 2) / s) - (sA - 2) * Q((3 * d - T2 / 2) / s))
    return _clamp(float(pc), "P_C_PAM,2"), _clamp(float(pe), "P_E_PAM,2")


def pamDerivativesUser2(T2, gamma2, c2):
    s = _sigma(gamma2)
    sA, d = c2.side, c2.d
    dpc = -2 * (sA - 1) / sA * _pdf((d - T2 / 2) / s) / (2 * s)
    dpe = 2 / sA * (-(sA - 1) * _pdf((d + T2 / 2) / s) - (sA - 2) * _pdf((3 * d - T2 / 2) / s)) / (2 * s)
    return float(dpc), float(dpe)


@dataclass(frozen = True)
class ProbTriple:
    p_correct: float
    p_error: float
    p_undetected: float

    @property
    def p_detected(self):
        return self.p_correct + self.p_error


NOTHING_DETECTED = ProbTriple(0.0, 0.0, 1.0)


def toQam(P_C_PAM, P_E_PAM):
    """Combine the two independent PAM dimensions into QAM probabilities."""
    pc = _clamp(P_C_PAM**2, "P_c")
    pe = _clamp(2 * P_E_PAM, "P_e")
    pu = 1 - pc - pe
    if pu < 0:
        logger.debug(f"P_u = {pu:.3e} clamped at 0.")
        # Keep the sum at one by trimming the error share
        pe = max(1 - pc, 0.0)
        pu = 0.0
    return ProbTriple(pc, pe, pu)


def qamProbs(user, T, gamma, c1, c2, rho_ratio):
    """ProbTriple of the given user at threshold T and MSE gamma."""
    if user == 1:
        return toQam(*pamProbsUser1(T, gamma, c1, rho_ratio, c2))
    return toQam(*pamProbsUser2(T, gamma, c2))


def qamDerivatives(user, T, gamma, c1, c2, rho_ratio):
    """(dP_c/dT, dP_e/dT) of the given user."""
    if user == 1:
        pc, _ = pamProbsUser1(T, gamma, c1, rho_ratio, c2)
        dpc, dpe = pamDerivativesUser1(T, gamma, c1, rho_ratio, c2)
    else:
        pc, _ = pamProbsUser2(T, gamma, c2)
        dpc, dpe = pamDerivativesUser2(T, gamma, c2)
    return 2 * pc * dpc, 2 * dpe


@dataclass
class UserMse:
    """Decomposition of one user's tracked MSE."""
    omega: float
    psi_u: float
    psi_d: float
    w: float
    gamma: float


@dataclass
class MseTracker:
    """
    Analytic evolution of both users' MSE across detection iterations at
    the receiver of user_i.

    Probability history entry k-1 holds the ProbTriple of iteration k.
    """
    user_i: int
    rho1: float
    rho2: float
    c1: object
    c2: object
    users: dict
    prob_history: dict = field(default_factory = lambda: {1: [], 2: []})
    k: int = 1

    @property
    def own(self):
        return self.users[self.user_i]

    @property
    def omega(self):
        return self.own.omega

    @property
    def psi_u(self):
        return self.own.psi_u

    @property
    def psi_d(self):
        return self.own.psi_d

    @property
    def w(self):
        return self.own.w

    @property
    def gamma1(self):
        return self.users[1].gamma

    @property
    def gamma2(self):
        return self.users[2].gamma

    @property
    def e1(self):
        return 4 * self.c1.d**2

    @property
    def e2(self):
        return 4 * self.c2.d**2

    @property
    def rho_ratio(self):
        return np.sqrt(self.rho2 / self.rho1)

    def probAt(self, user, j):
        # P_u = 1 before any iteration has run
        if j <= 0:
            return NOTHING_DETECTED
        return self.prob_history[user][j - 1]

    def overlapUndetected(self, k):
        """P_u,1 entering the overlap-error term of User 2's MSE."""
        return self.probAt(1, 0 if k == 1 else 1).p_undetected

    def refresh(self, per_user_gamma):
        """Replace the tracked MSEs by solver output, keeping the floors."""
        for j in (1, 2):
            self.users[j].gamma = max(float(per_user_gamma[j - 1]), self.users[j].w)

    def advance(self, probs1, probs2):
        """
        Evolve both users' MSE with the probabilities of the current
        iteration and move to the next one.

        Returns
        -------
        (gamma1, gamma2) of iteration k + 1.

        """
        k = self.k
        g1 = evolveUser1(self, probs1, probs2, k)
        g2 = evolveUser2(self, probs1, probs2, k)
        self.prob_history[1].append(probs1)
        self.prob_history[2].append(probs2)
        self.k = k + 1
        return g1, g2


def initTracker(report, rho1, rho2, user_i, c1, c2):
    """
    Split the approximate post-equalization MSE of the first solve into
    User 1 interference, User 2 interference and noise for both users.

    Parameters
    ----------
    report : SolverReport
        Approximate-mode report of the first mLSQR call.
    rho1, rho2 : float
        Power fractions.
    user_i : int
        Receiving user (1 or 2).
    c1, c2 : QamConstellation
        Constellations of User 1 and User 2.

    Returns
    -------
    MseTracker

    """
    psi = report.mse.psi
    interference = report.mse.interference_sum
    noise = report.mse.noise_term
    rho = {1: rho1, 2: rho2}

    users = {}
    for j in (1, 2):
        if psi == 0:
            logger.warning("Zero post-equalization gain, tracked MSE starts at +inf.")
            users[j] = UserMse(np.inf, np.inf, 0.0, np.inf, np.inf)
            continue
        scale = 1 / (rho[j] * psi**2)
        omega = rho1 * scale * interference
        psi_u = rho2 * scale * interference
        w = max(noise * scale, MIN_GAMMA)
        users[j] = UserMse(omega = omega, psi_u = psi_u, psi_d = 0.0, w = w, gamma = max(omega + psi_u + w, w))

    return MseTracker(user_i = user_i, rho1 = rho1, rho2 = rho2, c1 = c1, c2 = c2, users = users)


def _updateComponents(t, comp, probs1, probs2, k):
    p_d1_prev = t.probAt(1, k - 1).p_detected
    comp.omega, comp.psi_u, comp.psi_d = (
        comp.omega * probs1.p_undetected,
        comp.psi_u * t.probAt(2, k - 1).p_undetected,
        comp.psi_d + comp.psi_u * p_d1_prev * probs2.p_undetected - comp.psi_d * probs2.p_detected
    )


def _user2Residual(comp, t, k):
    """User 2 interference still present at iteration k."""
    return comp.psi_u * t.probAt(1, k - 1).p_detected + comp.psi_d


def evolveUser1(t, probs1, probs2, k):
    """
    Next-iteration MSE of User 1.

    Detected User 1 symbols remove their share of Omega, wrong decisions
    add (E1 - 1) times it back; User 2 symbols eligible for cancellation do
    the same with E2.
    """
    comp = t.users[1]
    x = _user2Residual(comp, t, k)
    gamma = (comp.gamma
             - comp.omega * probs1.p_correct
             + (t.e1 - 1) * comp.omega * probs1.p_error
             - x * probs2.p_correct
             + (t.e2 - 1) * x * probs2.p_error)
    _updateComponents(t, comp, probs1, probs2, k)
    comp.gamma = max(gamma, comp.w)
    return comp.gamma


def evolveUser2(t, probs1, probs2, k):
    """
    Next-iteration MSE of User 2, including the error of wrongly cancelled
    User 1 symbols that overlap the User 2 symbols.
    """
    comp = t.users[2]
    x = _user2Residual(comp, t, k)
    overlap = (t.rho2 / t.rho1) * t.e1 * t.overlapUndetected(k)
    gamma = (comp.gamma
             - comp.omega * probs1.p_correct
             + ((t.e1 - 1) * comp.omega + overlap) * probs1.p_error
             - x * probs2.p_correct
             + (t.e2 - 1) * x * probs2.p_error)
    _updateComponents(t, comp, probs1, probs2, k)
    comp.gamma = max(gamma, comp.w)
    return comp.gamma


def brentRoot(f, lo, hi, tol = 1e-10):
    """
    Brent-Dekker root of f on [lo, hi].

    Raises
    ------
    BracketError
        If f does not change sign on the interval.

    """
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if flo * fhi > 0:
        raise BracketError(f"No sign change on [{lo}, {hi}]: f = {flo:.3e}, {fhi:.3e}.")
    return brentq(f, lo, hi, xtol = tol)


def _errorProb(user, T, gamma, c, rho_ratio, c_other):
    if user == 1:
        return 2 * pamProbsUser1(T, gamma, c, rho_ratio, c_other)[1]
    return 2 * pamProbsUser2(T, gamma, c)[1]


def solveOwnThreshold(gamma_k, w_floor, c, user_i, rho_ratio = 0.0, c_other = None, tol = 1e-10):
    """
    Zone width that brings the error probability at the current MSE down
    to the error probability of a noise-only receiver without a zone.

    Parameters
    ----------
    gamma_k : float
        Current tracked MSE of the receiving user.
    w_floor : float
        Noise-only MSE floor W_i, > 0.
    c : QamConstellation
        Constellation of the receiving user.
    user_i : int
        1 or 2.
    rho_ratio : float, optional
        sqrt(rho2 / rho1), used for User 1 only.
    c_other : QamConstellation, optional
        User 2 constellation when user_i is 1.

    Raises
    ------
    DomainError
        If w_floor <= 0 or gamma_k < w_floor.

    Returns
    -------
    float
        Threshold in [0, 2d].

    """
    if not w_floor > 0:
        raise DomainError(f"Noise floor must be positive, got {w_floor}.")
    if gamma_k < w_floor * (1 - 1e-12):
        raise DomainError(f"Tracked MSE {gamma_k} is below its floor {w_floor}.")
    if gamma_k <= w_floor:
        return 0.0

    t_max = 2 * c.d
    target = _errorProb(user_i, 0.0, w_floor, c, rho_ratio, c_other)

    def f(T):
        return _errorProb(user_i, T, gamma_k, c, rho_ratio, c_other) - target

    if f(0.0) <= 0:
        return 0.0
    if f(t_max) > 0:
        logger.debug(f"Own threshold saturated at 2d for gamma = {gamma_k:.3e}, W = {w_floor:.3e}.")
        return t_max
    return brentRoot(f, 0.0, t_max, tol = tol)


def _crossObjective(t, k, at_user):
    """
    Part of the next-iteration MSE of at_user that depends on the other
    user's threshold, as (objective, derivative, half distance) callables.
    """
    comp = t.users[at_user]
    if at_user == 1:
        other, gamma = 2, t.gamma2
        coeff_c = _user2Residual(comp, t, k)
        coeff_e = (t.e2 - 1) * coeff_c
        d = t.c2.d
    else:
        other, gamma = 1, t.gamma1
        coeff_c = comp.omega
        coeff_e = (t.e1 - 1) * comp.omega + (t.rho2 / t.rho1) * t.e1 * t.overlapUndetected(k)
        d = t.c1.d
    gamma = max(gamma, MIN_GAMMA)

    def objective(T):
        p = qamProbs(other, T, gamma, t.c1, t.c2, t.rho_ratio)
        return -coeff_c * p.p_correct + coeff_e * p.p_error

    def derivative(T):
        dpc, dpe = qamDerivatives(other, T, gamma, t.c1, t.c2, t.rho_ratio)
        return -coeff_c * dpc + coeff_e * dpe

    return objective, derivative, d, (coeff_c == 0 and coeff_e == 0)


def optimizeCrossThreshold(t, k, at_user, grid_points = 64):
    """
    Threshold of the other user minimizing the next-iteration MSE of at_user.

    Every sign change of the derivative on a coarse grid over [0, 2d] is
    refined with Brent-Dekker; the roots and both endpoints are compared on
    the objective itself, ties going to the smaller threshold.

    Parameters
    ----------
    t : MseTracker
        Tracker at iteration k.
    k : int
        Current iteration.
    at_user : int
        Receiving user whose MSE is minimized.
    grid_points : int, optional
        Number of bracketing intervals. The default is 64.

    Returns
    -------
    float

    """
    objective, derivative, d, degenerate = _crossObjective(t, k, at_user)
    if degenerate:
        return 0.0

    t_max = 2 * d
    Ts = np.linspace(0, t_max, grid_points + 1)
    D = np.array([derivative(T) for T in Ts])

    candidates = [0.0]
    for i in range(grid_points):
        if D[i] == 0:
            candidates.append(Ts[i])
        elif D[i] * D[i + 1] < 0:
            candidates.append(brentRoot(derivative, Ts[i], Ts[i + 1]))
    candidates.append(t_max)

    if len(candidates) == 2:
        logger.debug(f"No stationary point for the cross threshold at user {at_user}, comparing endpoints.")

    best, best_val = candidates[0], objective(candidates[0])
    for T in sorted(candidates[1:]):
        val = objective(T)
        if val < best_val:
            best, best_val = T, val
    return float(best)


def naiveThreshold(k, K, d, start_factor = 2.0):
    """Linearly shrinking zone width start_factor * d * (1 - k / K)."""
    if K < 1 or k < 1:
        raise DomainError(f"Iteration indices must be positive, got k={k}, K={K}.")
    return max(start_factor * d * (1 - k / K), 0.0)
