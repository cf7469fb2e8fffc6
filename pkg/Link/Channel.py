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
import pandas as pd
from scipy.constants import speed_of_light

from Utilities.Errors import ConfigError, DimensionError, DomainError

logger = logging.getLogger('OTFS-NOMA.Channel')

# 3GPP TR 38.901 TDL-C, delays normalized to the RMS delay spread
tdlcDF = pd.DataFrame(
    columns = ["tap", "delay_norm", "power_dB"],
    data = [
        [1,  0.0000,  -4.4],
        [2,  0.2099,  -1.2],
        [3,  0.2219,  -3.5],
        [4,  0.2329,  -5.2],
        [5,  0.2176,  -2.5],
        [6,  0.6366,   0.0],
        [7,  0.6448,  -2.2],
        [8,  0.6560,  -3.9],
        [9,  0.6584,  -7.4],
        [10, 0.7935,  -7.1],
        [11, 0.8213, -10.7],
        [12, 0.9336, -11.1],
        [13, 1.2285,  -5.1],
        [14, 1.3083,  -6.8],
        [15, 2.1704,  -8.7],
        [16, 2.7105, -13.2],
        [17, 4.2589, -13.9],
        [18, 4.6003, -13.9],
        [19, 5.4902, -15.8],
        [20, 5.6077, -17.1],
        [21, 6.3065, -16.0],
        [22, 6.6374, -15.7],
        [23, 7.0427, -21.6],
        [24, 8.6523, -22.8]
    ]
)

EVOLUTIONS = ("continuous", "block_fading")


@dataclass(frozen = True, eq = False)
class ChannelRealization:
    """
    One draw of a linear time-varying multipath channel.

    Attributes
    ----------
    gains : numpy.ndarray
        Complex path gains h_p.
    delay_taps : numpy.ndarray
        Integer path delays l_p in samples.
    doppler_hz : numpy.ndarray
        Path Doppler shifts nu_p in Hz.
    pdp : numpy.ndarray
        Normalized power delay profile lambda(p).
    v_max_hz : float
        Maximum Doppler shift.
    evolution : str
        'continuous' lets the phase rotate every sample, 'block_fading'
        freezes it at the first sample of every OFDM symbol.

    """
    gains: np.ndarray
    delay_taps: np.ndarray
    doppler_hz: np.ndarray
    pdp: np.ndarray
    v_max_hz: float = 0.0
    evolution: str = "continuous"

    def __post_init__(self):
        P = len(self.gains)
        if len(self.delay_taps) != P or len(self.doppler_hz) != P or len(self.pdp) != P:
            raise DimensionError("Path gain, delay, Doppler and PDP arrays must have equal lengths.")
        if np.any(np.asarray(self.delay_taps) < 0):
            raise DomainError("Path delays must be non-negative.")
        if self.evolution not in EVOLUTIONS:
            raise ConfigError(f"Unknown channel evolution '{self.evolution}', expected one of {EVOLUTIONS}.")

    @property
    def paths(self):
        return len(self.gains)

    @property
    def max_tap(self):
        return int(np.max(self.delay_taps)) if self.paths else 0

    @classmethod
    def fromPaths(cls, gains, delay_taps, doppler_hz = None, evolution = "continuous"):
        """
        Build a deterministic realization, mostly useful for tests.
        The PDP is taken from the gain magnitudes.
        """
        gains = np.atleast_1d(np.asarray(gains, dtype = complex))
        taps = np.atleast_1d(np.asarray(delay_taps, dtype = int))
        if doppler_hz is None:
            doppler_hz = np.zeros(len(gains))
        doppler_hz = np.atleast_1d(np.asarray(doppler_hz, dtype = float))
        power = np.abs(gains)**2
        pdp = power / np.sum(power) if np.sum(power) > 0 else np.full(len(gains), 1 / max(len(gains), 1))
        return cls(gains = gains, delay_taps = taps, doppler_hz = doppler_hz, pdp = pdp,
                   v_max_hz = float(np.max(np.abs(doppler_hz), initial = 0.0)), evolution = evolution)


def dopplerFromVelocity(v_kmh, f_c):
    """Maximum Doppler shift in Hz for a speed in km/h at carrier f_c."""
    return (v_kmh / 3.6) * f_c / speed_of_light


def tdlcTaps(delay_spread_s, t_s):
    """Nearest-sample tap index of every TDL-C path."""
    delays = tdlcDF["delay_norm"].to_numpy() * delay_spread_s
    return np.floor(delays / t_s + 0.5).astype(int)


def defaultCpLength(delay_spread_s, cfg):
    """
    Smallest CP length covering the rounded TDL-C delays.

    Parameters
    ----------
    delay_spread_s : float
        RMS delay spread in seconds.
    cfg : FrameConfig
        Only M and delta_f are used.

    Returns
    -------
    int

    """
    return int(np.max(tdlcTaps(delay_spread_s, cfg.t_s)))


def sampleTdlc(delay_spread_s, v_max_hz, cfg, rng, evolution = "continuous"):
    """
    Draw a TDL-C realization with Jakes-distributed path Dopplers.

    Every table entry becomes its own path, even when several land on the
    same sample tap.

    Parameters
    ----------
    delay_spread_s : float
        RMS delay spread in seconds, > 0.
    v_max_hz : float
        Maximum Doppler shift in Hz, >= 0.
    cfg : FrameConfig
        Frame geometry; its CP must cover the largest tap.
    rng : numpy.random.Generator
        Random source.
    evolution : str, optional
        Channel evolution mode. The default is "continuous".

    Raises
    ------
    DomainError
        Non-positive delay spread or negative Doppler.
    ConfigError
        CP shorter than the largest tap.

    Returns
    -------
    ChannelRealization

    """
    if delay_spread_s <= 0:
        raise DomainError(f"Delay spread must be positive, got {delay_spread_s}.")
    if v_max_hz < 0:
        raise DomainError(f"Maximum Doppler must be non-negative, got {v_max_hz}.")

    taps = tdlcTaps(delay_spread_s, cfg.t_s)
    if taps.max() > cfg.n_cp:
        raise ConfigError(f"CP too short: largest tap is {taps.max()} samples but n_cp = {cfg.n_cp}.")

    pdp = 10**(tdlcDF["power_dB"].to_numpy() / 10)
    pdp = pdp / np.sum(pdp)

    P = len(pdp)
    gains = np.sqrt(pdp / 2) * (rng.standard_normal(P) + 1j * rng.standard_normal(P))
    theta = rng.uniform(0, 2 * np.pi, size = P)
    doppler = v_max_hz * np.cos(theta)

    return ChannelRealization(gains = gains, delay_taps = taps, doppler_hz = doppler, pdp = pdp,
                              v_max_hz = float(v_max_hz), evolution = evolution)


def _pathPhases(ch, cfg, length):
    """Phase factor of every path at every output sample, shape (P, length)."""
    n = np.arange(length)
    if ch.evolution == "block_fading":
        # CIR held at its value at the first sample of each OFDM symbol
        t = (n // cfg.block_len) * cfg.block_len
        t = np.broadcast_to(t, (ch.paths, length))
    else:
        t = n[None, :] - ch.delay_taps[:, None]
    return np.exp(2j * np.pi * ch.doppler_hz[:, None] * t * cfg.t_s)


def applyLtvChannel(s, ch, cfg):
    """
    Pass a time-domain signal through the channel,
    r[n] = sum_p h_p exp(j 2 pi nu_p (n - l_p) t_s) s[n - l_p] with zero
    initial state.

    s may be a single signal or a batch of signals stored as columns.
    """
    s = np.asarray(s, dtype = complex)
    L = s.shape[0]
    if L != cfg.frame_len():
        raise DimensionError(f"Signal length {L} does not match frame length {cfg.frame_len()}.")

    phases = _pathPhases(ch, cfg, L)
    r = np.zeros_like(s)
    for p in range(ch.paths):
        l = int(ch.delay_taps[p])
        if l >= L:
            continue
        ph = phases[p, l:] if s.ndim == 1 else phases[p, l:, None]
        r[l:] += ch.gains[p] * ph * s[:L - l]
    return r


def applyLtvChannelAdjoint(r, ch, cfg):
    """Hermitian adjoint of applyLtvChannel."""
    r = np.asarray(r, dtype = complex)
    L = r.shape[0]
    if L != cfg.frame_len():
        raise DimensionError(f"Signal length {L} does not match frame length {cfg.frame_len()}.")

    phases = np.conj(_pathPhases(ch, cfg, L))
    s = np.zeros_like(r)
    for p in range(ch.paths):
        l = int(ch.delay_taps[p])
        if l >= L:
            continue
        ph = phases[p, l:] if r.ndim == 1 else phases[p, l:, None]
        s[:L - l] += np.conj(ch.gains[p]) * ph * r[l:]
    return s


def buildTimeDomainMatrix(ch, cfg):
    """
    Dense time-domain channel matrix H with H @ s == applyLtvChannel(s).

    Returns
    -------
    numpy.ndarray
        Square complex matrix of side N(M + n_cp).

    """
    L = cfg.frame_len()
    H = np.zeros((L, L), dtype = complex)
    phases = _pathPhases(ch, cfg, L)
    for p in range(ch.paths):
        l = int(ch.delay_taps[p])
        rows = np.arange(l, L)
        np.add.at(H, (rows, rows - l), ch.gains[p] * phases[p, rows])
    return H


def addAwgn(r, sigma2, rng):
    """
    Add circular complex Gaussian noise of total variance sigma2 per sample.
    """
    if sigma2 < 0:
        raise DomainError(f"Noise variance must be non-negative, got {sigma2}.")
    r = np.asarray(r, dtype = complex)
    if sigma2 == 0:
        return r.copy()
    noise = rng.standard_normal(r.shape) + 1j * rng.standard_normal(r.shape)
    return r + np.sqrt(sigma2 / 2) * noise


def snrToSigma2(snr_db):
    return 10**(-snr_db / 10)
