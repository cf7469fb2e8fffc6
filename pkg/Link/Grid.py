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

from Utilities.Errors import ConfigError, DomainError

logger = logging.getLogger('OTFS-NOMA.Grid')


@dataclass(frozen = True)
class FrameConfig:
    """
    Geometry of one OTFS frame.

    Parameters
    ----------
    M : int
        Number of delay bins (subcarriers of the underlying OFDM symbols).
    N : int
        Number of Doppler bins (OFDM symbols per frame).
    n_cp : int
        Cyclic prefix length in samples, prepended to every OFDM symbol.
    delta_f : float
        Subcarrier spacing in Hz.
    f_c : float
        Carrier frequency in Hz.

    """
    M: int
    N: int
    n_cp: int = 0
    delta_f: float = 15e3
    f_c: float = 5.9e9

    def __post_init__(self):
        if self.M < 1 or self.N < 1:
            raise ConfigError(f"Frame must have at least one delay and Doppler bin, got M={self.M}, N={self.N}.")
        if not 0 <= self.n_cp < self.M:
            raise ConfigError(f"CP length must satisfy 0 <= n_cp < M, got n_cp={self.n_cp}, M={self.M}.")
        if self.delta_f <= 0:
            raise ConfigError(f"Subcarrier spacing must be positive, got {self.delta_f}.")

    @property
    def t_s(self):
        return 1 / (self.M * self.delta_f)

    @property
    def symbols(self):
        return self.M * self.N

    @property
    def block_len(self):
        return self.M + self.n_cp

    def frame_len(self):
        return self.N * (self.M + self.n_cp)


@dataclass(frozen = True, eq = False)
class QamConstellation:
    """
    Unit-energy square QAM constellation.

    The points form the grid {(2a-1)d + j(2b-1)d} for a, b in
    {-sqrt(A)/2+1, ..., sqrt(A)/2}.
    """
    order: int
    half_distance: float
    pam_levels: np.ndarray = field(repr = False)
    points: np.ndarray = field(repr = False)

    @property
    def d(self):
        return self.half_distance

    @property
    def side(self):
        return int(round(np.sqrt(self.order)))

    def energy(self):
        return float(np.mean(np.abs(self.points)**2))

    def randomSymbols(self, count, rng):
        """
        Draw i.i.d. uniform symbols.

        Parameters
        ----------
        count : int
            Number of symbols.
        rng : numpy.random.Generator
            Random source.

        Returns
        -------
        numpy.ndarray
            Complex symbols of length count.

        """
        re = rng.integers(0, self.side, size = count)
        im = rng.integers(0, self.side, size = count)
        return self.pam_levels[re] + 1j * self.pam_levels[im]


def buildConstellation(order):
    """
    Build a unit-energy square QAM constellation of the given order.

    Parameters
    ----------
    order : int
        Number of symbols A. Must be the square of an even integer (4, 16, 64, ...).

    Raises
    ------
    ConfigError
        If the order is not a valid square QAM order.

    Returns
    -------
    QamConstellation

    """
    order = int(order)
    side = int(round(np.sqrt(order))) if order > 0 else 0
    if order < 4 or side * side != order or side % 2 != 0:
        raise ConfigError(f"Invalid QAM order {order}, expected a perfect square of an even integer >= 4.")

    d = np.sqrt(3 / (2 * (order - 1)))
    levels = (2 * np.arange(side) - side + 1) * d
    re, im = np.meshgrid(levels, levels, indexing = 'ij')
    points = (re + 1j * im).ravel()

    levels.setflags(write = False)
    points.setflags(write = False)
    return QamConstellation(order = order, half_distance = d, pam_levels = levels, points = points)


def _quantizePam(u, c):
    # Cell index along one dimension; ties at a boundary land in the upper cell
    idx = np.floor(u / (2 * c.d) + c.side / 2)
    idx = np.clip(idx, 0, c.side - 1)
    return (2 * idx - c.side + 1) * c.d


def quantize(value, c):
    """
    Map value(s) to the nearest constellation point.

    Square QAM decisions separate per dimension, so the nearest point is the
    pair of nearest PAM levels. Values exactly on a decision boundary go to
    the larger level, which breaks ties toward larger real part and then
    larger imaginary part.

    Parameters
    ----------
    value : complex or array of complex
        Soft estimate(s).
    c : QamConstellation
        Constellation to quantize to.

    Returns
    -------
    complex or numpy.ndarray
        Quantized symbol(s), same shape as value.

    """
    v = np.asarray(value, dtype = complex)
    q = _quantizePam(v.real, c) + 1j * _quantizePam(v.imag, c)
    if q.ndim == 0:
        return complex(q)
    return q


def _inStrip(u, T, c):
    if c.side == 2:
        nearest = np.zeros_like(u)
    else:
        a = np.clip(np.rint(u / (2 * c.d)), -c.side / 2 + 1, c.side / 2 - 1)
        nearest = 2 * a * c.d
    return np.abs(u - nearest) < T / 2


def unreliableZoneContains(value, T, c, rule = 'and'):
    """
    Test membership of the unreliable zone of half-width T/2 around the
    PAM decision boundaries 2a*d, a in {-sqrt(A)/2+1, ..., sqrt(A)/2-1}.

    Parameters
    ----------
    value : complex or array of complex
        Soft estimate(s).
    T : float
        Zone width, T >= 0. The strips are open intervals, so T = 0 gives an
        empty zone.
    c : QamConstellation
        Constellation defining the boundaries.
    rule : str, optional
        'and' requires both coordinates inside a strip, 'or' requires at
        least one. The default is 'and'.

    Returns
    -------
    bool or numpy.ndarray of bool

    """
    if T < 0:
        raise DomainError(f"Zone width must be non-negative, got {T}.")
    v = np.asarray(value, dtype = complex)
    re = _inStrip(v.real, T, c)
    im = _inStrip(v.imag, T, c)

    if rule == 'and':
        inside = re & im
    elif rule == 'or':
        inside = re | im
    else:
        raise ConfigError(f"Unknown zone rule '{rule}', expected 'and' or 'or'.")

    if inside.ndim == 0:
        return bool(inside)
    return inside
