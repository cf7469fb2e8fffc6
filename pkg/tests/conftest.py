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

from Link.Grid import FrameConfig, buildConstellation


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def qam4():
    return buildConstellation(4)


@pytest.fixture
def qam16():
    return buildConstellation(16)


@pytest.fixture
def frame4():
    """4 x 4 grid without CP; every TDL-C tap rounds to 0 at this bandwidth."""
    return FrameConfig(M = 4, N = 4, n_cp = 0)


@pytest.fixture
def frame4cp():
    """4 x 4 grid with one CP sample for two-tap channels."""
    return FrameConfig(M = 4, N = 4, n_cp = 1)


def randomComplex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
