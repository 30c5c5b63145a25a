import math

import pytest

from waveqed.analysis import band_edges
from waveqed.scattering import SystemParams
from waveqed.waveguide import WaveguideGeometry

GEOM = WaveguideGeometry(a=1.5)


def cutoff_oracle(m, n, a=1.5):
    """Written out independently of the package: pi sqrt((m/a)^2 + n^2) for b = 1."""
    return math.pi * math.sqrt((m / a) ** 2 + n**2)


@pytest.fixture
def geom():
    return GEOM


@pytest.fixture
def band1():
    return band_edges(GEOM, 1)


@pytest.fixture
def band2():
    return band_edges(GEOM, 2)


@pytest.fixture
def two_mode_params():
    lo, hi = band_edges(GEOM, 2)
    return SystemParams(omega_e=0.5 * (lo + hi), Omega=0.5, delta=0.0, g=0.1, geom=GEOM)


@pytest.fixture
def single_mode_params():
    lo, hi = band_edges(GEOM, 1)
    return SystemParams(omega_e=0.5 * (lo + hi), Omega=1.0, delta=0.5, g=0.1, geom=GEOM)
