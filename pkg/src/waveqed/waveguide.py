"""Rectangular waveguide geometry, TM mode structure and emitter couplings.

Lengths are in units of the short side ``b`` (fixed to 1) and frequencies in
units of ``c/b``.  The emitter sits at the transverse centre ``(a/2, b/2)`` so
only TM modes with odd ``m`` and odd ``n`` couple to it.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Union

from .errors import BandEdgeSingularity, DomainError

__all__ = [
    "WaveguideGeometry",
    "Mode",
    "cutoff_frequency",
    "make_mode",
    "enumerate_coupled_modes",
    "dispersion",
    "longitudinal_wavenumber",
    "density_of_states",
    "group_velocity",
    "coupling_strength",
]


@dataclass(frozen=True)
class WaveguideGeometry:
    """Cross-section width ``a`` and emitter position ``z0`` (both in units of b)."""

    a: float = 1.5
    z0: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.a) and self.a > 0):
            raise DomainError(f"waveguide width a must be positive, got {self.a!r}")
        if self.b != 1.0:
            raise DomainError("b is the normalisation length and must equal 1")
        if not math.isfinite(self.z0):
            raise DomainError(f"z0 must be finite, got {self.z0!r}")

    @property
    def area(self) -> float:
        return self.a * self.b


@dataclass(frozen=True)
class Mode:
    """A TM_mn channel. ``index`` is the channel number j (0 for uncoupled modes)."""

    m: int
    n: int
    cutoff: float
    coupled: bool
    index: int = 0

    @property
    def label(self) -> str:
        return f"TM{self.m}{self.n}"

    @property
    def parity(self) -> int:
        # sin(m pi/2) sin(n pi/2) for odd m, n; exact integers avoid 1e-16 residues
        if not self.coupled:
            return 0
        sm = 1 if (self.m % 4) == 1 else -1
        sn = 1 if (self.n % 4) == 1 else -1
        return sm * sn


ModeLike = Union[Mode, float]


def _cutoff(mode: ModeLike) -> float:
    return mode.cutoff if isinstance(mode, Mode) else float(mode)


def cutoff_frequency(m: int, n: int, geom: WaveguideGeometry) -> float:
    if m < 1 or n < 1:
        raise DomainError(f"TM mode indices must be >= 1, got ({m}, {n})")
    return math.pi * math.sqrt((m / geom.a) ** 2 + (n / geom.b) ** 2)


def make_mode(m: int, n: int, geom: WaveguideGeometry, index: int = 0) -> Mode:
    coupled = (m % 2 == 1) and (n % 2 == 1)
    return Mode(m, n, cutoff_frequency(m, n, geom), coupled, index if coupled else 0)


def enumerate_coupled_modes(geom: WaveguideGeometry, omega_max: float) -> list[Mode]:
    """All odd-odd TM modes with cutoff <= ``omega_max``, indexed j = 1, 2, ...

    Ordering is by cutoff, ties broken by ``(m, n)``.
    """
    if omega_max < math.pi * math.sqrt(1 / geom.a**2 + 1):
        return []
    m_max = int(omega_max * geom.a / math.pi) + 1
    n_max = int(omega_max * geom.b / math.pi) + 1
    found = []
    for m in range(1, m_max + 1, 2):
        for n in range(1, n_max + 1, 2):
            wc = cutoff_frequency(m, n, geom)
            if wc <= omega_max:
                found.append((wc, m, n))
    found.sort()
    return [Mode(m, n, wc, True, j) for j, (wc, m, n) in enumerate(found, start=1)]


def dispersion(mode: ModeLike, k: float) -> float:
    return math.hypot(_cutoff(mode), k)


def longitudinal_wavenumber(mode: ModeLike, omega: float) -> float:
    wc = _cutoff(mode)
    if omega < wc:
        raise DomainError(f"omega={omega!r} is below the cutoff {wc!r}; the mode is evanescent")
    return math.sqrt((omega - wc) * (omega + wc))


def density_of_states(mode: ModeLike, omega: float) -> float:
    """Inverse group velocity, zero below cutoff.

    Raises :class:`BandEdgeSingularity` exactly at the cutoff.
    """
    wc = _cutoff(mode)
    if omega == wc:
        raise BandEdgeSingularity(omega, wc)
    if omega < wc:
        return 0.0
    return omega / math.sqrt((omega - wc) * (omega + wc))


def group_velocity(mode: ModeLike, omega: float) -> float:
    """d(omega)/dk at the propagating wavenumber; vanishes at the cutoff."""
    wc = _cutoff(mode)
    if omega < wc:
        raise DomainError(f"omega={omega!r} is below the cutoff {wc!r}")
    return math.sqrt((omega - wc) * (omega + wc)) / omega


def coupling_strength(mode: Mode, k: float, g: float, geom: WaveguideGeometry) -> complex:
    """Emitter-mode coupling g_{j,k} = -g w_j s_m s_n exp(-i k z0) / sqrt(w_{j,k})."""
    if not mode.coupled:
        return 0j
    amplitude = -g * mode.cutoff * mode.parity / math.sqrt(dispersion(mode, k))
    if geom.z0 == 0.0:
        return complex(amplitude, 0.0)
    return amplitude * cmath.exp(-1j * k * geom.z0)
