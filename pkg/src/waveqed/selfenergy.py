"""Emitter self-energy: mode-resolved decay rates and Lamb shifts.

The Lamb shift of channel j is the principal value

    D_j(w) = P int dk |g_{j,k}|^2 / (w - w_{j,k})
           = 2 g^2 w_j^2 P int_0^inf du / (w - w_j cosh u),

after substituting w' = w_j cosh u, which removes the inverse-square-root
endpoint singularity at the cutoff.  For w > w_j the pole at
u0 = arccosh(w / w_j) is removed by subtracting its simple-pole part on the
symmetric window [0, 2 u0], where the principal value of the subtracted term
is exactly zero.  What remains is integrated adaptively.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

from scipy import integrate

from .errors import BandEdgeSingularity, DomainError, QuadratureError
from .waveguide import Mode, WaveguideGeometry, enumerate_coupled_modes

__all__ = [
    "QuadConfig",
    "TruncationPolicy",
    "SelfEnergy",
    "decay_rate_mode",
    "lamb_shift_mode",
    "lamb_integral",
    "self_energy_total",
    "coupled_modes_upto",
    "propagating_modes",
    "next_cutoff",
]

_COSH_GUARD = 700.0
# relative floor so huge values just below a cutoff stay above roundoff
_EPSREL = 1e-13


@dataclass(frozen=True)
class QuadConfig:
    """Absolute tolerance on each D_j (for g <= 1) and the adaptive subdivision limit."""

    tol: float = 1e-9
    limit: int = 200

    def __post_init__(self):
        if not self.tol > 0:
            raise DomainError(f"quadrature tolerance must be positive, got {self.tol!r}")


@dataclass(frozen=True)
class TruncationPolicy:
    """Which coupled modes enter the Lamb-shift sum.

    The default (no multiplier, no count) keeps the propagating modes only.
    ``max_cutoff_multiplier`` keeps every coupled mode whose cutoff is at most
    that multiple of the band ceiling (the first cutoff above ``omega``).
    ``n_modes`` keeps the first ``n_modes`` coupled modes, and always the
    propagating ones.
    """

    max_cutoff_multiplier: Optional[float] = None
    n_modes: Optional[int] = None

    def __post_init__(self):
        if self.max_cutoff_multiplier is not None and self.max_cutoff_multiplier < 1:
            raise DomainError("max_cutoff_multiplier must be >= 1")
        if self.n_modes is not None and self.n_modes < 1:
            raise DomainError("n_modes must be >= 1")
        if self.max_cutoff_multiplier is not None and self.n_modes is not None:
            raise DomainError("give either max_cutoff_multiplier or n_modes, not both")

    @property
    def description(self) -> str:
        if self.n_modes is not None:
            return f"first {self.n_modes} coupled modes"
        if self.max_cutoff_multiplier is not None:
            return f"coupled modes with cutoff <= {self.max_cutoff_multiplier:g} x band ceiling"
        return "propagating modes only"

    def select(self, omega: float, geom: WaveguideGeometry) -> tuple[Mode, ...]:
        propagating = propagating_modes(geom, omega)
        if self.n_modes is not None:
            count = max(self.n_modes, len(propagating))
            return coupled_modes_count(geom, count)
        if self.max_cutoff_multiplier is not None:
            ceiling = next_cutoff(geom, omega)
            return coupled_modes_upto(geom, self.max_cutoff_multiplier * ceiling)
        return propagating


@dataclass(frozen=True)
class SelfEnergy:
    lamb_shift: float
    decay: float
    per_mode: tuple[tuple[int, float, float], ...]
    mode_set: tuple[Mode, ...]
    convergence: tuple[tuple[int, float], ...] = field(default=())
    error_estimate: float = 0.0


@lru_cache(maxsize=256)
def coupled_modes_upto(geom: WaveguideGeometry, omega_max: float) -> tuple[Mode, ...]:
    return tuple(enumerate_coupled_modes(geom, omega_max))


@lru_cache(maxsize=256)
def coupled_modes_count(geom: WaveguideGeometry, count: int) -> tuple[Mode, ...]:
    wmax = 2.0 * math.pi * math.sqrt(1 / geom.a**2 + 1)
    while True:
        modes = coupled_modes_upto(geom, wmax)
        if len(modes) > count:
            return modes[:count]
        wmax *= 1.5


def propagating_modes(geom: WaveguideGeometry, omega: float) -> tuple[Mode, ...]:
    """Coupled modes with cutoff strictly below ``omega``.

    Raises :class:`BandEdgeSingularity` if ``omega`` equals a coupled cutoff.
    """
    modes = coupled_modes_upto(geom, omega)
    if modes and modes[-1].cutoff == omega:
        raise BandEdgeSingularity(omega, omega)
    return modes


def next_cutoff(geom: WaveguideGeometry, omega: float) -> float:
    """First coupled cutoff strictly above ``omega``."""
    span = max(omega, math.pi)
    while True:
        for mode in coupled_modes_upto(geom, 2 * span):
            if mode.cutoff > omega:
                return mode.cutoff
        span *= 2


def decay_rate_mode(mode: Mode, omega: float, g: float) -> float:
    """Gamma_j(w) = 2 pi |g_{j,k_j}|^2 rho_j(w) = 2 pi g^2 w_j^2 / sqrt(w^2 - w_j^2)."""
    if not mode.coupled:
        return 0.0
    wc = mode.cutoff
    if omega == wc:
        raise BandEdgeSingularity(omega, wc)
    if omega < wc:
        return 0.0
    return 2.0 * math.pi * g * g * wc * wc / math.sqrt((omega - wc) * (omega + wc))


def _adaptive(func, lo, hi, epsabs, limit, points=None, epsrel=_EPSREL):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(
            func, lo, hi, epsabs=epsabs, epsrel=epsrel, limit=limit, points=points, full_output=1
        )
    value, err = out[0], out[1]
    if len(out) > 3 and err > max(epsabs, _EPSREL * abs(value)):
        raise QuadratureError(f"adaptive quadrature on [{lo}, {hi}] failed: {out[3]!r}", err)
    return value, err


@lru_cache(maxsize=1 << 18)
def lamb_integral(cutoff: float, omega: float, tol: float = 1e-9, limit: int = 200):
    """PV int_0^inf du / (omega - cutoff cosh u) and its error estimate.

    The tolerance passed here is the one on D_j / g^2, so the integral itself
    is resolved to ``tol / (2 cutoff^2)``.
    """
    wc = cutoff
    if omega == wc:
        raise BandEdgeSingularity(omega, wc)
    epsabs = tol / (2.0 * wc * wc)

    if omega < wc:
        gap = omega - wc

        def below(u):
            if u > _COSH_GUARD:
                return 0.0
            sh = math.sinh(0.5 * u)
            return 1.0 / (gap - 2.0 * wc * sh * sh)

        # peak of width ~sqrt(2 (w_j - w) / w_j) at u = 0 when omega nears the cutoff
        split = min(1.0, 20.0 * math.sqrt(2.0 * (wc - omega) / wc))
        head, err_head = _adaptive(below, 0.0, split, 0.5 * epsabs, limit)
        rest, err_rest = _adaptive(below, split, math.inf, 0.5 * epsabs, limit)
        return head + rest, err_head + err_rest

    # cosh(u0) - 1 = 2 sinh(u0/2)^2 = (omega - wc)/wc; omega - wc is exact near the cutoff
    gap = omega - wc
    u0 = 2.0 * math.asinh(math.sqrt(0.5 * gap / wc))
    s0 = math.sqrt(gap * (omega + wc)) / wc
    curvature = (omega / wc) / (2.0 * wc * s0 * s0)

    def pole_free(u):
        # (w - w_j cosh u) written as a product so the zero sits exactly at u0
        x = u - u0
        if abs(x) < 1e-12 * max(1.0, u0):
            return curvature
        denom = -2.0 * wc * math.sinh(0.5 * (u + u0)) * math.sinh(0.5 * x)
        return 1.0 / denom + 1.0 / (wc * s0 * x)

    def tail(u):
        if u > _COSH_GUARD:
            return 0.0
        return 1.0 / (-2.0 * wc * math.sinh(0.5 * (u + u0)) * math.sinh(0.5 * (u - u0)))

    # near a cutoff both pieces are ~1/u0 and cancel to O(1), so a tolerance
    # relative to each piece would be too loose; converge on epsabs alone
    near, err_near = _adaptive(pole_free, 0.0, 2.0 * u0, 0.5 * epsabs, limit, points=[u0], epsrel=0.0)
    start = 2.0 * u0
    if start >= 1.0:
        far, err_far = _adaptive(tail, start, math.inf, 0.5 * epsabs, limit, epsrel=0.0)
        return near + far, err_near + err_far
    # the tail falls like 1/u^2 from u ~ u0 to u ~ 1; decade breakpoints keep quad on scale
    decades = [start * 10.0**k for k in range(1, int(-math.log10(start)) + 1)]
    mid, err_mid = _adaptive(tail, start, 1.0, 0.25 * epsabs, limit, points=decades or None, epsrel=0.0)
    far, err_far = _adaptive(tail, 1.0, math.inf, 0.25 * epsabs, limit, epsrel=0.0)
    return near + mid + far, err_near + err_mid + err_far


def lamb_shift_mode(
    mode: Mode,
    omega: float,
    g: float,
    quad: QuadConfig = QuadConfig(),
    with_error: bool = False,
):
    """Principal-value Lamb shift D_j(omega) of one coupled mode."""
    if not mode.coupled:
        return (0.0, 0.0) if with_error else 0.0
    integral, err = lamb_integral(mode.cutoff, float(omega), quad.tol, quad.limit)
    scale = 2.0 * g * g * mode.cutoff * mode.cutoff
    if with_error:
        return scale * integral, scale * err
    return scale * integral


def self_energy_total(omega: float, params, policy: Optional[TruncationPolicy] = None) -> SelfEnergy:
    """Sum D_j and Gamma_j over the truncated mode set.

    ``params`` needs ``g``, ``geom`` and optionally ``truncation`` and ``quad``.
    """
    policy = policy if policy is not None else getattr(params, "truncation", TruncationPolicy())
    quad = getattr(params, "quad", QuadConfig())
    g = params.g
    propagating = propagating_modes(params.geom, omega)
    mode_set = policy.select(omega, params.geom)

    per_mode = []
    convergence = []
    lamb = 0.0
    decay = 0.0
    err_total = 0.0
    for mode in mode_set:
        d_j, err = lamb_shift_mode(mode, omega, g, quad, with_error=True)
        gamma_j = decay_rate_mode(mode, omega, g)
        lamb += d_j
        decay += gamma_j
        err_total += err
        per_mode.append((mode.index, d_j, gamma_j))
        convergence.append((len(per_mode), lamb))
    # every propagating mode is in mode_set by construction of the policies
    assert len(propagating) <= len(mode_set)
    return SelfEnergy(
        lamb_shift=lamb,
        decay=decay,
        per_mode=tuple(per_mode),
        mode_set=tuple(mode_set),
        convergence=tuple(convergence),
        error_estimate=err_total,
    )
