"""Independent reference evaluations used by tests and ``waveqed validate``.

None of these share code paths with :mod:`waveqed.selfenergy`: they integrate
in the original longitudinal wavenumber ``k`` and recover principal values or
delta functions by limiting procedures.
"""
from __future__ import annotations

import math
import warnings

from scipy import integrate

from .waveguide import Mode

__all__ = [
    "richardson",
    "lamb_shift_symmetric_window",
    "decay_rate_lorentzian",
    "lamb_shift_closed_form",
]


def richardson(values, ratio, powers):
    """Eliminate error terms h**p for p in ``powers`` from a geometric sequence.

    ``values[i]`` is the estimate at step ``h / ratio**i``.
    """
    table = [float(v) for v in values]
    for p in powers:
        factor = ratio**p
        table = [(factor * table[i + 1] - table[i]) / (factor - 1.0) for i in range(len(table) - 1)]
        if len(table) == 1:
            break
    return table[-1]


def _quad(func, lo, hi, limit=500):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(func, lo, hi, epsabs=1e-15, epsrel=1e-13, limit=limit)[0]


def lamb_shift_symmetric_window(mode: Mode, omega: float, g: float, levels: int = 5) -> float:
    """PV integral over k with the window (k_j - eps, k_j + eps) excised, eps -> 0.

    The excised contribution is odd in eps, so Richardson extrapolation over
    powers 1, 3, 5, ... removes it.
    """
    wc = mode.cutoff
    coef = g * g * wc * wc

    def integrand(k):
        wk = math.hypot(wc, k)
        return coef / (wk * (omega - wk))

    # integrand is even in k
    if omega < wc:
        return 2.0 * _quad(integrand, 0.0, math.inf)

    kj = math.sqrt((omega - wc) * (omega + wc))
    eps0 = 0.25 * kj
    estimates = []
    for i in range(levels):
        eps = eps0 / 2**i
        left = _quad(integrand, 0.0, kj - eps)
        mid = _quad(integrand, kj + eps, 2.0 * kj)
        right = _quad(integrand, 2.0 * kj, math.inf)
        estimates.append(2.0 * (left + mid + right))
    return richardson(estimates, 2.0, [1, 3, 5, 7, 9][: levels - 1])


def decay_rate_lorentzian(mode: Mode, omega: float, g: float, levels: int = 6) -> float:
    """pi int dk |g_{j,k}|^2 delta(omega - w_{j,k}) with a Lorentzian delta of width eta -> 0.

    This is the imaginary part left by the Sokhotski-Plemelj split of the
    self-energy; the roots +k_j and -k_j each contribute pi |g|^2 rho_j.
    """
    wc = mode.cutoff
    if omega <= wc:
        return 0.0
    coef = g * g * wc * wc
    kj = math.sqrt((omega - wc) * (omega + wc))
    eta0 = 0.05 * (omega - wc)
    estimates = []
    for i in range(levels):
        eta = eta0 / 2**i

        def integrand(k, eta=eta):
            wk = math.hypot(wc, k)
            return coef / wk * eta / ((omega - wk) ** 2 + eta**2)

        width = max(20 * eta, 1e-12)
        pieces = _quad(integrand, 0.0, max(kj - width, 0.0))
        pieces += _quad(integrand, max(kj - width, 0.0), kj + width)
        pieces += _quad(integrand, kj + width, math.inf)
        # pi * (1/pi) from the Lorentzian, times 2 for the k < 0 half
        estimates.append(2.0 * pieces)
    return richardson(estimates, 2.0, list(range(1, levels)))


def lamb_shift_closed_form(cutoff: float, omega: float, g: float) -> float:
    """Analytic value of D_j, valid for |omega| < cutoff and omega > cutoff."""
    wc = cutoff
    pref = 2.0 * g * g * wc * wc
    if omega > wc:
        s = math.sqrt((omega - wc) / (omega + wc))
        return pref * math.log((1 + s) / (1 - s)) / math.sqrt((omega - wc) * (omega + wc))
    if omega > -wc:
        root = math.sqrt((wc - omega) * (wc + omega))
        return -pref * 2.0 / root * math.atan(math.sqrt((wc + omega) / (wc - omega)))
    raise ValueError("closed form implemented for omega > -cutoff only")


