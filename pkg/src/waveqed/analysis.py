"""Peak finding, dressed-state estimates, phase maps and spectral sweeps.

A band is the open interval between consecutive coupled cutoffs
``(w_{jmax}, w_{jmax+1})``.  Complete transmission peaks (CTP) sit at the
two-photon resonance ``omega_e - delta``; complete reflection peaks (CRP) are
zeros of Re G, which is increasing on each side of that pole.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize

from .errors import DomainError, WaveQEDError
from .scattering import (
    EIT_POLE,
    InputState,
    SystemParams,
    build_scss,
    build_single_mode,
    channel_modes,
    scatter,
)
from .selfenergy import coupled_modes_upto, self_energy_total
from .waveguide import WaveguideGeometry

log = logging.getLogger(__name__)

__all__ = [
    "DressedStates",
    "PeakReport",
    "PhaseMap",
    "Spectrum",
    "band_edges",
    "band_midpoint",
    "dressed_states",
    "real_resolvent",
    "count_ctp",
    "sign_rule_crp_count",
    "find_crp",
    "phase_map",
    "frequency_grid",
    "spectrum",
    "EDGE_OFFSET",
    "CRP_VERIFY_TOL",
]

EDGE_OFFSET = 1e-7
CRP_VERIFY_TOL = 1e-9
ROOT_TOL = 1e-10
GRID_NUDGE = 1e-9


def band_edges(geom: WaveguideGeometry, jmax: int) -> tuple[float, float]:
    """(w_jmax, w_{jmax+1}): the band in which exactly ``jmax`` channels propagate."""
    if jmax < 1:
        raise DomainError(f"band index must be >= 1, got {jmax}")
    span = math.pi * math.sqrt(1 / geom.a**2 + 1)
    while True:
        modes = coupled_modes_upto(geom, span)
        if len(modes) > jmax:
            return modes[jmax - 1].cutoff, modes[jmax].cutoff
        span *= 1.5


def band_midpoint(geom: WaveguideGeometry, jmax: int) -> float:
    lo, hi = band_edges(geom, jmax)
    return 0.5 * (lo + hi)


def _check_band(band, params: SystemParams) -> int:
    lo, hi = band
    if not lo < hi:
        raise DomainError(f"empty band {band!r}")
    modes = coupled_modes_upto(params.geom, hi)
    inside = [m for m in modes if lo < m.cutoff < hi]
    if inside:
        raise DomainError(f"band {band!r} contains the cutoff of {inside[0].label}")
    jmax = sum(1 for m in modes if m.cutoff <= lo)
    if jmax == 0:
        raise DomainError(f"no coupled mode propagates in band {band!r}")
    return jmax


@dataclass(frozen=True)
class DressedStates:
    nu_plus: float
    nu_minus: float
    theta: float
    nu_tilde_plus: float
    nu_tilde_minus: float
    lamb_shift_at_emitter: float


def dressed_states(params: SystemParams) -> DressedStates:
    """Eigenfrequencies of the driven {|e>, |f>} pair and their Lamb-shifted values.

    With |f> at ``omega_e - delta`` the eigenvalues are
    ``omega_e + (-delta +/- sqrt(4 Omega^2 + delta^2)) / 2``, which are the
    zeros of Re G when the Lamb shift is dropped.  ``sin(theta)^2`` is the
    excited-state weight of the upper branch.
    """
    Om, d, we = params.Omega, params.delta, params.omega_e
    root = math.sqrt(4 * Om * Om + d * d)
    nu_plus = we + 0.5 * (root - d)
    nu_minus = we - 0.5 * (root + d)
    # tan(theta) = 2 Omega / (root - delta) = (root + delta) / (2 Omega); pick the stable form
    if d <= 0:
        theta = math.atan2(2 * Om, root - d)
    else:
        theta = math.atan2(root + d, 2 * Om)
    lamb = self_energy_total(we, params).lamb_shift
    s2 = math.sin(theta) ** 2
    c2 = math.cos(theta) ** 2
    return DressedStates(nu_plus, nu_minus, theta, nu_plus + s2 * lamb, nu_minus + c2 * lamb, lamb)


def _lamb_total(omega: float, params: SystemParams) -> float:
    return self_energy_total(omega, params).lamb_shift


def real_resolvent(omega: float, params: SystemParams) -> float:
    """Re G(omega); +-inf on the two sides of the transparency pole is not produced here."""
    drive = 0.0
    if params.Omega != 0:
        drive = params.Omega**2 / (omega - params.omega_e + params.delta)
    return omega - params.omega_e - drive - _lamb_total(omega, params)


@lru_cache(maxsize=64)
def _lamb_on_grid(geom, g, truncation, quad, lo, hi, n):
    probe = SystemParams(omega_e=0.5 * (lo + hi), g=g, geom=geom, truncation=truncation, quad=quad)
    grid = np.linspace(lo, hi, n)
    lamb = np.array([_lamb_total(w, probe) for w in grid])
    grid.setflags(write=False)
    lamb.setflags(write=False)
    return grid, lamb


def _scan_grid(band, params: SystemParams, n_scan: int, edge_offset: float):
    lo, hi = band
    return _lamb_on_grid(
        params.geom, params.g, params.truncation, params.quad, lo + edge_offset, hi - edge_offset, n_scan
    )


def count_ctp(band, params: SystemParams) -> int:
    """1 if the transparency pole lies strictly inside ``band`` and the drive is on."""
    lo, hi = band
    if params.Omega == 0:
        return 0
    return int(lo < params.eit_frequency < hi)


def _edge_values(band, params, edge_offset):
    lo, hi = band
    return real_resolvent(lo + edge_offset, params), real_resolvent(hi - edge_offset, params)


def sign_rule_crp_count(band, params: SystemParams, edge_offset: float = EDGE_OFFSET) -> Optional[int]:
    """CRP count predicted from the signs of Re G at the band edges.

    Returns ``None`` for a sign pattern the rules do not cover (Re G falling
    across a band without a pole).
    """
    g_lo, g_hi = _edge_values(band, params, edge_offset)
    if count_ctp(band, params):
        if g_lo < 0 < g_hi:
            return 2
        if g_lo > 0 > g_hi:
            return 0
        return 1
    if g_lo * g_hi > 0:
        return 0
    if g_lo < 0 < g_hi:
        return 1
    return None


def _regime_label(ctp: int, crp: int) -> str:
    where = "within EIT window" if ctp else "outside EIT window"
    return f"{where}: {ctp} CTP, {crp} CRP"


@dataclass(frozen=True)
class PeakReport:
    band: tuple[float, float]
    ctp: tuple[float, ...]
    crp: tuple[float, ...]
    ctp_count: int
    crp_count: int
    regime_label: str
    predicted_crp_count: Optional[int] = None
    unverified: tuple[float, ...] = field(default=())
    crp_reflectance: tuple[float, ...] = field(default=())


def _refine(func, a, b, fa, fb, tol):
    root = optimize.brentq(func, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    if abs(func(root)) < tol:
        return root
    # brentq stalls on quadrature noise only in pathological cases; finish by bisection
    for _ in range(200):
        mid = 0.5 * (a + b)
        fm = func(mid)
        if abs(fm) < tol or mid in (a, b):
            return mid
        if (fm < 0) == (fa < 0):
            a, fa = mid, fm
        else:
            b, fb = mid, fm
    return 0.5 * (a + b)


def _pole_side_point(func, pole, toward, start, want_positive):
    """Point between ``start`` and the pole where Re G has the sign it takes at the pole."""
    eta = abs(pole - start) / 2
    floor = 8 * np.finfo(float).eps * max(1.0, abs(pole))
    while eta > floor:
        x = pole + toward * eta
        fx = func(x)
        if (fx > 0) == want_positive and fx != 0:
            return x, fx
        eta /= 16
    return None


def _brackets(xs, fs):
    out = []
    for i in range(len(xs) - 1):
        fa, fb = fs[i], fs[i + 1]
        if fa == 0:
            continue
        if fb == 0:
            out.append((xs[i + 1], xs[i + 1]))
        elif (fa < 0) != (fb < 0):
            out.append((xs[i], xs[i + 1]))
    return out


def _verify_input(kind: str, band_jmax: int):
    if kind == "auto":
        kind = "single-mode-regime" if band_jmax == 1 else "scss"
    if kind == "scss":
        return build_scss
    if kind == "single-mode-regime":
        if band_jmax != 1:
            raise DomainError("single-mode-regime verification needs the first band")
        return lambda w, p: build_single_mode(w, 1, p)
    raise DomainError(f"unknown input kind {kind!r}; use 'scss' or 'single-mode-regime'")


def find_crp(
    band,
    input_kind: str,
    params: SystemParams,
    n_scan: int = 2000,
    edge_offset: float = EDGE_OFFSET,
) -> PeakReport:
    """Locate all zeros of Re G inside ``band`` and verify R = 1 at each.

    The band is split at the transparency pole when it lies inside.  Each
    monotone piece is scanned for sign changes on the band grid (Lamb shifts
    on that grid are shared between calls with the same coupling and band),
    then every bracket is refined to ``|Re G| < 1e-10 max(1, |omega_e|)``.
    """
    band = (float(band[0]), float(band[1]))
    jmax = _check_band(band, params)
    builder = _verify_input(input_kind, jmax)
    grid, lamb = _scan_grid(band, params, n_scan, edge_offset)
    lo_e, hi_e = grid[0], grid[-1]
    base = grid - params.omega_e - lamb
    tol = ROOT_TOL * max(1.0, abs(params.omega_e))

    def reg(w):
        return real_resolvent(w, params)

    ctp = count_ctp(band, params)
    pole = params.eit_frequency
    values = base
    if params.Omega != 0:
        with np.errstate(divide="ignore"):
            values = base - params.Omega**2 / (grid - params.omega_e + params.delta)

    pieces = []
    if ctp:
        left = grid < pole
        right = grid > pole
        pieces.append((list(grid[left]), list(values[left]), +1))
        pieces.append((list(grid[right]), list(values[right]), -1))
    else:
        pieces.append((list(grid), list(values), 0))

    roots = []
    # a root closer to the pole than one ulp cannot be located or verified
    unresolved = []
    for xs, fs, pole_side in pieces:
        if pole_side == +1 and lo_e < pole:
            # Re G -> +inf approaching the pole from below
            anchor = xs[-1] if xs else lo_e
            found = _pole_side_point(reg, pole, -1.0, anchor, want_positive=True)
            if found:
                xs, fs = xs + [found[0]], fs + [found[1]]
            elif xs and fs[-1] < 0:
                unresolved.append(float(np.nextafter(pole, -math.inf)))
        elif pole_side == -1 and pole < hi_e:
            anchor = xs[0] if xs else hi_e
            found = _pole_side_point(reg, pole, +1.0, anchor, want_positive=False)
            if found:
                xs, fs = [found[0]] + xs, [found[1]] + fs
            elif xs and fs[0] > 0:
                unresolved.append(float(np.nextafter(pole, math.inf)))
        if not xs:
            continue
        # refresh endpoints with direct evaluation; grid values are shared
        for a, b in _brackets(xs, fs):
            if a == b:
                roots.append(a)
                continue
            fa, fb = reg(a), reg(b)
            if fa == 0:
                roots.append(a)
            elif fb == 0:
                roots.append(b)
            elif (fa < 0) != (fb < 0):
                roots.append(_refine(reg, a, b, fa, fb, tol))

    crp, rejected, refl = [], list(unresolved), []
    for w in sorted(roots):
        try:
            R = scatter(builder(w, params), params).R_total
        except WaveQEDError as exc:
            log.debug("could not verify root %r: %s", w, exc)
            rejected.append(w)
            continue
        if R >= 1 - CRP_VERIFY_TOL:
            crp.append(w)
            refl.append(R)
        else:
            rejected.append(w)

    ctp_freqs = (pole,) if ctp else ()
    return PeakReport(
        band=band,
        ctp=ctp_freqs,
        crp=tuple(crp),
        ctp_count=ctp,
        crp_count=len(crp),
        regime_label=_regime_label(ctp, len(crp)),
        predicted_crp_count=sign_rule_crp_count(band, params, edge_offset),
        unverified=tuple(rejected),
        crp_reflectance=tuple(refl),
    )


@dataclass(frozen=True, eq=False)
class PhaseMap:
    """CTP/CRP counts on an (Omega, delta) grid; -1 marks a failed cell."""

    Omega: np.ndarray
    delta: np.ndarray
    ctp: np.ndarray
    crp: np.ndarray
    predicted_crp: np.ndarray
    band: tuple[float, float]
    failures: tuple[tuple[int, int, str], ...] = ()


def _map(func, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(func, items))
    return [func(x) for x in items]


def phase_map(
    Omega_values: Sequence[float],
    delta_values: Sequence[float],
    params: SystemParams,
    band,
    input_kind: str = "auto",
    n_scan: int = 2000,
    threads: int = 1,
) -> PhaseMap:
    Omega_values = np.asarray(Omega_values, dtype=float)
    delta_values = np.asarray(delta_values, dtype=float)
    if Omega_values.size == 0 or delta_values.size == 0:
        raise DomainError("phase map ranges must be non-empty")
    band = (float(band[0]), float(band[1]))
    _check_band(band, params)
    cells = [(i, j) for i in range(Omega_values.size) for j in range(delta_values.size)]

    def run(cell):
        i, j = cell
        try:
            p = params.replace(Omega=float(Omega_values[i]), delta=float(delta_values[j]))
            rep = find_crp(band, input_kind, p, n_scan=n_scan)
            pred = -1 if rep.predicted_crp_count is None else rep.predicted_crp_count
            return rep.ctp_count, rep.crp_count, pred, None
        except (WaveQEDError, ArithmeticError, ValueError) as exc:
            return -1, -1, -1, f"{type(exc).__name__}: {exc}"

    results = _map(run, cells, threads)
    shape = (Omega_values.size, delta_values.size)
    ctp = np.full(shape, -1, dtype=int)
    crp = np.full(shape, -1, dtype=int)
    pred = np.full(shape, -1, dtype=int)
    failures = []
    for (i, j), (a, b, c, err) in zip(cells, results):
        ctp[i, j], crp[i, j], pred[i, j] = a, b, c
        if err:
            failures.append((i, j, err))
    return PhaseMap(Omega_values, delta_values, ctp, crp, pred, band, tuple(failures))


def frequency_grid(omega_min: float, omega_max: float, points: int, params: SystemParams) -> np.ndarray:
    """Uniform grid with exact cutoffs and the exact pole nudged by 1e-9 into a band."""
    if points < 1:
        raise DomainError("grid needs at least one point")
    if points == 1:
        grid = np.array([float(omega_min)])
    else:
        grid = np.linspace(omega_min, omega_max, points)
    cutoffs = {m.cutoff for m in coupled_modes_upto(params.geom, max(omega_max, omega_min) + 1.0)}
    for i, w in enumerate(grid):
        if w in cutoffs:
            # the last point of an interval belongs to the band below it
            grid[i] = w - GRID_NUDGE if (i == len(grid) - 1 and len(grid) > 1) else w + GRID_NUDGE
        elif params.at_eit_pole(w):
            grid[i] = w + GRID_NUDGE
    return grid


InputBuilder = Callable[[float, SystemParams], InputState]


@dataclass(frozen=True, eq=False)
class Spectrum:
    columns: tuple[str, ...]
    rows: np.ndarray
    jmax: int
    failures: tuple[tuple[float, str], ...] = ()

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]


def spectrum(
    omega_grid: Sequence[float],
    input_builder: InputBuilder,
    params: SystemParams,
    threads: int = 1,
) -> Spectrum:
    """One row per frequency: omega, R, T, Re G, Im G, R_1..R_J, T_1..T_J.

    Channels that do not propagate at a given frequency get R_j = T_j = 0.
    Failed points become NaN rows and are listed in ``failures``.
    """
    grid = [float(w) for w in omega_grid]
    J = 0
    for w in grid:
        try:
            J = max(J, len(channel_modes(w, params)))
        except WaveQEDError:
            pass

    def run(w):
        try:
            res = scatter(input_builder(w, params), params)
        except (WaveQEDError, ArithmeticError, ValueError) as exc:
            return None, f"{type(exc).__name__}: {exc}"
        row = np.zeros(5 + 2 * J)
        row[0] = w
        row[1] = res.R_total
        row[2] = res.T_total
        if res.G_value is EIT_POLE:
            row[3], row[4] = math.inf, res.self_energy.decay
        else:
            row[3], row[4] = res.G_value.real, res.G_value.imag
        n = len(res.R_per_mode)
        row[5 : 5 + n] = res.R_per_mode
        row[5 + J : 5 + J + n] = res.T_per_mode
        return row, None

    out = _map(run, grid, threads)
    rows = np.full((len(grid), 5 + 2 * J), np.nan)
    failures = []
    for i, (w, (row, err)) in enumerate(zip(grid, out)):
        if row is None:
            rows[i, 0] = w
            failures.append((w, err))
        else:
            rows[i] = row
    columns = ("omega", "R_total", "T_total", "ReG", "ImG")
    columns += tuple(f"R_{j}" for j in range(1, J + 1)) + tuple(f"T_{j}" for j in range(1, J + 1))
    return Spectrum(columns, rows, J, tuple(failures))
