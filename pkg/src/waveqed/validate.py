"""Invariant checks run by ``waveqed validate``."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .analysis import band_edges, band_midpoint, count_ctp, find_crp, sign_rule_crp_count
from .oracles import lamb_shift_symmetric_window
from .scattering import (
    SystemParams,
    build_dark_state,
    build_scss,
    build_single_mode,
    fault_injection,
    scatter,
)
from .selfenergy import QuadConfig, decay_rate_mode, lamb_shift_mode, propagating_modes
from .waveguide import WaveguideGeometry, enumerate_coupled_modes


@dataclass
class CheckResult:
    name: str
    passed: bool
    metric: float
    threshold: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<26} metric={self.metric:.3e}  threshold={self.threshold:.1e}  {self.detail}"


def _random_point(rng, geom, bands=(1, 2, 3)):
    band = int(rng.choice(bands))
    lo, hi = band_edges(geom, band)
    margin = 1e-6 * (hi - lo)
    omega = float(rng.uniform(lo + margin, hi - margin))
    return band, omega


def _random_params(rng, geom, band):
    return SystemParams(
        omega_e=band_midpoint(geom, band) + float(rng.uniform(-0.5, 0.5)),
        Omega=float(rng.uniform(0.0, 2.0)),
        delta=float(rng.uniform(-2.0, 2.0)),
        g=float(rng.uniform(0.01, 0.2)),
        geom=geom,
    )


def _random_input(rng, n):
    c = rng.normal(size=n) + 1j * rng.normal(size=n)
    return c / np.linalg.norm(c)


def check_cutoffs(geom: WaveguideGeometry) -> CheckResult:
    expected = [3.78, 7.02, 9.65, 10.93]
    modes = enumerate_coupled_modes(WaveguideGeometry(a=1.5), 11.0)
    err = max(abs(m.cutoff - e) for m, e in zip(modes, expected)) if len(modes) == 4 else math.inf
    return CheckResult("cutoffs (a=1.5)", err <= 0.01, err, 0.01)


def check_unitarity(rng, geom, samples) -> CheckResult:
    from .scattering import InputState

    worst = 0.0
    for _ in range(samples):
        band, omega = _random_point(rng, geom)
        params = _random_params(rng, geom, band)
        res = scatter(InputState(omega, _random_input(rng, band)), params)
        worst = max(worst, abs(res.R_total + res.T_total - 1.0))
    return CheckResult("unitarity R+T=1", worst <= 1e-12, worst, 1e-12, f"{samples} samples")


def check_eit(rng, geom, samples) -> CheckResult:
    from .scattering import InputState

    worst = 0.0
    for _ in range(samples):
        band = int(rng.choice((1, 2, 3)))
        lo, hi = band_edges(geom, band)
        we = band_midpoint(geom, band)
        omega_pole = float(rng.uniform(lo + 1e-3, hi - 1e-3))
        params = SystemParams(omega_e=we, Omega=float(rng.uniform(0.1, 2)), delta=we - omega_pole, g=0.1, geom=geom)
        res = scatter(InputState(params.eit_frequency, _random_input(rng, band)), params)
        worst = max(worst, res.R_total)
    return CheckResult("EIT pole R=0", worst == 0.0, worst, 0.0, f"{samples} samples")


def check_closed_forms(rng, geom, samples) -> CheckResult:
    worst = 0.0
    for _ in range(samples):
        band, omega = _random_point(rng, geom)
        params = _random_params(rng, geom, band)
        modes = propagating_modes(geom, omega)
        gam = np.array([decay_rate_mode(m, omega, params.g) for m in modes])
        res = scatter(build_scss(omega, params), params)
        G2 = abs(res.G_value) ** 2
        worst = max(worst, abs(res.R_total - gam.sum() ** 2 / G2))
        worst = max(worst, np.max(np.abs(res.R_per_mode - gam * gam.sum() / G2)))
        n = int(rng.integers(1, band + 1))
        sms = scatter(build_single_mode(omega, n, params), params)
        worst = max(worst, abs(sms.R_total - gam.sum() * gam[n - 1] / G2))
        worst = max(worst, abs(sms.R_per_mode[n - 1] - gam[n - 1] ** 2 / G2))
    return CheckResult("closed-form equivalence", worst <= 1e-12, worst, 1e-12, f"{samples} samples")


def check_pv_oracle(rng, geom, samples, tol) -> CheckResult:
    worst = 0.0
    quad = QuadConfig(tol=tol)
    for _ in range(samples):
        band, omega = _random_point(rng, geom)
        mode = propagating_modes(geom, omega)[int(rng.integers(0, band))]
        g = float(rng.uniform(0.01, 0.3))
        fast = lamb_shift_mode(mode, omega, g, quad)
        ref = lamb_shift_symmetric_window(mode, omega, g)
        worst = max(worst, abs(fast - ref) / abs(ref))
    return CheckResult("PV oracle agreement", worst < 1e-6, worst, 1e-6, f"{samples} points, tol={tol:g}")


def check_sign_rule(geom, points) -> CheckResult:
    band = band_edges(geom, 1)
    base = SystemParams(omega_e=band_midpoint(geom, 1), g=0.1, geom=geom)
    mismatches = 0
    for Om in np.linspace(0.0, 2.0, points):
        for d in np.linspace(-2.0, 2.0, points):
            p = base.replace(Omega=float(Om), delta=float(d))
            rep = find_crp(band, "single-mode-regime", p)
            if rep.crp_count != sign_rule_crp_count(band, p) or rep.ctp_count != count_ctp(band, p):
                mismatches += 1
    return CheckResult("sign-rule consistency", mismatches == 0, float(mismatches), 0.0, f"{points}x{points} grid")


def check_dark_state(geom) -> CheckResult:
    band = band_edges(geom, 2)
    params = SystemParams(omega_e=band_midpoint(geom, 2), Omega=0.5, delta=0.0, g=0.1, geom=geom)
    worst = 0.0
    for omega in np.linspace(band[0] + 1e-6, band[1] - 1e-6, 101):
        worst = max(worst, scatter(build_dark_state(float(omega), params), params).R_total)
    return CheckResult("dark state R=0", worst <= 1e-12, worst, 1e-12)


def run_checks(seed=20240611, samples=200, pv_tol=1e-9, table_points=12, a=1.5, faults=()):
    """Run every check; returns a list of :class:`CheckResult`."""
    geom = WaveguideGeometry(a=a)
    rng = np.random.default_rng(seed)
    with fault_injection(*faults):
        results = [
            check_cutoffs(geom),
            check_unitarity(rng, geom, samples),
            check_eit(rng, geom, min(samples, 50)),
            check_closed_forms(rng, geom, min(samples, 100)),
            check_pv_oracle(rng, geom, 20, pv_tol),
            check_sign_rule(geom, table_points),
            check_dark_state(geom),
        ]
    return results


def summary(results) -> dict:
    return {
        "passed": all(r.passed for r in results),
        "checks": [asdict(r) for r in results],
    }
