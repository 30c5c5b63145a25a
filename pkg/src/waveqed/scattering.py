"""Single-photon scattering off the driven three-level emitter.

Everything here is evaluated at a fixed photon frequency ``omega`` that lies
strictly inside a band ``w_{jmax} < omega < w_{jmax+1}``; the channels are the
``jmax`` propagating coupled TM modes.
"""
from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import BandEdgeSingularity, DomainError
from .selfenergy import (
    QuadConfig,
    SelfEnergy,
    TruncationPolicy,
    propagating_modes,
    self_energy_total,
)
from .waveguide import (
    Mode,
    WaveguideGeometry,
    coupling_strength,
    density_of_states,
    longitudinal_wavenumber,
)

__all__ = [
    "SystemParams",
    "InputState",
    "ScatteringResult",
    "EIT_POLE",
    "ResolventPole",
    "resolvent",
    "channel_modes",
    "scatter",
    "build_scss",
    "build_single_mode",
    "build_dark_state",
    "build_equal_superposition",
    "build_custom",
    "emitter_amplitude",
    "one_sided_limit",
    "NORM_TOL",
]

NORM_TOL = 1e-10

# test hook for the validation suite, see ``fault_injection``
_faults: set[str] = set()


@contextlib.contextmanager
def fault_injection(*names: str):
    """Temporarily corrupt the physics, e.g. ``"gamma_sign_flip"``."""
    added = set(names) - _faults
    _faults.update(added)
    try:
        yield
    finally:
        _faults.difference_update(added)


@dataclass(frozen=True)
class SystemParams:
    """Emitter frequency, drive (Rabi frequency and detuning) and coupling scale.

    All frequencies are in units of c/b.  The metastable level sits at
    ``omega_e - delta`` in the rotating frame, so the transparency pole is at
    ``omega = omega_e - delta``.
    """

    omega_e: float
    Omega: float = 0.0
    delta: float = 0.0
    g: float = 0.1
    geom: WaveguideGeometry = field(default_factory=WaveguideGeometry)
    truncation: TruncationPolicy = field(default_factory=TruncationPolicy)
    quad: QuadConfig = field(default_factory=QuadConfig)

    def __post_init__(self):
        if not self.Omega >= 0:
            raise DomainError(f"Rabi frequency must be >= 0, got {self.Omega!r}")
        if not self.g > 0:
            raise DomainError(f"coupling scale g must be > 0, got {self.g!r}")
        for name in ("omega_e", "Omega", "delta", "g"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")

    @property
    def eit_frequency(self) -> float:
        return self.omega_e - self.delta

    def at_eit_pole(self, omega: float) -> bool:
        if self.Omega == 0:
            return False
        return omega == self.eit_frequency or (omega - self.omega_e + self.delta) == 0.0

    def replace(self, **changes) -> "SystemParams":
        from dataclasses import replace

        return replace(self, **changes)


class ResolventPole:
    """Marker for |G| = infinity at the two-photon resonance."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "EIT_POLE"

    real = math.inf

    @property
    def imag(self):
        return math.nan


EIT_POLE = ResolventPole()

Resolvent = Union[complex, ResolventPole]


@dataclass(frozen=True, eq=False)
class InputState:
    """Normalised amplitudes c_j over the propagating channels at ``omega``."""

    omega: float
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex).reshape(-1)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def jmax(self) -> int:
        return len(self.coeffs)

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.coeffs) ** 2))


@dataclass(frozen=True, eq=False)
class ScatteringResult:
    omega: float
    r: np.ndarray
    t: np.ndarray
    R_per_mode: np.ndarray
    T_per_mode: np.ndarray
    R_total: float
    T_total: float
    G_value: Resolvent
    alpha: complex
    self_energy: SelfEnergy

    @property
    def at_eit_pole(self) -> bool:
        return self.G_value is EIT_POLE


def channel_modes(omega: float, params: SystemParams) -> tuple[Mode, ...]:
    """Propagating coupled modes at ``omega``; rejects exact cutoffs."""
    modes = propagating_modes(params.geom, omega)
    if not modes:
        raise DomainError(f"omega={omega!r} lies below the lowest coupled cutoff")
    return modes


def _gamma_sign() -> float:
    return -1.0 if "gamma_sign_flip" in _faults else 1.0


def resolvent(omega: float, params: SystemParams, self_energy: Optional[SelfEnergy] = None) -> Resolvent:
    """G(w) = w - w_e - Omega^2/(w - w_e + delta) - Delta(w) + i Gamma(w)."""
    if self_energy is None:
        self_energy = self_energy_total(omega, params)
    if params.at_eit_pole(omega):
        return EIT_POLE
    drive = 0.0
    if params.Omega != 0:
        drive = params.Omega**2 / (omega - params.omega_e + params.delta)
    real = omega - params.omega_e - drive - self_energy.lamb_shift
    return complex(real, _gamma_sign() * self_energy.decay)


def _couplings(omega, modes, params):
    k = [longitudinal_wavenumber(m, omega) for m in modes]
    forward = np.array([coupling_strength(m, kj, params.g, params.geom) for m, kj in zip(modes, k)])
    backward = np.array([coupling_strength(m, -kj, params.g, params.geom) for m, kj in zip(modes, k)])
    rho = np.array([density_of_states(m, omega) for m in modes])
    return forward, backward, rho


def _check_input(state: InputState, modes):
    if state.jmax != len(modes):
        raise DomainError(
            f"input has {state.jmax} amplitudes but {len(modes)} channels propagate at omega={state.omega!r}"
        )
    if abs(state.norm - 1.0) > NORM_TOL:
        raise DomainError(f"input state is not normalised (sum |c_j|^2 = {state.norm!r})")


def scatter(state: InputState, params: SystemParams) -> ScatteringResult:
    """Reflection/transmission amplitudes and group-velocity-weighted R_j, T_j."""
    omega = state.omega
    try:
        modes = channel_modes(omega, params)
    except BandEdgeSingularity as exc:
        raise BandEdgeSingularity(
            exc.omega,
            exc.cutoff,
            f"omega={omega!r} is a cutoff frequency; use one_sided_limit() for band-edge behaviour",
        ) from exc
    _check_input(state, modes)
    se = self_energy_total(omega, params)
    G = resolvent(omega, params, se)
    c = state.coeffs
    g_fwd, g_bwd, rho = _couplings(omega, modes, params)

    if G is EIT_POLE:
        r = np.zeros_like(c)
        t = c.copy()
        alpha = 0j
    else:
        drive = np.sum(c * g_fwd)
        alpha = drive / G
        r = -2j * math.pi * rho * np.conj(g_bwd) * alpha
        t = c - 2j * math.pi * rho * np.conj(g_fwd) * alpha

    flux_in = np.sum(np.abs(c) ** 2 / rho)
    R_j = np.abs(r) ** 2 / rho / flux_in
    T_j = np.abs(t) ** 2 / rho / flux_in
    return ScatteringResult(
        omega=omega,
        r=r,
        t=t,
        R_per_mode=R_j,
        T_per_mode=T_j,
        R_total=float(np.sum(R_j)),
        T_total=float(np.sum(T_j)),
        G_value=G,
        alpha=complex(alpha),
        self_energy=se,
    )


def _normalised(omega, vec) -> InputState:
    vec = np.asarray(vec, dtype=complex)
    norm = math.sqrt(float(np.sum(np.abs(vec) ** 2)))
    if norm == 0:
        raise DomainError("input vector is zero")
    return InputState(omega, vec / norm)


def build_scss(omega: float, params: SystemParams) -> InputState:
    """c_j proportional to rho_j g*_{j,k_j}; the input that can be fully reflected."""
    modes = channel_modes(omega, params)
    g_fwd, _, rho = _couplings(omega, modes, params)
    return _normalised(omega, rho * np.conj(g_fwd))


def build_single_mode(omega: float, n: int, params: SystemParams) -> InputState:
    modes = channel_modes(omega, params)
    if not 1 <= n <= len(modes):
        raise DomainError(f"channel {n} does not propagate at omega={omega!r} (jmax={len(modes)})")
    c = np.zeros(len(modes), dtype=complex)
    c[n - 1] = 1.0
    return InputState(omega, c)


def build_dark_state(omega: float, params: SystemParams) -> InputState:
    """Two-channel vector (g_2, -g_1, 0, ...) with sum_j c_j g_{j,k_j} = 0."""
    modes = channel_modes(omega, params)
    if len(modes) < 2:
        raise DomainError("no dark state exists with a single propagating channel")
    g_fwd, _, _ = _couplings(omega, modes, params)
    c = np.zeros(len(modes), dtype=complex)
    c[0] = g_fwd[1]
    c[1] = -g_fwd[0]
    return _normalised(omega, c)


def build_equal_superposition(omega: float, params: SystemParams) -> InputState:
    modes = channel_modes(omega, params)
    n = len(modes)
    return InputState(omega, np.full(n, 1.0 / math.sqrt(n), dtype=complex))


def build_custom(omega: float, vector: Sequence[complex], params: SystemParams) -> InputState:
    """Normalise an arbitrary amplitude vector; its length must equal jmax."""
    modes = channel_modes(omega, params)
    if len(vector) != len(modes):
        raise DomainError(f"custom input has {len(vector)} amplitudes, {len(modes)} channels propagate")
    return _normalised(omega, vector)


def emitter_amplitude(omega: float, state: InputState, params: SystemParams) -> complex:
    """Excited-state amplitude sum_j c_j g_{j,k_j} / G(omega)."""
    modes = channel_modes(omega, params)
    _check_input(state, modes)
    G = resolvent(omega, params)
    if G is EIT_POLE:
        return 0j
    g_fwd, _, _ = _couplings(omega, modes, params)
    return complex(np.sum(state.coeffs * g_fwd) / G)


InputBuilder = Callable[[float, SystemParams], InputState]


def one_sided_limit(
    edge: float,
    side: str,
    builder: InputBuilder,
    params: SystemParams,
    steps: Sequence[float] = (1e-4, 1e-6, 1e-8, 1e-10),
) -> list[tuple[float, float]]:
    """R_total approached from ``side`` ('+' or '-') of a cutoff ``edge``.

    Returns ``(offset, R_total)`` pairs with shrinking offsets; the last entry
    is the best estimate of the limit.
    """
    if side not in ("+", "-"):
        raise ValueError("side must be '+' or '-'")
    sign = 1.0 if side == "+" else -1.0
    out = []
    for h in steps:
        omega = edge + sign * h * max(1.0, abs(edge))
        result = scatter(builder(omega, params), params)
        out.append((h, result.R_total))
    return out

