"""Single-photon scattering off a driven three-level emitter in a rectangular waveguide."""

__version__ = "0.1.0"

from .errors import BandEdgeSingularity, DomainError, QuadratureError, WaveQEDError
from .waveguide import Mode, WaveguideGeometry, enumerate_coupled_modes
from .selfenergy import QuadConfig, SelfEnergy, TruncationPolicy, self_energy_total
from .scattering import (
    EIT_POLE,
    InputState,
    ScatteringResult,
    SystemParams,
    build_custom,
    build_dark_state,
    build_equal_superposition,
    build_scss,
    build_single_mode,
    resolvent,
    scatter,
)
from .analysis import PeakReport, dressed_states, find_crp, phase_map, spectrum

__all__ = [
    "__version__",
    "BandEdgeSingularity",
    "DomainError",
    "QuadratureError",
    "WaveQEDError",
    "Mode",
    "WaveguideGeometry",
    "enumerate_coupled_modes",
    "QuadConfig",
    "SelfEnergy",
    "TruncationPolicy",
    "self_energy_total",
    "EIT_POLE",
    "InputState",
    "ScatteringResult",
    "SystemParams",
    "build_custom",
    "build_dark_state",
    "build_equal_superposition",
    "build_scss",
    "build_single_mode",
    "resolvent",
    "scatter",
    "PeakReport",
    "dressed_states",
    "find_crp",
    "phase_map",
    "spectrum",
]
