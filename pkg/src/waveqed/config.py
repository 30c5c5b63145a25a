"""Run configuration, figure presets and their resolution into concrete jobs."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Optional, Union

from .analysis import band_edges
from .errors import DomainError
from .scattering import (
    SystemParams,
    build_custom,
    build_dark_state,
    build_equal_superposition,
    build_scss,
    build_single_mode,
)
from .selfenergy import QuadConfig, TruncationPolicy
from .waveguide import WaveguideGeometry

COMMANDS = ("modes", "spectrum", "phase-map", "dressed", "validate")
FORMATS = ("csv", "json")


class ConfigError(DomainError):
    """Malformed or inconsistent configuration (CLI exit code 2)."""


@dataclass
class RunConfig:
    command: str = "spectrum"
    preset: Optional[str] = None
    a: float = 1.5
    z0: float = 0.0
    omega_e: Union[float, str] = "mid"
    Omega: float = 0.0
    delta: float = 0.0
    g: float = 0.1
    band: Optional[int] = 1
    band_interval: Optional[list[float]] = None
    input: str = "scss"
    omega_min: Optional[float] = None
    omega_max: Optional[float] = None
    omega_points: int = 401
    Omega_min: float = 0.0
    Omega_max: float = 2.0
    Omega_points: int = 50
    delta_min: float = -2.0
    delta_max: float = 2.0
    delta_points: int = 50
    truncation_multiplier: Optional[float] = None
    pv_tol: float = 1e-9
    n_scan: int = 2000
    out: Optional[str] = None
    format: str = "csv"
    threads: int = 1
    seed: int = 20240611
    samples: int = 200
    label: Optional[str] = None

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        cleaned = {}
        for key, value in data.items():
            name = key.replace("-", "_")
            if name not in known:
                raise ConfigError(f"unknown config key {key!r}")
            if name in _FLOAT_FIELDS and isinstance(value, int) and not isinstance(value, bool):
                value = float(value)
            cleaned[name] = value
        cfg = cls(**cleaned)
        cfg.check()
        return cfg

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        return cls.from_dict(data)

    def check(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}; choose from {COMMANDS}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        if self.preset is not None and self.preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}; choose from {sorted(PRESETS)}")
        if not (isinstance(self.omega_e, (int, float)) or self.omega_e in ("mid", "band-midpoint")):
            raise ConfigError("omega_e must be a number or 'mid'")
        for name in _FLOAT_FIELDS - {"omega_e"}:
            value = getattr(self, name)
            if value is not None and (isinstance(value, bool) or not isinstance(value, (int, float))):
                raise ConfigError(f"{name} must be a number, got {value!r}")
        for name in ("omega_points", "Omega_points", "delta_points", "n_scan", "threads", "samples", "seed"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{name} must be an integer, got {value!r}")
            if name != "seed" and value < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.band is not None and (isinstance(self.band, bool) or not isinstance(self.band, int)):
            raise ConfigError(f"band must be an integer, got {self.band!r}")
        if not isinstance(self.input, str):
            raise ConfigError("input must be a string")
        if self.band is None and self.band_interval is None:
            raise ConfigError("give a band index or an explicit band interval")
        if self.band_interval is not None and (
            len(self.band_interval) != 2
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in self.band_interval)
        ):
            raise ConfigError("band_interval needs two numbers")
        parse_input_spec(self.input)

    # -- resolution -----------------------------------------------------------
    def geometry(self) -> WaveguideGeometry:
        return WaveguideGeometry(a=float(self.a), z0=float(self.z0))

    def band_range(self) -> tuple[float, float]:
        if self.band_interval is not None:
            lo, hi = (float(x) for x in self.band_interval)
            return lo, hi
        return band_edges(self.geometry(), int(self.band))

    def params(self) -> SystemParams:
        if isinstance(self.omega_e, str):
            lo, hi = self.band_range()
            omega_e = 0.5 * (lo + hi)
        else:
            omega_e = float(self.omega_e)
        trunc = TruncationPolicy(max_cutoff_multiplier=self.truncation_multiplier)
        return SystemParams(
            omega_e=omega_e,
            Omega=float(self.Omega),
            delta=float(self.delta),
            g=float(self.g),
            geom=self.geometry(),
            truncation=trunc,
            quad=QuadConfig(tol=float(self.pv_tol)),
        )

    def resolved(self) -> "RunConfig":
        """Copy with omega_e, band interval and frequency range made explicit."""
        params = self.params()
        lo, hi = self.band_range()
        return replace(
            self,
            omega_e=params.omega_e,
            band_interval=[lo, hi],
            omega_min=lo if self.omega_min is None else float(self.omega_min),
            omega_max=hi if self.omega_max is None else float(self.omega_max),
        )


_FLOAT_FIELDS = frozenset(
    ("a", "z0", "omega_e", "Omega", "delta", "g", "omega_min", "omega_max", "Omega_min", "Omega_max",
     "delta_min", "delta_max", "truncation_multiplier", "pv_tol")
)


def parse_input_spec(spec: str):
    """Return ``(kind, payload)`` for scss | sms:<n> | dark | equal | custom:<c1,c2,...>."""
    if spec in ("scss", "dark", "equal"):
        return spec, None
    if spec.startswith("sms:"):
        try:
            n = int(spec[4:])
        except ValueError as exc:
            raise ConfigError(f"bad single-mode input {spec!r}") from exc
        return "sms", n
    if spec.startswith("custom:"):
        try:
            vec = [complex(x.strip().replace(" ", "")) for x in spec[7:].split(",") if x.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad custom vector {spec!r}") from exc
        if not vec:
            raise ConfigError("custom input vector is empty")
        norm = math.sqrt(sum(abs(c) ** 2 for c in vec))
        if norm == 0:
            raise ConfigError("custom input vector is zero")
        return "custom", [c / norm for c in vec]
    raise ConfigError(f"unknown input {spec!r}; use scss, sms:<n>, dark, equal or custom:<...>")


def input_builder(spec: str):
    kind, payload = parse_input_spec(spec)
    if kind == "scss":
        return build_scss
    if kind == "dark":
        return build_dark_state
    if kind == "equal":
        return build_equal_superposition
    if kind == "sms":
        return lambda w, p: build_single_mode(w, payload, p)
    return lambda w, p: build_custom(w, payload, p)


@dataclass(frozen=True)
class Preset:
    command: str
    base: dict[str, Any]
    variants: tuple[tuple[str, dict[str, Any]], ...] = field(default=(("", {}),))


def _inputs(*specs):
    return tuple((s.replace(":", ""), {"input": s}) for s in specs)


PRESETS: dict[str, Preset] = {
    "fig2a": Preset(
        "phase-map",
        dict(band=1, g=0.1, omega_e="mid", Omega_min=0.0, Omega_max=2.0, Omega_points=50,
             delta_min=-2.0, delta_max=2.0, delta_points=50),
    ),
    "fig2c": Preset(
        "spectrum",
        dict(band=1, Omega=1.0, omega_e="mid", input="scss"),
        (("delta2_g0.1", dict(delta=2.0, g=0.1)),
         ("delta0_g0.1", dict(delta=0.0, g=0.1)),
         ("delta0_g0.2", dict(delta=0.0, g=0.2))),
    ),
    "fig2d": Preset(
        "spectrum",
        dict(band=1, g=0.1, delta=0.5, omega_e="mid", input="scss"),
        tuple((f"Omega{w:g}", dict(Omega=w)) for w in (0.0, 1.0, 1.5, 2.0)),
    ),
    "fig3a": Preset(
        "spectrum",
        dict(band=2, Omega=0.5, delta=0.0, g=0.1, omega_e="mid"),
        _inputs("scss", "sms:1", "sms:2", "equal", "dark"),
    ),
    "fig3b": Preset(
        "spectrum",
        dict(band=3, Omega=0.5, delta=0.0, g=0.05, omega_e="mid"),
        _inputs("scss", "sms:1", "sms:2", "sms:3", "equal", "dark"),
    ),
    "fig4": Preset(
        "spectrum",
        dict(band=2, Omega=0.5, delta=0.0, g=0.1, omega_e="mid"),
        _inputs("scss", "sms:1", "sms:2"),
    ),
}


def expand(cfg: RunConfig, overrides: dict[str, Any]) -> list[RunConfig]:
    """Apply the preset (if any) under ``overrides`` and return one config per variant."""
    if cfg.preset is None:
        return [cfg]
    preset = PRESETS[cfg.preset]
    if preset.command != cfg.command:
        raise ConfigError(f"preset {cfg.preset!r} belongs to the {preset.command!r} command")
    jobs = []
    for label, variant in preset.variants:
        merged = {**preset.base, **variant, **overrides}
        merged["command"] = cfg.command
        merged["preset"] = cfg.preset
        merged["label"] = label or None
        base = {k: v for k, v in cfg.to_dict().items() if k not in merged}
        jobs.append(RunConfig.from_dict({**base, **merged}))
    return jobs


def load_config_file(path: str) -> dict[str, Any]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}
