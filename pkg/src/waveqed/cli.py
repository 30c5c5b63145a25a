"""``waveqed`` command-line front end.

Configuration layers, lowest first: built-in defaults, preset, ``--config``
file, explicit flags.  Exit codes: 0 success, 1 failed validation, 2 bad
configuration or geometry, 3 physics-domain error at run time.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from . import __version__
from .analysis import dressed_states, find_crp, frequency_grid, phase_map, spectrum
from .config import COMMANDS, FORMATS, PRESETS, ConfigError, RunConfig, expand, input_builder, load_config_file, parse_input_spec
from .errors import DomainError, WaveQEDError
from .output import (
    PHASE_MAP_COLUMNS,
    dumps,
    phase_map_json,
    phase_map_rows,
    table_csv,
    table_json,
)
from .scattering import channel_modes
from .validate import run_checks, summary
from .waveguide import enumerate_coupled_modes

log = logging.getLogger("waveqed")

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_DOMAIN = 0, 1, 2, 3
MODES_DEFAULT_MAX = 11.0

# flag name -> (RunConfig field, type)
_FLAGS: dict[str, tuple[str, Any]] = {
    "--a": ("a", float),
    "--z0": ("z0", float),
    "--g": ("g", float),
    "--omega-e": ("omega_e", str),
    "--rabi": ("Omega", float),
    "--detuning": ("delta", float),
    "--band": ("band", int),
    "--input": ("input", str),
    "--omega-min": ("omega_min", float),
    "--omega-max": ("omega_max", float),
    "--omega-points": ("omega_points", int),
    "--rabi-min": ("Omega_min", float),
    "--rabi-max": ("Omega_max", float),
    "--rabi-points": ("Omega_points", int),
    "--detuning-min": ("delta_min", float),
    "--detuning-max": ("delta_max", float),
    "--detuning-points": ("delta_points", int),
    "--truncation-multiplier": ("truncation_multiplier", float),
    "--pv-tol": ("pv_tol", float),
    "--n-scan": ("n_scan", int),
    "--out": ("out", str),
    "--threads": ("threads", int),
    "--seed": ("seed", int),
    "--samples": ("samples", int),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="waveqed", description="Single-photon scattering in a multi-mode rectangular waveguide.")
    parser.add_argument("--version", action="version", version=f"waveqed {__version__}")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON file with RunConfig fields")
    parser.add_argument("--preset", choices=sorted(PRESETS), default=argparse.SUPPRESS)
    parser.add_argument("--format", choices=FORMATS, default=argparse.SUPPRESS)
    parser.add_argument("--band-interval", nargs=2, type=float, metavar=("LO", "HI"), default=argparse.SUPPRESS)
    for flag, (_, kind) in _FLAGS.items():
        parser.add_argument(flag, type=kind, default=argparse.SUPPRESS)
    parser.add_argument("--inject-fault", action="append", default=[], help=argparse.SUPPRESS)
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _cli_overrides(ns: argparse.Namespace) -> dict[str, Any]:
    given = vars(ns)
    out: dict[str, Any] = {}
    for flag, (name, _) in _FLAGS.items():
        dest = flag[2:].replace("-", "_")
        if dest in given:
            out[name] = given[dest]
    for name in ("preset", "format", "band_interval"):
        if name in given:
            out[name] = given[name]
    if "omega_e" in out and out["omega_e"] not in ("mid", "band-midpoint"):
        try:
            out["omega_e"] = float(out["omega_e"])
        except ValueError as exc:
            raise ConfigError(f"--omega-e takes a number or 'mid', got {out['omega_e']!r}") from exc
    if "band_interval" in out:
        out["band_interval"] = list(out["band_interval"])
        out.setdefault("band", None)
    return out


def resolve_jobs(command: str, file_data: dict[str, Any], cli: dict[str, Any]) -> list[RunConfig]:
    """Merge the layers into one or more concrete configs (several for multi-variant presets)."""
    overrides = {**file_data, **cli}
    overrides.pop("command", None)
    preset = overrides.pop("preset", None)
    base = RunConfig(command=command, preset=preset)
    base.check()
    if preset is None:
        return [RunConfig.from_dict({**base.to_dict(), **overrides})]
    return expand(base, overrides)


def _check_physics_ranges(cfg: RunConfig) -> None:
    if not cfg.Omega >= 0:
        raise ConfigError("Rabi frequency must be >= 0")
    if not cfg.g > 0:
        raise ConfigError("g must be positive")
    if not cfg.pv_tol > 0:
        raise ConfigError("pv_tol must be positive")
    if cfg.truncation_multiplier is not None and cfg.truncation_multiplier < 1:
        raise ConfigError("truncation multiplier must be >= 1")
    try:
        cfg.geometry()
    except DomainError as exc:
        raise ConfigError(f"invalid geometry: {exc}") from exc


def _metadata(cfg: RunConfig, **extra) -> dict[str, Any]:
    trunc = cfg.params().truncation.description if cfg.command != "modes" else None
    return {"config": cfg.to_dict(), "truncation": trunc, "version": __version__, **extra}


def _emit(text: str, cfg: RunConfig, path: Optional[Path]) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    log.info("wrote %s", path)


def _write_table(cfg, metadata, columns, rows, path):
    text = table_csv(metadata, columns, rows) if cfg.format == "csv" else table_json(metadata, columns, rows)
    _emit(text, cfg, path)


# -- commands -----------------------------------------------------------------


def cmd_modes(cfg: RunConfig, path: Optional[Path]) -> int:
    omega_max = MODES_DEFAULT_MAX if cfg.omega_max is None else float(cfg.omega_max)
    modes = enumerate_coupled_modes(cfg.geometry(), omega_max)
    if not modes:
        log.warning("no coupled mode has its cutoff below omega_max=%g", omega_max)
    rows = [(m.index, m.m, m.n, m.cutoff) for m in modes]
    cfg = RunConfig.from_dict({**cfg.to_dict(), "omega_max": omega_max})
    _write_table(cfg, _metadata(cfg), ("j", "m", "n", "cutoff"), rows, path)
    return EXIT_OK


def _peak_summary(cfg: RunConfig, params) -> dict[str, Any]:
    try:
        rep = find_crp(cfg.band_range(), "auto", params, n_scan=cfg.n_scan)
    except WaveQEDError as exc:
        return {"error": str(exc)}
    return {
        "ctp": list(rep.ctp),
        "crp": list(rep.crp),
        "regime": rep.regime_label,
        "predicted_crp_count": rep.predicted_crp_count,
    }


def cmd_spectrum(cfg: RunConfig, path: Optional[Path]) -> int:
    cfg = cfg.resolved()
    params = cfg.params()
    grid = frequency_grid(cfg.omega_min, cfg.omega_max, int(cfg.omega_points), params)
    kind, payload = parse_input_spec(cfg.input)
    if kind in ("sms", "custom"):
        needed = payload if kind == "sms" else len(payload)
        widest = 0
        for w in grid:
            try:
                widest = max(widest, len(channel_modes(float(w), params)))
            except WaveQEDError:
                pass
        if (kind == "sms" and not 1 <= needed <= widest) or (kind == "custom" and needed > widest):
            raise DomainError(f"input {cfg.input!r} needs channel {needed}, at most {widest} propagate on this grid")
    spec = spectrum(grid, input_builder(cfg.input), params, threads=int(cfg.threads))
    if spec.failures and len(spec.failures) == len(grid):
        raise DomainError(f"no grid point could be evaluated: {spec.failures[0][1]}")
    for w, err in spec.failures:
        log.warning("omega=%r failed: %s", w, err)
    meta = _metadata(
        cfg,
        peaks=_peak_summary(cfg, params),
        eit_pole=params.eit_frequency if params.Omega != 0 else None,
        failures=[[w, e] for w, e in spec.failures],
    )
    _write_table(cfg, meta, spec.columns, spec.rows, path)
    return EXIT_OK


def cmd_phase_map(cfg: RunConfig, path: Optional[Path]) -> int:
    cfg = cfg.resolved()
    params = cfg.params()
    Om = np.linspace(cfg.Omega_min, cfg.Omega_max, int(cfg.Omega_points))
    de = np.linspace(cfg.delta_min, cfg.delta_max, int(cfg.delta_points))
    pm = phase_map(Om, de, params, cfg.band_range(), n_scan=int(cfg.n_scan), threads=int(cfg.threads))
    for i, j, err in pm.failures:
        log.warning("cell (Omega=%r, delta=%r) failed: %s", Om[i], de[j], err)
    meta = _metadata(cfg, band=list(pm.band), failures=[list(f) for f in pm.failures])
    if cfg.format == "json":
        _emit(phase_map_json(meta, pm), cfg, path)
    else:
        _emit(table_csv(meta, PHASE_MAP_COLUMNS, phase_map_rows(pm)), cfg, path)
    return EXIT_OK


def cmd_dressed(cfg: RunConfig, path: Optional[Path]) -> int:
    cfg = cfg.resolved()
    params = cfg.params()
    ds = dressed_states(params)
    columns = ("nu_plus", "nu_minus", "theta", "nu_tilde_plus", "nu_tilde_minus", "lamb_shift_at_emitter")
    row = (ds.nu_plus, ds.nu_minus, ds.theta, ds.nu_tilde_plus, ds.nu_tilde_minus, ds.lamb_shift_at_emitter)
    meta = _metadata(cfg, peaks=_peak_summary(cfg, params))
    _write_table(cfg, meta, columns, [row], path)
    return EXIT_OK


def cmd_validate(cfg: RunConfig, path: Optional[Path], faults: Sequence[str] = ()) -> int:
    results = run_checks(seed=int(cfg.seed), samples=int(cfg.samples), pv_tol=float(cfg.pv_tol), a=float(cfg.a), faults=faults)
    for r in results:
        print(r.line())
    report = summary(results)
    report["config"] = cfg.to_dict()
    report["version"] = __version__
    text = dumps(report, indent=1) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        _emit(text, cfg, path)
    print("ALL CHECKS PASSED" if report["passed"] else "VALIDATION FAILED", file=sys.stderr)
    return EXIT_OK if report["passed"] else EXIT_VALIDATION


def _output_path(cfg: RunConfig, multi: bool) -> Optional[Path]:
    if not multi:
        return Path(cfg.out) if cfg.out else None
    directory = Path(cfg.out or ".")
    name = cfg.preset if not cfg.label else f"{cfg.preset}_{cfg.label}"
    return directory / f"{name}.{cfg.format}"


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("waveqed: %(levelname)s: %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO if ns.verbose else logging.WARNING)
    log.propagate = False
    try:
        return _run(ns)
    finally:
        log.removeHandler(handler)


def _run(ns: argparse.Namespace) -> int:
    try:
        file_data = load_config_file(ns.config) if ns.config else {}
        jobs = resolve_jobs(ns.command, file_data, _cli_overrides(ns))
        for job in jobs:
            _check_physics_ranges(job)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG

    multi = len(jobs) > 1
    code = EXIT_OK
    for job in jobs:
        path = _output_path(job, multi)
        try:
            if job.command == "modes":
                status = cmd_modes(job, path)
            elif job.command == "spectrum":
                status = cmd_spectrum(job, path)
            elif job.command == "phase-map":
                status = cmd_phase_map(job, path)
            elif job.command == "dressed":
                status = cmd_dressed(job, path)
            else:
                status = cmd_validate(job, path, faults=ns.inject_fault)
        except ConfigError as exc:
            log.error("%s", exc)
            return EXIT_CONFIG
        except (WaveQEDError, ArithmeticError) as exc:
            log.error("%s", exc)
            return EXIT_DOMAIN
        if multi and path is not None:
            print(path)
        code = max(code, status)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
