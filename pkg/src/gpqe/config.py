"""Declarative run configuration (TOML)."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .ansatz import LEVELS, PAIRINGS
from .hamio import fixture_path

METHODS = ("PQE-SD", "PQE-SDT", "GPQE", "VQE", "VQE-noisy")
CSO_PRESETS = ("homo-lumo", "homo-homo1")


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"config key '{key}': {message}")
        self.key = key
        self.detail = message


@dataclass(frozen=True)
class NoiseConfig:
    p1: float = 0.0
    p2: float = 0.0
    trajectories: int = 1
    sweeps: int = 15
    final_trajectories: int = 2000


@dataclass(frozen=True)
class GaussianConfig:
    sd: float
    n_samples: int


@dataclass(frozen=True)
class RunConfig:
    fcidump_path: Path
    method: str
    label: str
    cso: tuple[int, ...] | str = ()
    ansatz: str = "GENERALIZED"
    t2_first_order: float = 1e-5
    t1_second_order: float = 1e-6
    pairing: str = "quasi"
    tolerance: float = 1e-6
    max_sweeps: int = 200
    diis: bool = True
    diis_depth: int = 6
    scatterer_denominator: str = "bare"
    vqe_maxiter: int = 500
    vqe_gtol: float = 1e-7
    noise: NoiseConfig | None = None
    gaussian: GaussianConfig | None = None
    seed: int = 0
    output_dir: Path | None = None

    @property
    def level(self) -> str:
        return {"PQE-SD": "SD", "PQE-SDT": "SDT", "GPQE": "GENERALIZED"}.get(self.method, self.ansatz)

    def with_seed(self, seed: int | None) -> RunConfig:
        return self if seed is None else replace(self, seed=seed)


_TOP = {"fcidump", "method", "label", "ansatz", "seed", "pool", "solver", "vqe", "noise", "gaussian_study", "output"}
_SECTIONS = {
    "pool": {"cso", "t2_first_order", "t1_second_order", "pairing"},
    "solver": {"tolerance", "max_sweeps", "diis", "diis_depth", "scatterer_denominator"},
    "vqe": {"maxiter", "gtol"},
    "noise": {"p1", "p2", "trajectories", "sweeps", "final_trajectories"},
    "gaussian_study": {"sd", "n_samples"},
    "output": {"dir"},
}


def _typed(table: dict, key: str, prefix: str, kind, default=None, required=False):
    full = f"{prefix}{key}"
    if key not in table:
        if required:
            raise ConfigError(full, "is required")
        return default
    value = table[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
        raise ConfigError(full, f"expected {kind.__name__}, got {type(value).__name__}")
    return value


def _check_keys(table: dict, allowed: set[str], prefix: str) -> None:
    for key in table:
        if key not in allowed:
            raise ConfigError(f"{prefix}{key}", "unknown key")


def resolve_fcidump(value: str, base: Path) -> Path:
    path = Path(value)
    if not path.is_absolute():
        path = base / path
    if path.is_file():
        return path
    try:
        return fixture_path(value)
    except FileNotFoundError:
        raise ConfigError("fcidump", f"no such file or bundled fixture: {value!r}") from None


def parse_run_config(data: dict[str, Any], base: Path = Path(".")) -> RunConfig:
    _check_keys(data, _TOP, "")
    for name, allowed in _SECTIONS.items():
        if name in data:
            if not isinstance(data[name], dict):
                raise ConfigError(name, "expected a table")
            _check_keys(data[name], allowed, f"{name}.")

    method = _typed(data, "method", "", str, required=True)
    if method not in METHODS:
        raise ConfigError("method", f"must be one of {', '.join(METHODS)}; got {method!r}")
    fcidump = resolve_fcidump(_typed(data, "fcidump", "", str, required=True), base)
    label = _typed(data, "label", "", str, fcidump.stem)
    ansatz = _typed(data, "ansatz", "", str, "GENERALIZED")
    if ansatz not in LEVELS:
        raise ConfigError("ansatz", f"must be one of {', '.join(LEVELS)}; got {ansatz!r}")
    seed = _typed(data, "seed", "", int, 0)
    if seed < 0:
        raise ConfigError("seed", "must be non-negative")

    pool = data.get("pool", {})
    cso_raw = pool.get("cso", ())
    if isinstance(cso_raw, str):
        if cso_raw not in CSO_PRESETS:
            raise ConfigError("pool.cso", f"preset must be one of {', '.join(CSO_PRESETS)}")
        cso: tuple[int, ...] | str = cso_raw
    elif isinstance(cso_raw, (list, tuple)) and all(isinstance(v, int) and not isinstance(v, bool) for v in cso_raw):
        cso = tuple(cso_raw)
    else:
        raise ConfigError("pool.cso", "expected a list of spinorbital indices or a preset name")
    pairing = _typed(pool, "pairing", "pool.", str, "quasi")
    if pairing not in PAIRINGS:
        raise ConfigError("pool.pairing", f"must be one of {', '.join(PAIRINGS)}")

    solver = data.get("solver", {})
    denominator = _typed(solver, "scatterer_denominator", "solver.", str, "bare")
    if denominator not in ("bare", "contracted"):
        raise ConfigError("solver.scatterer_denominator", "must be 'bare' or 'contracted'")

    vqe = data.get("vqe", {})
    noise = None
    if "noise" in data:
        n = data["noise"]
        noise = NoiseConfig(
            _typed(n, "p1", "noise.", float, 0.0),
            _typed(n, "p2", "noise.", float, 0.0),
            _typed(n, "trajectories", "noise.", int, 1),
            _typed(n, "sweeps", "noise.", int, 15),
            _typed(n, "final_trajectories", "noise.", int, 2000),
        )
        for key in ("p1", "p2"):
            if not 0.0 <= getattr(noise, key) <= 1.0:
                raise ConfigError(f"noise.{key}", "must lie in [0, 1]")
        for key in ("trajectories", "sweeps", "final_trajectories"):
            if getattr(noise, key) < 1:
                raise ConfigError(f"noise.{key}", "must be positive")
    gaussian = None
    if "gaussian_study" in data:
        g = data["gaussian_study"]
        gaussian = GaussianConfig(
            _typed(g, "sd", "gaussian_study.", float, required=True),
            _typed(g, "n_samples", "gaussian_study.", int, required=True),
        )
        if gaussian.sd <= 0:
            raise ConfigError("gaussian_study.sd", "must be positive")
        if gaussian.n_samples < 2:
            raise ConfigError("gaussian_study.n_samples", "must be at least 2")

    out = data.get("output", {})
    out_dir = _typed(out, "dir", "output.", str, None)

    cfg = RunConfig(
        fcidump_path=fcidump,
        method=method,
        label=label,
        cso=cso,
        ansatz=ansatz,
        t2_first_order=_typed(pool, "t2_first_order", "pool.", float, 1e-5),
        t1_second_order=_typed(pool, "t1_second_order", "pool.", float, 1e-6),
        pairing=pairing,
        tolerance=_typed(solver, "tolerance", "solver.", float, 1e-6),
        max_sweeps=_typed(solver, "max_sweeps", "solver.", int, 200),
        diis=_typed(solver, "diis", "solver.", bool, True),
        diis_depth=_typed(solver, "diis_depth", "solver.", int, 6),
        scatterer_denominator=denominator,
        vqe_maxiter=_typed(vqe, "maxiter", "vqe.", int, 500),
        vqe_gtol=_typed(vqe, "gtol", "vqe.", float, 1e-7),
        noise=noise,
        gaussian=gaussian,
        seed=seed,
        output_dir=None if out_dir is None else base / out_dir,
    )
    if cfg.level == "GENERALIZED" and not cfg.cso:
        raise ConfigError("pool.cso", f"{method} with a generalized ansatz needs a nonempty CSO")
    if method == "VQE-noisy" and noise is None:
        raise ConfigError("noise", "VQE-noisy needs a [noise] table")
    return cfg


def _load_toml(path: Path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError("--config", f"file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("--config", f"not valid TOML: {exc}") from None


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    return parse_run_config(_load_toml(path), path.parent)


@dataclass
class ScanConfig:
    """Shared settings plus one override table per geometry."""

    points: list[RunConfig] = field(default_factory=list)
    errors: list[tuple[int, ConfigError]] = field(default_factory=list)
    output_dir: Path | None = None


def parse_scan_config(data: dict[str, Any], base: Path = Path(".")) -> ScanConfig:
    """Top-level keys are defaults; ``[[point]]`` tables override them per geometry.

    A point whose merged table is invalid is recorded in ``errors`` rather
    than aborting the scan.
    """
    points = data.get("point", [])
    if not isinstance(points, list) or not all(isinstance(p, dict) for p in points):
        raise ConfigError("point", "expected an array of tables ([[point]])")
    defaults = {k: v for k, v in data.items() if k != "point"}
    out = defaults.get("output", {}).get("dir") if isinstance(defaults.get("output"), dict) else None
    scan = ScanConfig(output_dir=None if out is None else base / out)
    for k, point in enumerate(points):
        merged = {key: (dict(val) if isinstance(val, dict) else val) for key, val in defaults.items()}
        for key, val in point.items():
            if isinstance(val, dict) and isinstance(merged.get(key), dict):
                merged[key].update(val)
            else:
                merged[key] = val
        try:
            scan.points.append(parse_run_config(merged, base))
        except ConfigError as exc:
            scan.errors.append((k, ConfigError(f"point[{k}].{exc.key}", exc.detail)))
    return scan


def load_scan_config(path: str | Path) -> ScanConfig:
    path = Path(path)
    return parse_scan_config(_load_toml(path), path.parent)
