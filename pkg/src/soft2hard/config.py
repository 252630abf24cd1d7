"""Experiment configuration: JSON schema, presets and command-line overrides."""

import hashlib
import json
import math
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field, ValidationError, field_validator

from . import __version__
from .exceptions import ConfigError
from .models import ExperimentConfig, PhasePoint

_COS30 = math.cos(math.radians(30.0))
_SIN30 = math.sin(math.radians(30.0))

# x = 0, x̄ = (1, 0, 0), v̄ = 0 for every preset.
PRESETS: Dict[str, List[float]] = {
    "head_on": [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    "oblique": [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, _COS30, _SIN30, 0.0, 0.0, 0.0, 0.0],
    "grazing": [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
}


class PotentialSection(BaseModel):
    """Reference potential of the standard family."""
    family: str = "standard"
    s: float = 1.0
    beta: float = 3.0


class GridSection(BaseModel):
    """Hardening grid ε = 2^{-k} for k_min ≤ k ≤ k_max."""
    k_min: int = Field(default=6, ge=1)
    k_max: int = Field(default=20, ge=1)
    eps: Optional[float] = Field(default=None, gt=0.0, lt=1.0)


class ToleranceSection(BaseModel):
    rel_tol: float = Field(default=1e-10, gt=0.0, le=1e-4)
    abs_tol: float = Field(default=1e-12, gt=0.0, le=1e-4)
    quad_tol: float = Field(default=1e-10, gt=0.0, le=1e-4)


class ExperimentFile(BaseModel):
    """Schema of a JSON experiment file."""
    potential: PotentialSection = PotentialSection()
    preset: Optional[str] = "head_on"
    datum: Optional[List[float]] = None
    grid: GridSection = GridSection()
    interval: List[float] = [-1.0, 1.0]
    tolerances: ToleranceSection = ToleranceSection()
    threads: int = Field(default=1, ge=1)
    grid_size: int = Field(default=2000, ge=100)
    samples: int = Field(default=1001, ge=2)
    output_dir: Optional[str] = None

    @field_validator("preset")
    @classmethod
    def _known_preset(cls, value):
        if value is not None and value not in PRESETS:
            raise ValueError(f"unknown preset {value!r}, expected one of {sorted(PRESETS)}")
        return value

    @field_validator("datum")
    @classmethod
    def _twelve_floats(cls, value):
        if value is not None and len(value) != 12:
            raise ValueError(f"datum needs 12 numbers [x, xbar, v, vbar], got {len(value)}")
        return value

    @field_validator("interval")
    @classmethod
    def _ordered(cls, value):
        if len(value) != 2 or not value[0] < value[1]:
            raise ValueError(f"interval must be [T0, T1] with T0 < T1, got {value}")
        return value

    def to_config(self) -> ExperimentConfig:
        return ExperimentConfig(
            family=self.potential.family,
            s=self.potential.s,
            beta=self.potential.beta,
            preset=self.preset,
            datum=self.datum,
            k_min=self.grid.k_min,
            k_max=self.grid.k_max,
            eps=self.grid.eps,
            t0=self.interval[0],
            t1=self.interval[1],
            rel_tol=self.tolerances.rel_tol,
            abs_tol=self.tolerances.abs_tol,
            quad_tol=self.tolerances.quad_tol,
            output_dir=Path(self.output_dir) if self.output_dir else None,
            threads=self.threads,
            grid_size=self.grid_size,
            samples=self.samples,
        )


def load_config(path: Path) -> ExperimentConfig:
    """
    Read and validate a JSON experiment file.

    Raises:
        ConfigError: If the file is missing, not JSON, or fails the schema
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
        return ExperimentFile.model_validate(raw).to_config()
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Config file {path} is not valid JSON: {exc}") from exc
    except ValidationError as exc:
        raise ConfigError(f"Invalid config {path}: {exc}") from exc


# Flag name on the argparse namespace → ExperimentConfig field.
_OVERRIDES = {
    "eps": "eps",
    "beta": "beta",
    "s": "s",
    "preset": "preset",
    "out": "output_dir",
    "tol_rel": "rel_tol",
    "tol_abs": "abs_tol",
    "quad_tol": "quad_tol",
    "threads": "threads",
    "k_min": "k_min",
    "k_max": "k_max",
    "t0": "t0",
    "t1": "t1",
}


def apply_overrides(config: ExperimentConfig, overrides: Dict[str, Any]) -> ExperimentConfig:
    """Apply command-line values that were given (not None) on top of ``config``."""
    for flag, attr in _OVERRIDES.items():
        value = overrides.get(flag)
        if value is None:
            continue
        if attr == "output_dir":
            value = Path(value)
        setattr(config, attr, value)
        if attr == "preset":
            config.datum = None
    validate_config(config)
    return config


def validate_config(config: ExperimentConfig) -> None:
    """Cross-field checks that argparse and the schema cannot express alone."""
    if config.k_min > config.k_max:
        raise ConfigError(f"k_min ({config.k_min}) must not exceed k_max ({config.k_max})")
    if config.eps is not None and not 0 < config.eps < 1:
        raise ConfigError(f"eps must lie in (0, 1), got {config.eps}")
    if not config.t0 < config.t1:
        raise ConfigError(f"t0 must be below t1, got ({config.t0}, {config.t1})")
    if config.threads < 1:
        raise ConfigError(f"threads must be positive, got {config.threads}")
    for name in ("rel_tol", "abs_tol", "quad_tol"):
        tol = getattr(config, name)
        if not 0 < tol <= 1e-4:
            raise ConfigError(f"{name} must lie in (0, 1e-4], got {tol}")
    if config.datum is None and config.preset not in PRESETS:
        raise ConfigError(f"Unknown preset {config.preset!r}, expected one of {sorted(PRESETS)}")


def resolve_datum(config: ExperimentConfig) -> PhasePoint:
    """Initial datum of the experiment: the explicit 12-vector or the named preset."""
    values = config.datum if config.datum is not None else PRESETS.get(config.preset or "")
    if values is None:
        raise ConfigError(f"Unknown preset {config.preset!r}, expected one of {sorted(PRESETS)}")
    try:
        return PhasePoint.from_array(np.asarray(values, dtype=float))
    except ValueError as exc:
        raise ConfigError(f"Invalid datum: {exc}") from exc


def config_hash(config: ExperimentConfig) -> str:
    """SHA-256 of the canonical JSON form of the resolved config."""
    payload = dict(config.to_dict(), version=__version__)
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
