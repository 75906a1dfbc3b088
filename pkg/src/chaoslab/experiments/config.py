"""Experiment configuration: a TOML file validated by strict pydantic models.

Every section has defaults, so a file holding only ``seed`` is valid. Unknown
keys anywhere are rejected.
"""

from __future__ import annotations

import hashlib
import json
import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from chaoslab.apps.breuer_major import F_PRESETS
from chaoslab.utils.error_handling import ConfigError, ErrorType

logger = logging.getLogger(__name__)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def _positive(values: List[float], what: str) -> List[float]:
    if not values:
        raise ValueError(f"{what} must not be empty")
    if any(v <= 0 for v in values):
        raise ValueError(f"{what} must be positive")
    return values


class SelftestConfig(_Section):
    m: int = Field(6, ge=1)
    p: int = Field(4, ge=1)
    max_order: int = Field(4, ge=1, le=6)
    n_functionals: int = Field(50, ge=1)
    n_mc: int = Field(100_000, ge=2)
    mehler_times: List[float] = [0.1, 1.0]
    mehler_points: int = Field(3, ge=1)
    semigroup_times: List[float] = [0.3, 0.7]
    tolerance: float = Field(1e-12, gt=0)

    @field_validator("mehler_times", "semigroup_times")
    @classmethod
    def _times(cls, v):
        return _positive(v, "times")


class BoundsConfig(_Section):
    m: int = Field(4, ge=1)
    p: int = Field(3, ge=1)
    max_order: int = Field(3, ge=2, le=5)
    n_functionals: int = Field(50, ge=1)
    n_mc: int = Field(4000, ge=2)
    dictionary_size: int = Field(128, ge=1)
    decay: float = Field(1.0, gt=0)


class BreuerMajorConfig(_Section):
    f: Union[str, List[float]] = "hermite2"
    kernel: Literal["indicator", "triangular", "gaussian"] = "indicator"
    T_grid: List[float] = [8.0, 16.0, 32.0, 64.0]
    dt: float = 1.0 / 64.0
    n_nodes: int = Field(16, ge=1)
    n_mc: int = Field(10_000, ge=2)
    Q: int = Field(12, ge=0)
    quad_order: int = Field(64, ge=1)
    dictionary_size: int = Field(128, ge=1)
    majorant_T: float = Field(8.0, gt=0)

    @field_validator("T_grid")
    @classmethod
    def _horizons(cls, v):
        return _positive(v, "T_grid")

    @field_validator("dt")
    @classmethod
    def _resolves_support(cls, v):
        if not 0 < v <= 1.0 / 16.0:
            raise ValueError("dt must satisfy 0 < dt <= support/16")
        return v

    @field_validator("f")
    @classmethod
    def _known_f(cls, v):
        if isinstance(v, str) and v not in F_PRESETS:
            raise ValueError(f"unknown preset {v!r}; choose from {sorted(F_PRESETS)}")
        if isinstance(v, list) and not v:
            raise ValueError("polynomial coefficients must not be empty")
        return v

    @model_validator(mode="after")
    def _quadrature_resolves_truncation(self):
        if self.quad_order < self.Q + 1:
            raise ValueError("quad_order must be at least Q + 1")
        return self


class NeuralNetConfig(_Section):
    activation: Literal["tanh", "identity", "square", "hermite2", "cos", "constant"] = "tanh"
    degenerate_activation: Literal["constant"] = "constant"
    measure: Literal["uniform", "gaussian"] = "uniform"
    n_nodes: int = Field(16, ge=1)
    widths: List[int] = [4, 16, 64, 256]
    covariance_widths: List[int] = [1, 16, 256]
    n_mc: int = Field(10_000, ge=2)
    quad_order: int = Field(64, ge=2)
    dictionary_size: int = Field(128, ge=1)

    @field_validator("widths", "covariance_widths")
    @classmethod
    def _widths(cls, v):
        _positive(v, "widths")
        return v


class SpdeConfig(_Section):
    T: float = Field(1.0, gt=0)
    N_trunc: int = Field(3, ge=1, le=4)
    time_nodes: List[int] = [16, 10, 6, 4]
    const_a: float = Field(1.0, ge=0)
    const_b: float = 1.0
    k_nodes: int = Field(8, ge=1)
    bound_nodes: int = Field(16, ge=1)
    radii: List[float] = [2.0, 4.0, 8.0, 16.0]
    resolution_check: bool = True

    @field_validator("radii")
    @classmethod
    def _radii(cls, v):
        return _positive(v, "radii")

    @model_validator(mode="after")
    def _nodes_cover_orders(self):
        if len(self.time_nodes) < self.N_trunc or any(n < 1 for n in self.time_nodes):
            raise ValueError("time_nodes needs a positive size for every chaos order")
        return self


class ExperimentConfig(_Section):
    seed: int = Field(..., ge=0, lt=2 ** 64)
    threads: Optional[Union[int, Literal["auto"]]] = None
    output_dir: Optional[str] = None
    z_gate: float = Field(3.0, gt=0)
    selftest: SelftestConfig = SelftestConfig()
    bounds: BoundsConfig = BoundsConfig()
    breuer_major: BreuerMajorConfig = BreuerMajorConfig()
    neural_net: NeuralNetConfig = NeuralNetConfig()
    spde: SpdeConfig = SpdeConfig()

    @field_validator("threads")
    @classmethod
    def _threads(cls, v):
        if isinstance(v, int) and v < 1:
            raise ValueError("threads must be at least 1")
        return v

    def config_hash(self) -> str:
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def parse_config(data: dict, source: str = "<dict>", **overrides) -> ExperimentConfig:
    """Validate a raw mapping; ``overrides`` with value ``None`` are ignored."""
    merged = dict(data)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    if "seed" not in merged:
        raise ConfigError(f"{source}: missing required key 'seed'", config_key="seed",
                          error_type=ErrorType.CONFIG_MISSING)
    try:
        return ExperimentConfig.model_validate(merged)
    except ValidationError as exc:
        problems = [
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in exc.errors()
        ]
        first = ".".join(str(p) for p in exc.errors()[0]["loc"]) if exc.errors() else None
        raise ConfigError(
            f"{source}: invalid configuration ({'; '.join(problems)})",
            config_key=first,
            details={"errors": problems},
            original_exception=exc,
        ) from exc


def load_config(path: str | Path, **overrides) -> ExperimentConfig:
    """Read and validate an experiment file."""
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}", config_key="config",
                          error_type=ErrorType.CONFIG_MISSING, original_exception=exc) from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: not valid TOML ({exc})", config_key="config", original_exception=exc) from exc
    config = parse_config(data, str(path), **overrides)
    logger.debug("loaded config %s (hash %s)", path, config.config_hash()[:12])
    return config
