"""Run configurations for the command-line surface."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Annotated, Any, Dict, Optional, Type, TypeVar

import yaml
from pydantic import BaseModel, BeforeValidator, Field, ValidationError, field_validator, model_validator

from glpp.bridges import MAX_TIMED_CAP, MAX_TIMED_L
from glpp.core import ConfigError
from glpp.exact import DEFAULT_T_CAP, MAX_EXACT_L
from glpp.utils import resolve_seed

from .family import FamilySpec, coerce_family

Family = Annotated[FamilySpec, BeforeValidator(coerce_family)]
Seed = Annotated[int, BeforeValidator(resolve_seed)]

ConfigT = TypeVar("ConfigT", bound=BaseModel)


class UserFriendlyError(ConfigError):
    """Configuration problem reported without a traceback."""

    pass


class RunConfig(BaseModel):
    """Fields every command carries into its provenance record."""

    seed: Seed = Field(default=None, validate_default=True)
    jobs: int = Field(default=1, ge=1)

    def provenance(self) -> Dict[str, Any]:
        return json.loads(self.model_dump_json(exclude_none=True))


class SimulationConfig(RunConfig):
    """Discrete or continuous front-line simulation."""

    L: int = Field(ge=1)
    family: Family
    steps: int = 1_000_000
    burn_in: Optional[int] = None
    replicas: int = Field(default=1, ge=1)
    continuous: bool = False
    horizon: Optional[float] = Field(default=None, gt=0)
    sample_every: float = Field(default=1.0, gt=0)
    max_events: Optional[int] = Field(default=None, ge=1)
    force: bool = False
    record: bool = False

    @model_validator(mode="after")
    def _check_clock(self) -> "SimulationConfig":
        if self.continuous:
            if not self.family.is_continuous:
                raise ValueError(f"--continuous needs a density family, got {self.family.shorthand}")
            if self.horizon is None:
                raise ValueError("--continuous needs --horizon")
            return self
        if self.family.is_continuous:
            raise ValueError(f"{self.family.shorthand} is a density family; pass --continuous")
        if self.burn_in is None:
            self.burn_in = self.steps // 10
        if self.steps < 1 or not 0 <= self.burn_in < self.steps:
            raise ValueError(f"need steps > burn_in >= 0, got steps={self.steps}, burn_in={self.burn_in}")
        return self


class ExactConfig(RunConfig):
    """Exact stationary law and speeds for an integrable family."""

    L: int = Field(ge=1)
    mu0: Family
    T_cap: int = Field(default=DEFAULT_T_CAP, ge=3)
    tol: Optional[float] = Field(default=None, gt=0)
    speed: bool = False
    continuous: bool = False
    n_samples: int = Field(default=200_000, ge=100)
    oracle: bool = False

    @field_validator("mu0")
    @classmethod
    def _single_law(cls, v: FamilySpec) -> FamilySpec:
        if v.kind in ("constant", "edge_lpp"):
            raise ValueError(f"exact laws need an integrable family, got {v.shorthand}")
        return v

    @model_validator(mode="after")
    def _check_ranges(self) -> "ExactConfig":
        if self.continuous:
            if not self.mu0.is_continuous:
                raise ValueError("--continuous needs a density such as exp:1")
            if self.L > 3:
                raise ValueError(f"continuous integration supports L <= 3, got {self.L}")
        else:
            if self.mu0.is_continuous:
                raise ValueError(f"{self.mu0.shorthand} is a density; pass --continuous")
            if self.L > MAX_EXACT_L:
                raise ValueError(f"exact summation supports L <= {MAX_EXACT_L}, got {self.L}")
        if self.oracle and (self.L > MAX_TIMED_L or self.T_cap > MAX_TIMED_CAP):
            raise ValueError(f"the oracle supports L <= {MAX_TIMED_L} and T_cap <= {MAX_TIMED_CAP}")
        return self


class PcaCheckConfig(RunConfig):
    """Grid sizes for the local identity checks."""

    mu0: Family
    st_max: int = Field(default=10, ge=0)
    u_max: int = Field(default=30, ge=1)
    exchange_st_max: int = Field(default=6, ge=0)
    exchange_u_max: int = Field(default=20, ge=1)
    alpha: float = Field(default=1.0, gt=0)
    perturb: Optional[float] = None

    @model_validator(mode="after")
    def _check_grid(self) -> "PcaCheckConfig":
        if self.u_max <= self.st_max:
            raise ValueError(f"need u_max > st_max, got {self.u_max} <= {self.st_max}")
        if self.mu0.is_continuous:
            raise ValueError("the identity checks run on discrete laws")
        return self


class QuarterPlaneConfig(RunConfig):
    """Quarter-plane growth and its shape profile."""

    N: int = Field(ge=2)
    family: Family
    until: Optional[float] = None
    replicas: int = Field(default=1, ge=1)
    n: Optional[float] = None
    svg: Optional[Path] = None

    @model_validator(mode="after")
    def _check_times(self) -> "QuarterPlaneConfig":
        if self.family.is_continuous:
            raise ValueError("quarter-plane growth runs on discrete families")
        if self.until is None:
            self.until = float(self.N)
        if self.until < 0:
            raise ValueError("until must be non-negative")
        if self.n is None:
            self.n = self.until
        if not 0 < self.n <= self.until:
            raise ValueError(f"profile time must lie in (0, until], got {self.n}")
        return self


def _format_validation(model: Type[BaseModel], err: ValidationError) -> str:
    lines = [f"Invalid {model.__name__}:"]
    for item in err.errors():
        where = ".".join(str(p) for p in item["loc"]) or "config"
        lines.append(f"   • {where}: {item['msg']}")
    return "\n".join(lines)


def load_config_file(path: Path) -> Dict[str, Any]:
    """Read a YAML or JSON run file into a mapping."""
    path = Path(path)
    if not path.exists():
        raise UserFriendlyError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    if not isinstance(data, dict):
        raise UserFriendlyError(f"config file {path} must hold a mapping")
    return data


def build_config(model: Type[ConfigT], config_path: Optional[Path] = None, **overrides: Any) -> ConfigT:
    """Validate ``model`` from a run file merged with command-line values.

    Command-line values that are None leave the file value in place.

    Raises:
        UserFriendlyError: when validation fails.
    """
    data: Dict[str, Any] = load_config_file(config_path) if config_path else {}
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return model.model_validate(data)
    except ValidationError as err:
        raise UserFriendlyError(_format_validation(model, err)) from None
