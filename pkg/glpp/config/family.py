"""Family specifications: the JSON document and the command-line shorthand."""

from __future__ import annotations

import json
import math
import re
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

from glpp.core import ConfigError
from glpp.measures import (
    DensityFamily,
    DiscreteMeasure,
    MeasureFamily,
    TableFamily,
    make_constant_family,
    make_edge_lpp_family,
    make_integrable_density_family,
    make_integrable_family,
)

DISCRETE_KINDS = ("geometric", "poisson", "poisson_shifted", "zeta", "table")
CONTINUOUS_KINDS = ("exponential", "halfnormal")
WRAPPER_KINDS = ("integrable", "edge_lpp", "constant")

_ALIASES = {"exp": "exponential", "geom": "geometric"}
_PARAM_NAMES = ("p", "lam", "lambda", "alpha", "rate", "sigma")
_WRAPPED = re.compile(r"^(?P<kind>[a-z_]+)\((?P<inner>.+)\)$")
_SIMPLE = re.compile(r"^(?P<kind>[a-z_]+):(?P<param>[-+0-9.eE]+)$")

FamilyKindName = Literal[
    "geometric", "poisson", "poisson_shifted", "zeta", "table",
    "exponential", "halfnormal",
    "integrable", "edge_lpp", "constant",
]


def _table_pairs(raw: Any) -> Dict[int, float]:
    """Accept [m1, m2, ...], [[i, m], ...] or {i: m}."""
    if isinstance(raw, dict):
        return {int(k): float(v) for k, v in raw.items()}
    items = list(raw)
    if items and isinstance(items[0], (list, tuple)):
        return {int(i): float(m) for i, m in items}
    return {i + 1: float(m) for i, m in enumerate(items)}


class FamilySpec(BaseModel):
    """A waiting-time law or family, as written by the user.

    Bare measures (``geometric:0.5``) stand for the integrable family built
    from them; ``constant(...)`` gives classical LPP and ``edge_lpp(...)`` the
    gap law of edge LPP.
    """

    kind: FamilyKindName
    param: Optional[float] = None
    cap: Optional[int] = Field(default=None, ge=1)
    masses: Optional[Dict[int, float]] = None
    gaps: Optional[Dict[int, Dict[int, float]]] = None
    base: Optional["FamilySpec"] = None
    source: Optional[str] = None

    @model_validator(mode="before")
    @classmethod
    def _normalize(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        data = dict(data)
        if "kind" in data:
            data["kind"] = _ALIASES.get(data["kind"], data["kind"])
        for name in _PARAM_NAMES:
            if name in data and "param" not in data:
                data["param"] = data.pop(name)
        if "masses" in data and data["masses"] is not None:
            data["masses"] = _table_pairs(data["masses"])
        if "gaps" in data and data["gaps"] is not None:
            data["gaps"] = {int(d): _table_pairs(v) for d, v in data["gaps"].items()}
        if isinstance(data.get("base"), str):
            data["base"] = parse_family(data["base"])
        return data

    @field_validator("param")
    @classmethod
    def _finite(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and not math.isfinite(v):
            raise ValueError("parameter must be finite")
        return v

    @model_validator(mode="after")
    def _check_shape(self) -> "FamilySpec":
        if self.kind in WRAPPER_KINDS:
            if self.base is None:
                raise ValueError(f"{self.kind} needs a base law")
            if self.base.kind in WRAPPER_KINDS:
                raise ValueError(f"{self.kind} cannot wrap another family ({self.base.kind})")
        elif self.kind == "table":
            if self.masses is None and self.gaps is None:
                raise ValueError("table needs 'masses' or 'gaps'")
        elif self.param is None:
            raise ValueError(f"{self.kind} needs a parameter")
        if self.kind == "edge_lpp" and self.base.is_continuous:
            raise ValueError("edge_lpp is defined for discrete laws only")
        return self

    # ------------------------------------------------------------------ views
    @property
    def is_continuous(self) -> bool:
        if self.kind in WRAPPER_KINDS:
            return self.base.is_continuous
        return self.kind in CONTINUOUS_KINDS

    @property
    def law_spec(self) -> "FamilySpec":
        """The underlying single law (μ₀, μ or f₀)."""
        return self.base if self.kind in WRAPPER_KINDS else self

    @property
    def shorthand(self) -> str:
        if self.source:
            return self.source
        if self.kind in WRAPPER_KINDS:
            return f"{self.kind}({self.base.shorthand})"
        if self.kind == "table":
            return "table"
        name = "exp" if self.kind == "exponential" else self.kind
        return f"{name}:{self.param:g}"

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump(exclude_none=True)

    # -------------------------------------------------------------- builders
    def measure(self) -> DiscreteMeasure:
        """μ₀ (or μ for edge LPP) as a discrete measure."""
        spec = self.law_spec
        if spec.is_continuous:
            raise ConfigError(f"{self.shorthand} is a density, not a discrete law")
        if spec.kind == "geometric":
            return DiscreteMeasure.geometric(spec.param, cap=spec.cap)
        if spec.kind in ("poisson", "poisson_shifted"):
            return DiscreteMeasure.poisson(spec.param, cap=spec.cap, shifted=spec.kind == "poisson_shifted")
        if spec.kind == "zeta":
            return DiscreteMeasure.zeta(spec.param) if spec.cap is None else DiscreteMeasure.zeta(spec.param, cap=spec.cap)
        if spec.masses is None:
            raise ConfigError("a per-gap table is a family, not a single law")
        return DiscreteMeasure.table(spec.masses, label=spec.source or "table")

    def density(self) -> DensityFamily:
        """The seed density f₀ as a constant density family."""
        spec = self.law_spec
        if spec.kind == "exponential":
            return DensityFamily.exponential(spec.param)
        if spec.kind == "halfnormal":
            return DensityFamily.halfnormal(spec.param)
        raise ConfigError(f"{self.shorthand} is not a continuous law")

    def family(self) -> MeasureFamily:
        """The discrete gap-indexed family."""
        if self.is_continuous:
            raise ConfigError(f"{self.shorthand} is a continuous family; use the continuous builders")
        if self.kind == "table" and self.gaps is not None:
            tables = {d: DiscreteMeasure.table(m, label=f"table@{d}") for d, m in self.gaps.items()}
            return TableFamily(tables, label=self.source or "table")
        if self.kind == "constant":
            return make_constant_family(self.measure())
        if self.kind == "edge_lpp":
            return make_edge_lpp_family(self.measure())
        return make_integrable_family(self.measure())

    def density_family(self) -> DensityFamily:
        """The continuous gap-indexed family."""
        if not self.is_continuous:
            raise ConfigError(f"{self.shorthand} is a discrete family")
        seed = self.density()
        if self.kind == "constant":
            return seed
        return make_integrable_density_family(seed)


def _read_table_file(path: Path) -> Dict[str, Any]:
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"table file not found: {path}") from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"table file {path} is not valid JSON: {err}") from None
    if isinstance(payload, dict) and ("masses" in payload or "gaps" in payload):
        return {"kind": "table", **{k: v for k, v in payload.items() if k != "kind"}}
    return {"kind": "table", "masses": payload}


def parse_family(text: str) -> FamilySpec:
    """Parse a JSON document, a shorthand or a preset name into a FamilySpec.

    Raises:
        ConfigError: when the text matches none of the accepted forms.
    """
    raw = text.strip()
    try:
        if raw.startswith("{"):
            return FamilySpec.model_validate_json(raw)
        if raw.startswith("table@"):
            return FamilySpec.model_validate({**_read_table_file(Path(raw[len("table@"):])), "source": raw})
        wrapped = _WRAPPED.match(raw)
        if wrapped:
            kind = wrapped["kind"]
            if kind not in WRAPPER_KINDS:
                raise ConfigError(f"unknown family wrapper '{kind}' in {raw!r}")
            return FamilySpec(kind=kind, base=parse_family(wrapped["inner"]), source=raw)
        simple = _SIMPLE.match(raw)
        if simple:
            kind = _ALIASES.get(simple["kind"], simple["kind"])
            if kind not in DISCRETE_KINDS + CONTINUOUS_KINDS or kind == "table":
                raise ConfigError(f"unknown law '{simple['kind']}' in {raw!r}")
            return FamilySpec(kind=kind, param=float(simple["param"]), source=raw)
    except ValueError as err:
        raise ConfigError(f"invalid family {raw!r}: {err}") from None
    presets = preset_families()
    if raw in presets:
        return parse_family(presets[raw]["spec"])
    raise ConfigError(
        f"cannot parse family {raw!r}; expected e.g. 'geometric:0.5', 'edge_lpp(poisson:1)', "
        f"'table@file.json', a JSON document or one of: {', '.join(sorted(presets))}"
    )


def coerce_family(value: Any) -> Any:
    """pydantic ``BeforeValidator`` hook: strings become FamilySpec."""
    if isinstance(value, str):
        return parse_family(value)
    return value


@lru_cache(maxsize=1)
def preset_families() -> Dict[str, Dict[str, str]]:
    """Named families shipped with the package."""
    path = resources.files("glpp").joinpath("data", "preset_families.json")
    return json.loads(path.read_text(encoding="utf-8"))


def preset_rows() -> List[Tuple[str, str, str]]:
    return [(name, entry["spec"], entry["description"]) for name, entry in preset_families().items()]
