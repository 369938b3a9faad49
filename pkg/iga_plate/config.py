"""
Run configuration for the command-line driver.

JSON text validated by pydantic models before any computation. Unknown keys
are rejected with a close-match suggestion; case names are checked against
the case router.
"""

from __future__ import annotations

import difflib
import json
from pathlib import Path
from typing import Annotated, Literal

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PositiveFloat,
    PositiveInt,
    ValidationError,
    field_validator,
    model_validator,
)

from iga_plate.assembly import MaterialParams
from iga_plate.core import ConfigError
from iga_plate.expressions import parse_expression
from iga_plate.services.case_router import (
    VALID_CASES,
    get_default_levels,
    get_default_thickness,
)
from iga_plate.spaces import BoundaryKind, BoundarySpec

# ─── Defaults ────────────────────────────────────────────────────────────────
DEFAULT_P      = 3
DEFAULT_TOL    = 1e-10
DEFAULT_LEVEL  = 16
DEFAULT_T      = 1e-3

KEY_SYNONYMS: dict[str, str] = {
    "degree":     "p",
    "degre":      "p",
    "deg":        "p",
    "regularity": "alpha",
    "thickness":  "t",
    "quadrature": "q",
    "tolerance":  "tol",
}

BoundaryName = Literal["clamped", "simply_supported_hard", "simply_supported_soft", "free"]


# ─── Models ──────────────────────────────────────────────────────────────────

class MaterialConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    E:  PositiveFloat = 1.092e7
    nu: float         = Field(0.3, gt=0.0, lt=0.5)
    k:  PositiveFloat = 5.0 / 6.0

    def to_params(self) -> MaterialParams:
        return MaterialParams(E=self.E, nu=self.nu, k_shear=self.k)


class BoundaryConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    u0: BoundaryName = "clamped"
    u1: BoundaryName = "clamped"
    v0: BoundaryName = "clamped"
    v1: BoundaryName = "clamped"

    @model_validator(mode="after")
    def _not_all_free(self) -> "BoundaryConfig":
        if all(getattr(self, side) == "free" for side in ("u0", "u1", "v0", "v1")):
            raise ValueError("at least one side must be clamped or simply supported")
        return self

    def to_spec(self) -> BoundarySpec:
        return BoundarySpec(
            BoundaryKind(self.u0), BoundaryKind(self.u1), BoundaryKind(self.v0), BoundaryKind(self.v1),
        )


class CustomProblemConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    geometry:        str | None     = None      # control-net file; None -> unit square
    boundary:        BoundaryConfig = Field(default_factory=BoundaryConfig)
    load:            str            = "1"
    reference_level: PositiveInt    = 64

    @field_validator("load")
    @classmethod
    def _parseable(cls, value: str) -> str:
        try:
            parse_expression(value)
        except ConfigError as exc:
            raise ValueError(str(exc)) from exc
        return value


class OutputConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    directory:  str         = "results"
    csv_name:   str         = "convergence.csv"
    field_name: str         = "field.txt"
    samples:    PositiveInt = Field(21, ge=2)


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    command:         Literal["solve", "convergence", "verify"]
    case:            str | None                 = None
    custom:          CustomProblemConfig | None = None
    p:               int                        = Field(DEFAULT_P, ge=2)
    alpha:           int | None                 = None
    t:               PositiveFloat | None       = None
    levels:          list[PositiveInt] | None   = None
    level:           PositiveInt                = DEFAULT_LEVEL
    q:               Annotated[int, Field(ge=1, le=30)] | None = None
    tol:             PositiveFloat              = DEFAULT_TOL
    reference_level: PositiveInt | None         = None
    material:        MaterialConfig             = Field(default_factory=MaterialConfig)
    output:          OutputConfig               = Field(default_factory=OutputConfig)

    @field_validator("case")
    @classmethod
    def _known_case(cls, value: str | None) -> str | None:
        if value is not None and value not in VALID_CASES:
            raise ValueError(f"unknown case '{value}'. Valid choices: {VALID_CASES}")
        return value

    @field_validator("levels")
    @classmethod
    def _increasing(cls, value: list[int] | None) -> list[int] | None:
        if value is not None:
            if not value:
                raise ValueError("levels must not be empty")
            if any(b <= a for a, b in zip(value[:-1], value[1:])):
                raise ValueError(f"levels must be strictly increasing, got {value}")
        return value

    @model_validator(mode="after")
    def _fill_defaults(self) -> "RunConfig":
        if self.command != "verify":
            if (self.case is None) == (self.custom is None):
                raise ValueError(f"command '{self.command}' needs exactly one of 'case' or 'custom'")
        if self.alpha is None:
            self.alpha = self.p - 1
        if not 1 <= self.alpha <= self.p - 1:
            raise ValueError(f"alpha must satisfy 1 <= alpha <= p-1 = {self.p - 1}, got {self.alpha}")
        if self.q is None:
            self.q = self.p + 1
        if self.t is None:
            self.t = get_default_thickness(self.case) if self.case else DEFAULT_T
        if self.levels is None:
            self.levels = get_default_levels(self.case) if self.case else [4, 8, 16]
        return self


# ─── Parsing ─────────────────────────────────────────────────────────────────

def _all_keys(model: type[BaseModel]) -> list[str]:
    return list(model.model_fields.keys())


def suggest_key(key: str, valid: list[str]) -> str | None:
    if key in KEY_SYNONYMS and KEY_SYNONYMS[key] in valid:
        return KEY_SYNONYMS[key]
    matches = difflib.get_close_matches(key, valid, n=1, cutoff=0.6)
    return matches[0] if matches else None


_SECTION_MODELS: dict[str, type[BaseModel]] = {
    "material": MaterialConfig,
    "custom":   CustomProblemConfig,
    "output":   OutputConfig,
    "boundary": BoundaryConfig,
}


def _describe(error: dict) -> str:
    loc = [str(part) for part in error["loc"]]
    key = ".".join(loc) or "<root>"
    if error["type"] == "extra_forbidden":
        parent = _SECTION_MODELS.get(loc[-2], RunConfig) if len(loc) > 1 else RunConfig
        hint = suggest_key(loc[-1], _all_keys(parent))
        suffix = f" (did you mean '{hint}'?)" if hint else ""
        return f"unknown key '{key}'{suffix}"
    return f"key '{key}': {error['msg']}"


def parse_config(text: str) -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"configuration is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        messages = [_describe(err) for err in exc.errors()]
        raise ConfigError("invalid configuration: " + "; ".join(messages)) from exc


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
    return parse_config(text)
