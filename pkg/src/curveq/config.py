"""Analysis configuration shared by the CLI flags and config files."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from curveq.errors import ConfigError
from curveq.models import Family

FamilyName = Literal["linear", "quadratic", "emax", "logistic", "exponential"]


class AnalysisConfig(BaseModel):
    """Every setting any subcommand reads.

    Field names double as config-file keys and, with ``_`` replaced by
    ``-``, as command-line flags.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    # analysis inputs
    data: Optional[str] = None
    model1: FamilyName = "emax"
    model2: FamilyName = "emax"
    dose_min: Optional[float] = None
    dose_max: Optional[float] = None
    grid_points: int = 1001
    alpha: float = 0.05
    delta: Optional[float] = None
    eta: Optional[float] = None
    clinical_delta: Optional[float] = None
    placebo_adjusted: bool = False
    quantile: Literal["normal", "t"] = "normal"
    variance_divisor: Literal["n-p", "n"] = "n-p"
    # simulation
    scenario: Optional[str] = None
    kind: Literal["curve_max_diff", "med_diff"] = "curve_max_diff"
    delta1: Optional[float] = None
    sigma2: float = 1.0
    n: int = 150
    reps: int = 2000
    full_scale: bool = False
    seed: int = 0
    margin: Optional[float] = None
    # outputs
    report: Optional[str] = None
    band_csv: Optional[str] = None
    output_format: Literal["table", "json"] = "table"

    @field_validator("alpha")
    @classmethod
    def _alpha(cls, v):
        if not 0.0 < v < 0.5:
            raise ValueError("alpha must lie in (0, 0.5)")
        return v

    @field_validator("grid_points")
    @classmethod
    def _grid(cls, v):
        if v < 2:
            raise ValueError("grid_points must be at least 2")
        return v

    @field_validator("delta")
    @classmethod
    def _delta(cls, v):
        if v is not None and not v > 0:
            raise ValueError("delta must be positive")
        return v

    @field_validator("eta", "margin")
    @classmethod
    def _nonneg(cls, v):
        if v is not None and v < 0:
            raise ValueError("margin must be nonnegative")
        return v

    @field_validator("clinical_delta")
    @classmethod
    def _clinical(cls, v):
        if v is not None and v == 0:
            raise ValueError("clinical_delta must be nonzero")
        return v

    @field_validator("sigma2")
    @classmethod
    def _sigma2(cls, v):
        if not v > 0:
            raise ValueError("sigma2 must be positive")
        return v

    @field_validator("n", "reps")
    @classmethod
    def _positive(cls, v):
        if v < 1:
            raise ValueError("must be a positive integer")
        return v

    @model_validator(mode="after")
    def _range(self):
        if self.dose_min is not None and self.dose_max is not None and not self.dose_min < self.dose_max:
            raise ValueError("dose_min must be below dose_max")
        return self

    @property
    def families(self) -> tuple[Family, Family]:
        return Family(self.model1), Family(self.model2)

    @property
    def replications(self) -> int:
        return 10_000 if self.full_scale else self.reps


def load_config_file(path: str | Path) -> dict:
    """Read a flat JSON object of AnalysisConfig fields."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    nested = [k for k, v in raw.items() if isinstance(v, (dict, list))]
    if nested:
        raise ConfigError(f"config file {path} must be flat; nested values under {nested}")
    return raw


def build_config(file_values: dict | None = None, flag_values: dict | None = None) -> AnalysisConfig:
    """Merge config-file values with explicit flags (flags win) and validate."""
    merged = dict(file_values or {})
    merged.update({k: v for k, v in (flag_values or {}).items() if v is not None})
    try:
        return AnalysisConfig(**merged)
    except ValidationError as exc:
        lines = []
        for err in exc.errors():
            loc = ".".join(str(p) for p in err["loc"]) or "config"
            lines.append(f"{loc}: {err['msg']}")
        raise ConfigError("invalid configuration: " + "; ".join(lines)) from None
