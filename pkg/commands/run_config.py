"""
run_config.py

Validated run configuration shared by every command, plus the small
plumbing the commands have in common (metric loading, output bundle).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from metric_catalog import MetricSpec, default_origin, parse_metric_spec, parse_preset_string
from utils.constants import DEFAULT_S_MAX, RK4_STEPS
from utils.helpers import load_text

COMMANDS = ("curvature", "normal", "conjugate", "killing", "algebra")
METRIC_COMMANDS = ("curvature", "normal", "conjugate")


class RunConfig(BaseModel):
    """Everything a command needs; the seed fixes any sampled direction or point set."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    command: Literal["curvature", "normal", "conjugate", "killing", "algebra"]
    preset: Optional[str] = None
    metric: Optional[str] = None
    points: list[list[float]] = Field(default_factory=list)
    origin: Optional[list[float]] = None
    z: list[list[float]] = Field(default_factory=list)
    dirs: int = Field(default=8, ge=1)
    seed: int = Field(default=0, ge=0)
    tol: Optional[float] = Field(default=None, gt=0)
    s_max: float = Field(default=DEFAULT_S_MAX, gt=0)
    steps: int = Field(default=RK4_STEPS, ge=8)
    fd_check: bool = False
    n: int = Field(default=2, ge=2)
    K: float = 1.0
    vectors: list[list[float]] = Field(default_factory=list)
    samples: int = Field(default=8, ge=3)
    signature: Optional[str] = None
    reps: list[str] = Field(default_factory=lambda: ["vector"])
    out: Optional[str] = None
    format: Literal["json", "csv"] = "json"
    timing: bool = False

    @field_validator("steps")
    @classmethod
    def _even_steps(cls, value: int) -> int:
        if value % 4:
            raise ValueError("steps must be a multiple of 4")
        return value

    @field_validator("K")
    @classmethod
    def _nonzero_curvature(cls, value: float) -> float:
        if value == 0:
            raise ValueError("K must be non-zero for the embedding")
        return value

    @model_validator(mode="after")
    def _metric_source(self) -> "RunConfig":
        if self.command in METRIC_COMMANDS:
            if (self.preset is None) == (self.metric is None):
                raise ValueError(f"{self.command} needs exactly one of --preset or --metric")
        elif self.preset is not None or self.metric is not None:
            raise ValueError(f"{self.command} takes no metric source")
        if self.command == "normal" and not self.z:
            raise ValueError("normal needs at least one --z")
        if self.command == "algebra" and not self.signature:
            raise ValueError("algebra needs --signature")
        return self

    def echo(self) -> dict:
        """Command echo written into the report; output routing is left out."""
        return self.model_dump(exclude={"out", "timing"})


@dataclass
class CommandOutput:
    """Results and invariant lines of one run, with its long-form table."""

    results: dict
    invariants: list[dict]
    table: list[dict] = field(default_factory=list)
    columns: list[str] = field(default_factory=list)


def load_spec(config: RunConfig) -> MetricSpec:
    if config.preset is not None:
        return parse_preset_string(config.preset)
    return parse_metric_spec(load_text(config.metric))


def origin_for(config: RunConfig, spec: MetricSpec):
    return config.origin if config.origin is not None else default_origin(spec)
