"""Experiment configuration: a versioned YAML/JSON document validated with pydantic.

A configuration names a default model and domain, global tolerances, and a
list of checks.  Each check entry carries its own parameters; anything left
out falls back to the defaults below.  ``config_hash`` fingerprints the
canonical JSON form and is embedded in every output file.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Annotated, Literal, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from levylab.domain import Domain
from levylab.errors import ParameterError
from levylab.models import Kind, LevyModel, check_hypotheses

SCHEMA_VERSION = 1
OUT_ENV = "LEVYLAB_OUT"
DEFAULT_OUT = "levylab-out"


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ModelBlock(_Block):
    kind: Literal["alpha_stable", "tempered_stable", "truncated_stable", "brownian_reference"] = "alpha_stable"
    alpha: float | None = 1.0
    theta: float | None = None
    R: float | None = None
    dimension: Literal[1, 2] = 1
    scale: float = 1.0

    def build(self) -> LevyModel:
        try:
            return LevyModel(Kind(self.kind), alpha=self.alpha if self.alpha is not None else 1.0,
                             theta=self.theta, R=self.R, dimension=self.dimension, scale=self.scale)
        except ParameterError as exc:
            raise ValueError(str(exc)) from None

    @model_validator(mode="after")
    def _valid(self):
        self.build()
        return self


class DomainBlock(_Block):
    a: float = Field(1.0, gt=0)
    b: float | None = Field(None, gt=0)

    def build(self) -> Domain:
        return Domain(self.a, self.b)


class Tolerances(_Block):
    z_pass: float = 3.0
    solver: float = 1e-10
    sign: float = 1e-12
    identity_residual: float = 1e-3
    identity_ratio: float = 0.6
    eigen_relative: float = 1e-3
    eigen_function: float = 1e-3
    eigen_limit: float = 1e-3


def _stable(alphas):
    return [ModelBlock(alpha=a) for a in alphas]


class ProfileCheck(_Block):
    """Shared parameters of the one-dimensional survival-profile checks."""

    models: list[ModelBlock] = Field(default_factory=lambda: _stable([0.5, 1.0, 1.5]))
    times: list[float] = [0.1, 1.0, 5.0]
    backend: Literal["mc", "pde", "both"] = "both"
    N: int = 512
    n: int = 1_000_000
    eps: float | None = 1e-3
    profile_points: int = 33
    triples: int = 17
    # second Monte Carlo run at 2 eps to size the truncation bias in the agreement check
    bias_run: bool = True


class Theorem1Monotone(ProfileCheck):
    id: Literal["theorem1_monotone"]


class Theorem1Midconcave(ProfileCheck):
    id: Literal["theorem1_midconcave"]


class Theorem2Box(_Block):
    id: Literal["theorem2_box"]
    model: ModelBlock = ModelBlock(dimension=2)
    domain: DomainBlock = DomainBlock(a=1.0, b=1.0)
    offsets: list[float] = [0.0, 0.3, 0.6]
    t: float = 1.0
    n: int = 100_000
    eps: float | None = None
    points: int = 39
    N: int = 64
    spots: list[tuple[float, float]] = [(0.0, 0.0), (0.5, 0.0), (-0.5, 0.3), (0.25, 0.3), (0.0, 0.6)]


class SignStructure(_Block):
    id: Literal["prop31_sign"]
    models: list[ModelBlock] = Field(default_factory=lambda: _stable([0.5, 1.0, 1.5]) + [
        ModelBlock(kind="truncated_stable", alpha=1.0, R=0.4),
        ModelBlock(kind="tempered_stable", alpha=1.0, theta=2.0)])
    windows: list[tuple[float, float]] = [(-1.0, 1.0), (-1.0, 0.5), (-1.0, -0.25)]
    s_values: list[float] = [0.1, 0.5, 1.0]
    N: int = 256
    t: float = 0.5


class DifferenceIdentity(_Block):
    id: Literal["difference_identity"]
    model: ModelBlock = ModelBlock()
    window: tuple[float, float] = (-1.0, 0.5)
    x: float = 0.25
    t: float = 0.5
    # (N, time panels), refined together
    levels: list[tuple[int, int]] = [(128, 32), (256, 64), (512, 128), (1024, 256)]
    target: tuple[int, int] = (512, 128)


class IkedaWatanabe(_Block):
    id: Literal["ikeda_watanabe"]
    model: ModelBlock = ModelBlock()
    x: float = 0.3
    n: int = 1_000_000
    eps: float | None = None
    N: int = 1024
    rects: list[tuple[tuple[float, float], tuple[float, float]]] = [
        ((0.0, 1.0), (1.0, 2.0)),
        ((0.0, float("inf")), (1.0, float("inf"))),
        ((0.0, float("inf")), (float("-inf"), -1.0)),
        ((0.1, 0.5), (-2.0, -1.0)),
        ((1.0, float("inf")), (1.0, 3.0)),
    ]


class BrownianValidation(_Block):
    id: Literal["brownian_validation"]
    N: int = 1024


class EigenShape(_Block):
    id: Literal["corollary1_eigen_shape"]
    models: list[ModelBlock] = Field(default_factory=lambda: _stable([0.5, 1.0, 1.5]))
    N: int = 512


class EigenShape2D(_Block):
    id: Literal["corollary2_eigen_shape"]
    model: ModelBlock = ModelBlock(dimension=2)
    domain: DomainBlock = DomainBlock(a=1.0, b=1.0)
    offsets: list[float] = [0.0, 0.3, 0.6]
    N: int = 32


class EigenLimit(_Block):
    id: Literal["eigen_limit"]
    model: ModelBlock = ModelBlock()
    N: int = 512
    times: list[float] = [0.5, 1.0, 2.0, 5.0]


class SurvivalRun(_Block):
    """A plain survival estimate (no verdict beyond backend agreement)."""

    id: Literal["survival"]
    model: ModelBlock | None = None
    backend: Literal["mc", "pde", "both"] = "mc"
    points: list[float] = [0.0]
    times: list[float] = [1.0]
    n: int = 100_000
    eps: float | None = None
    N: int = 512


CheckSpec = Annotated[Union[Theorem1Monotone, Theorem1Midconcave, Theorem2Box, SignStructure,
                            DifferenceIdentity, IkedaWatanabe, BrownianValidation, EigenShape,
                            EigenShape2D, EigenLimit, SurvivalRun], Field(discriminator="id")]


class ExperimentConfig(_Block):
    schema_version: int = SCHEMA_VERSION
    name: str = "experiment"
    seed: int = 0
    jobs: int = Field(1, ge=1)
    validation_mode: bool = False
    output_dir: str | None = None
    model: ModelBlock = ModelBlock()
    domain: DomainBlock = DomainBlock()
    tolerances: Tolerances = Tolerances()
    checks: list[CheckSpec] = Field(default_factory=list)

    @field_validator("schema_version")
    @classmethod
    def _version(cls, v):
        if v != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {v} (this build reads {SCHEMA_VERSION})")
        return v

    def models(self) -> list[LevyModel]:
        """Every model the configuration would run."""
        out = [self.model.build()]
        for c in self.checks:
            for name in ("models", "model"):
                v = getattr(c, name, None)
                if isinstance(v, list):
                    out.extend(m.build() for m in v)
                elif isinstance(v, ModelBlock):
                    out.append(v.build())
            if c.id == "brownian_validation":
                out.append(LevyModel.brownian())
        return list(dict.fromkeys(out))

    def canonical(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.model_dump(mode="json"), sort_keys=False)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        data = self.model_dump()
        data.update({k: v for k, v in kw.items() if v is not None})
        return ExperimentConfig.model_validate(data)

    def out_dir(self, override: str | None = None) -> Path:
        return Path(override or self.output_dir or os.environ.get(OUT_ENV) or DEFAULT_OUT)


class ConfigError(ValueError):
    """Configuration that does not validate; ``errors`` lists the offending fields."""

    def __init__(self, message: str, errors=()):
        super().__init__(message)
        self.errors = list(errors)


class HypothesisRefusal(RuntimeError):
    """A model violates the standing hypotheses and validation mode is off."""


def parse_config(data: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        fields = [".".join(str(p) for p in e["loc"]) + ": " + e["msg"] for e in exc.errors()]
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(fields), fields) from None


def load_config(path: str | Path) -> ExperimentConfig:
    text = Path(path).read_text()
    data = yaml.safe_load(text) or {}
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    return parse_config(data)


def gate_hypotheses(config: ExperimentConfig) -> list[dict]:
    """Hypothesis reports per model; refuses nonconforming models outside validation mode."""
    reports = []
    for m in config.models():
        rep = check_hypotheses(m)
        reports.append({"model": m.to_dict(), "conforming": rep.conforming,
                        "violations": rep.violations()})
        if not rep.conforming and not config.validation_mode:
            raise HypothesisRefusal(
                f"{m.describe()} violates the hypotheses: {', '.join(rep.violations())}; "
                "enable validation mode to run it as a solver check")
    return reports
