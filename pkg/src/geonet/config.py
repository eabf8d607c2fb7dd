"""JSON configuration schema, shared by the CLI and the HTTP service.

A single document describes a sweep (or a one-cell render), an analytic
grid evaluation, or both.  eta = "inf" denotes the deterministic disk
limit of a Rayleigh entry and serializes back to the literal string "inf".
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .channel import ConnectionModel, Disk, Rayleigh
from .geometry import Domain
from .montecarlo import DEFAULT_OBSERVABLES, ExperimentConfig


class ConfigError(ValueError):
    """Invalid configuration: maps to CLI exit code 2."""


class DomainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dimension: int = 2
    side: float

    def to_core(self) -> Domain:
        return Domain(self.dimension, self.side)


class ChannelConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", protected_namespaces=())

    model: Literal["rayleigh", "disk"]
    beta: Optional[float] = None
    eta: Optional[Union[float, Literal["inf"]]] = None
    r0: Optional[float] = None

    @model_validator(mode="after")
    def _check_fields(self):
        if self.model == "rayleigh":
            if self.beta is None or self.eta is None:
                raise ValueError("rayleigh entries need beta and eta")
        else:
            if self.r0 is None:
                raise ValueError("disk entries need r0")
        return self

    def to_core(self) -> ConnectionModel:
        if self.model == "disk":
            return Disk(self.r0)
        if self.eta == "inf":
            # eta -> inf at fixed beta: the limiting connection range is 1
            return Disk(self.beta ** -0.0)
        return Rayleigh(self.beta, float(self.eta))


class SweepConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    domain: DomainConfig
    models: list[ChannelConfig] = Field(min_length=1)
    densities: list[float] = Field(min_length=1)
    k_max: int = 4
    trials: int = 10_000
    master_seed: int = 1
    observables: list[str] = Field(default_factory=lambda: sorted(DEFAULT_OBSERVABLES))
    pair_sampling: Literal["auto", "exact", "grid"] = "auto"
    parallelism: Optional[int] = None

    def to_experiment(
        self, trials: Optional[int] = None, master_seed: Optional[int] = None
    ) -> ExperimentConfig:
        # ResourceAbort subclasses RuntimeError and passes through untouched
        try:
            return ExperimentConfig(
                domain=self.domain.to_core(),
                models=tuple(m.to_core() for m in self.models),
                densities=tuple(float(r) for r in self.densities),
                k_max=self.k_max,
                trials=self.trials if trials is None else trials,
                master_seed=self.master_seed if master_seed is None else master_seed,
                observables=frozenset(self.observables),
                pair_sampling=self.pair_sampling,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


FORMULAS = ("mean_degree", "p_md", "p_fc1", "pi1", "pi1_asym", "isolated_node")


class QuadratureConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    method: Literal["adaptive", "tensor-grid"] = "adaptive"
    rel_tol: float = 1e-8
    max_evals: int = 500_000


class AnalyticConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    formula: Literal["mean_degree", "p_md", "p_fc1", "pi1", "pi1_asym", "isolated_node"]
    domain: DomainConfig
    models: list[ChannelConfig] = Field(min_length=1)
    densities: list[float] = Field(min_length=1)
    k: int = 1
    quadrature: QuadratureConfig = Field(default_factory=QuadratureConfig)


def _load_json(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc


def _format_validation_error(path, exc: ValidationError) -> str:
    lines = [f"{path}: invalid configuration"]
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"  field {loc}: {err['msg']}")
    return "\n".join(lines)


def load_sweep_config(path) -> SweepConfig:
    payload = _load_json(path)
    try:
        return SweepConfig.model_validate(payload)
    except ValidationError as exc:
        raise ConfigError(_format_validation_error(path, exc)) from exc


def load_analytic_config(path) -> AnalyticConfig:
    payload = _load_json(path)
    try:
        return AnalyticConfig.model_validate(payload)
    except ValidationError as exc:
        raise ConfigError(_format_validation_error(path, exc)) from exc
