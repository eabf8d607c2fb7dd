"""Request/response models for the HTTP service."""
from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict

from ..config import AnalyticConfig, SweepConfig


class HealthResponse(BaseModel):
    status: Literal["ok"] = "ok"


class VersionResponse(BaseModel):
    name: str
    version: str
    rng: str


class SimulateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: SweepConfig
    parallelism: Optional[int] = None


class JobCreated(BaseModel):
    job_id: str


class JobStatus(BaseModel):
    job_id: str
    status: Literal["pending", "running", "done", "error"]
    error: Optional[str] = None


class AnalyticRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: AnalyticConfig


class AnalyticResponse(BaseModel):
    rows: list[dict]


class RenderRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: SweepConfig


class RenderResponse(BaseModel):
    n: int
    positions: list[list[float]]
    components: list[int]
    edges: list[list[int]]


class CompareRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    sim_rows: list[dict]
    analytic_rows: list[dict]


class CompareResponse(BaseModel):
    points: list[dict]
    summary: dict
