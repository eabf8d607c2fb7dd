"""FastAPI service wrapping the core package.

Sweeps run as background jobs (they can take minutes); analytic grids,
sample rendering and comparisons answer synchronously.
"""
from __future__ import annotations

import csv
import io

from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse

from .. import __version__, montecarlo, results
from ..config import ConfigError
from ..montecarlo import RNG_NAME, ResourceAbort
from ..runs import analytic_grid_rows, compare_rows, render_sample
from .jobs import JobRegistry
from .schemas import (
    AnalyticRequest,
    AnalyticResponse,
    CompareRequest,
    CompareResponse,
    HealthResponse,
    JobCreated,
    JobStatus,
    RenderRequest,
    RenderResponse,
    SimulateRequest,
    VersionResponse,
)


def create_app() -> FastAPI:
    app = FastAPI(title="geonet", version=__version__)
    registry = JobRegistry()
    app.state.jobs = registry

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse()

    @app.get("/version", response_model=VersionResponse)
    def version():
        return VersionResponse(name="geonet", version=__version__, rng=RNG_NAME)

    @app.post("/simulate", response_model=JobCreated)
    def simulate(request: SimulateRequest):
        try:
            experiment = request.config.to_experiment()
        except (ConfigError, ResourceAbort) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        parallelism = max(1, request.parallelism or request.config.parallelism or 1)
        job = registry.submit(lambda: montecarlo.run_sweep(experiment, parallelism))
        return JobCreated(job_id=job.job_id)

    def _job_or_404(job_id: str):
        job = registry.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"no such job {job_id}")
        return job

    @app.get("/jobs/{job_id}", response_model=JobStatus)
    def job_status(job_id: str):
        job = _job_or_404(job_id)
        return JobStatus(job_id=job.job_id, status=job.status, error=job.error)

    @app.get("/jobs/{job_id}/result")
    def job_result(job_id: str):
        job = _job_or_404(job_id)
        if job.status != "done":
            raise HTTPException(status_code=409, detail=f"job is {job.status}")
        return results.sweep_json_payload(job.result)

    @app.get("/jobs/{job_id}/csv", response_class=PlainTextResponse)
    def job_csv(job_id: str):
        job = _job_or_404(job_id)
        if job.status != "done":
            raise HTTPException(status_code=409, detail=f"job is {job.status}")
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=results.SWEEP_CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(results.sweep_rows(job.result))
        return buf.getvalue()

    @app.post("/analytic", response_model=AnalyticResponse)
    def analytic_eval(request: AnalyticRequest):
        try:
            return AnalyticResponse(rows=analytic_grid_rows(request.config))
        except (ConfigError, NotImplementedError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    @app.post("/render-sample", response_model=RenderResponse)
    def render(request: RenderRequest):
        try:
            rendered = render_sample(request.config)
        except (ConfigError, ResourceAbort) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        sample, labels = rendered["sample"], rendered["labels"]
        return RenderResponse(
            n=rendered["n"],
            positions=[[float(c) for c in p] for p in sample.positions],
            components=[int(x) for x in labels],
            edges=[[int(i), int(j)] for i, j in sample.edges],
        )

    @app.post("/compare", response_model=CompareResponse)
    def compare(request: CompareRequest):
        try:
            points, summary = compare_rows(request.sim_rows, request.analytic_rows)
        except ConfigError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return CompareResponse(points=points, summary=summary)

    return app


app = create_app()
